"""Probe: per-seed access-scheme gaps at one power point."""
import sys

sys.path.insert(0, "tests")
import numpy as np
from conftest import table1_config

from scmaran import FadingModel
from scmaran.asm import run_asm, ScenarioInfeasible
from scmaran.scma import build_codebook_map, ofdma_map
from scmaran.channel import generate_channels
from scmaran.topology import generate_topology

scale = 0.75
base = table1_config()
base = base.with_updates(power_caps_w=tuple(p * scale for p in base.power_caps_w))
fading = FadingModel("rayleigh")

for seed in range(10):
    row = [f"seed {seed}:"]
    for access in ("scma", "ofdma"):
        cfg = base
        if access == "ofdma":
            cfg = base.with_updates(
                num_codebooks=base.num_subcarriers, codeword_degree=1, reuse_limit=1
            )
            cmap = ofdma_map(cfg.num_subcarriers)
        else:
            cmap = build_codebook_map(
                cfg.num_subcarriers, cfg.num_codebooks, cfg.codeword_degree
            )
        topo = generate_topology(cfg, seed, "uniform")
        ch = generate_channels(topo, cfg, fading, seed)
        try:
            sol = run_asm(
                ch, cmap, cfg, topo.slice_of_user, rrh_user_distances=topo.distances()
            )
            row.append(
                f"{access} {sol.objective:7.3f} it{sol.iterations:2d} cv{int(sol.converged)}"
            )
        except ScenarioInfeasible:
            row.append(f"{access}   INFEAS       ")
    print("  ".join(row), flush=True)
