"""Probe: greedy-start feasibility rate per user count at Table-I scale."""
import sys

sys.path.insert(0, "tests")
from conftest import table1_config

from scmaran import FadingModel, ScenarioInfeasible, initial_point
from scmaran.channel import generate_channels
from scmaran.topology import generate_topology
from scmaran.scma import build_codebook_map
from scmaran.harness import apply_sweep

base = table1_config()
fading = FadingModel("rayleigh", 3.0)
NSEEDS = 200

for k in (4, 6, 8, 10):
    config, fad, _ = apply_sweep(base, fading, "num_users", k)
    cmap = build_codebook_map(
        config.num_subcarriers, config.num_codebooks, config.codeword_degree
    )
    bad = []
    for seed in range(NSEEDS):
        topo = generate_topology(config, seed, "uniform")
        ch = generate_channels(topo, config, fad, seed)
        try:
            initial_point(ch, cmap, config, topo.slice_of_user)
        except ScenarioInfeasible:
            bad.append(seed)
    print(
        f"K={k:2d} slices={config.slice_sizes}: infeasible {len(bad)}/{NSEEDS}"
        f" = {len(bad)/NSEEDS:.3f}  first bad: {bad[:12]}",
        flush=True,
    )
