"""Probe: anatomy of one seed solved under both access schemes at 40 W."""
import sys

sys.path.insert(0, "tests")
import numpy as np
from conftest import table1_config

from scmaran import FadingModel, aggregate_report
from scmaran.harness import run_point
from scmaran.asm import run_asm, AsmOptions, ScenarioInfeasible
from scmaran.scma import build_codebook_map, ofdma_map
from scmaran.channel import generate_channels
from scmaran.topology import generate_topology

config = table1_config()
fading = FadingModel("rayleigh")
seed = 0

for access in ("scma", "ofdma"):
    cfg = config
    if access == "ofdma":
        cfg = config.with_updates(
            num_codebooks=config.num_subcarriers, codeword_degree=1, reuse_limit=1
        )
        cmap = ofdma_map(cfg.num_subcarriers)
    else:
        cmap = build_codebook_map(
            cfg.num_subcarriers, cfg.num_codebooks, cfg.codeword_degree
        )
    topo = generate_topology(cfg, seed, "uniform")
    ch = generate_channels(topo, cfg, fading, seed)
    sol = run_asm(ch, cmap, cfg, topo.slice_of_user, rrh_user_distances=topo.distances())
    rep = sol.report
    triples = sol.assignment.triples()
    sched_rates = sorted(
        (float(rep.r_lower[b, c, k]), b, c, k) for b, c, k in triples
    )
    print(f"\n=== {access} seed {seed} ===")
    print(f"objective {sol.objective:.3f}  iters {sol.iterations}  converged {sol.converged}")
    print(f"scheduled {len(triples)} triples: " + ", ".join(
        f"(b{b},c{c},k{k}):{r:.2f}" for r, b, c, k in sched_rates))
    print(f"per_rrh_power { np.array2string(rep.per_rrh_power, precision=2)} caps {cfg.power_caps_w}")
    print(f"fronthaul { np.array2string(rep.fronthaul_load, precision=2)} caps {cfg.fronthaul_caps_bps_hz}")
    print(f"per_slice { np.array2string(rep.per_slice, precision=2)}")
    ratio = np.divide(rep.r_upper, rep.r_lower, out=np.zeros_like(rep.r_upper),
                      where=rep.r_lower > 0)
    sched_ratio = [float(ratio[b, c, k]) for b, c, k in triples]
    print(f"r_upper/r_lower on schedule: mean {np.mean(sched_ratio):.3f} max {np.max(sched_ratio):.3f}")
