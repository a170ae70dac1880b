"""Probe: dissect the greedy start failure on one seed."""
import sys

sys.path.insert(0, "tests")
import numpy as np
from conftest import table1_config

from scmaran import FadingModel, aggregate_report
from scmaran.asm import initial_point, ScenarioInfeasible
from scmaran.rate import rate_of
from scmaran.scma import build_codebook_map
from scmaran.channel import generate_channels
from scmaran.topology import generate_topology

scale = 0.75
cfg = table1_config()
cfg = cfg.with_updates(power_caps_w=tuple(p * scale for p in cfg.power_caps_w))
fading = FadingModel("rayleigh")
seed = 5

cmap = build_codebook_map(cfg.num_subcarriers, cfg.num_codebooks, cfg.codeword_degree)
topo = generate_topology(cfg, seed, "uniform")
ch = generate_channels(topo, cfg, fading, seed)

print("slice_of_user:", topo.slice_of_user)
print("distances (m), macro row first:")
print(np.array2string(topo.distances(), precision=0, max_line_width=120))
try:
    assignment, W = initial_point(ch, cmap, cfg, topo.slice_of_user)
    rep = aggregate_report(W, assignment, cmap, ch, cfg, topo.slice_of_user)
    print("greedy OK, per_slice", rep.per_slice, "triples", assignment.triples())
except ScenarioInfeasible as e:
    print("INFEASIBLE:", e.args)

# replay the greedy by hand to see the schedule it builds
B, N, K, M = ch.h.shape
C = cmap.num_codebooks
sigma = cfg.noise_power
share = max(1, -(-K // B))
p_est = np.asarray(cfg.power_caps_w, dtype=float) / share
h_norm2 = np.sum(np.abs(ch.h) ** 2, axis=-1)
num = np.maximum(0.0, h_norm2 - ch.theta) * p_est[:, None, None]
den = (h_norm2 + ch.theta) * p_est[:, None, None]
best_low = np.zeros((B, C, K))
best_up = np.zeros((B, C, K))
for c in range(C):
    supp = cmap.support(c)
    best_low[:, c, :] = num[:, supp, :].max(axis=1)
    best_up[:, c, :] = den[:, supp, :].max(axis=1)
est_low = rate_of(best_low / sigma)
est_up = rate_of(best_up / sigma)

order = sorted(range(K), key=lambda k: (-est_low[:, :, k].max(initial=0.0), k))
print("\ngreedy order (user, slice, best est_low, best est_up@that bc):")
reuse_left = np.full(N, cfg.reuse_limit, dtype=np.int64)
fh_left = np.asarray(cfg.fronthaul_caps_bps_hz, dtype=float).copy()
rho = np.zeros((B, C, K), dtype=np.int8)
for k in order:
    cands = [(b, c) for b in range(B) for c in range(C) if est_low[b, c, k] > 0.0]
    cands.sort(key=lambda bc: (-est_low[bc[0], bc[1], k], bc))
    got = None
    for b, c in cands:
        supp = cmap.support(c)
        if np.all(reuse_left[supp] >= 1) and est_up[b, c, k] <= fh_left[b]:
            rho[b, c, k] = 1
            reuse_left[supp] -= 1
            fh_left[b] -= est_up[b, c, k]
            got = (b, c)
            break
    blow = est_low[:, :, k].max()
    print(
        f"  user {k} slice {topo.slice_of_user[k]}: est_low {blow:6.3f}"
        + (f" -> (b{got[0]},c{got[1]}) est_up {est_up[got[0], got[1], k]:6.3f}"
           if got else " -> UNSCHEDULED")
        + f"   fh_left {np.array2string(fh_left, precision=2)}"
    )
