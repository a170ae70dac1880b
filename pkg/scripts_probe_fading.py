import sys
import time

import numpy as np

sys.path.insert(0, "tests")
from conftest import table1_config

from scmaran import ExperimentSpec, FadingModel
from scmaran.harness import compare_channels

t0 = time.time()
for kf, seeds in ((5.0, range(10)), (1.0, range(5))):
    spec = ExperimentSpec(
        config=table1_config(),
        variable="power_scale",
        values=(0.625,),
        seeds=tuple(seeds),
        fading=FadingModel("rician", kf),
    )
    table = compare_channels(spec)
    per = {}
    for row in table.rows:
        per.setdefault(row["seed"], {})[row["fading"]] = (
            row["sum_rate_bps_hz"],
            row["feasible"],
        )
    wins = sum(1 for s in per.values() if s["rician"][0] >= s["rayleigh"][0])
    ray = np.mean([s["rayleigh"][0] for s in per.values()])
    ric = np.mean([s["rician"][0] for s in per.values()])
    print(
        f"k={kf}: rayleigh {ray:.4f} rician {ric:.4f} "
        f"rician wins {wins}/{len(per)} pairs  {time.time()-t0:.0f}s",
        flush=True,
    )
    for seed in sorted(per):
        s = per[seed]
        print(
            f"  seed {seed}: ray {s['rayleigh'][0]:.3f}({s['rayleigh'][1]}) "
            f"ric {s['rician'][0]:.3f}({s['rician'][1]})",
            flush=True,
        )
