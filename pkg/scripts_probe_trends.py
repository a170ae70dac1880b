import json
import sys
import time

sys.path.insert(0, "tests")
from conftest import table1_config

from scmaran import ExperimentSpec, run_experiment
from scmaran.harness import compare_access, compare_channels


def means(table):
    return [
        (
            s["value"],
            s.get("access"),
            s.get("fading"),
            round(s["mean_sum_rate_bps_hz"], 4),
            f"{s['feasible']}/{s['seeds']}",
        )
        for s in table.summary()
    ]


out = {}
t0 = time.time()

spec = ExperimentSpec(
    config=table1_config(), variable="r_min_bps_hz", values=(0.5, 1.0, 1.5), seeds=(0, 1, 2)
)
out["r_min"] = means(run_experiment(spec))
print("r_min", out["r_min"], f"{time.time()-t0:.0f}s", flush=True)

spec = ExperimentSpec(
    config=table1_config(), variable="num_slices", values=(2, 5), seeds=(0, 1, 2)
)
out["num_slices"] = means(run_experiment(spec))
print("num_slices", out["num_slices"], f"{time.time()-t0:.0f}s", flush=True)

spec = ExperimentSpec(
    config=table1_config(), variable="num_users", values=(4, 6, 8, 10), seeds=(0, 1, 2)
)
out["num_users"] = means(run_experiment(spec))
print("num_users", out["num_users"], f"{time.time()-t0:.0f}s", flush=True)

spec = ExperimentSpec(
    config=table1_config(), variable="power_scale", values=(0.25, 1.0), seeds=(0, 1, 2)
)
out["access"] = means(compare_access(spec))
print("access", out["access"], f"{time.time()-t0:.0f}s", flush=True)

from scmaran import FadingModel

spec = ExperimentSpec(
    config=table1_config(),
    variable="power_scale",
    values=(0.625,),
    seeds=(0, 1, 2),
    fading=FadingModel("rician", 5.0),
)
out["fading"] = means(compare_channels(spec))
print("fading", out["fading"], f"{time.time()-t0:.0f}s", flush=True)

with open("/tmp/trend_probe.json", "w") as fh:
    json.dump(out, fh, indent=1, default=str)
print("TOTAL", time.time() - t0, flush=True)
