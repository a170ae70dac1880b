"""Seeded experiment sweeps and baseline comparisons.

A scenario file (JSON) fixes the network, the fading model and a sweep:
one swept variable, its values, and the seeds evaluated at every value.
Each (value, seed) pair is an independent end-to-end run; rows merge in a
fixed order so re-running a scenario writes a bit-identical CSV.  Vector
quantities are semicolon-joined inside a single CSV cell.  All physical
quantities in the schema carry their unit in the key name (watts, bps/Hz,
meters).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .asm import AsmOptions, ScenarioInfeasible, run_asm
from .channel import FadingModel, generate_channels
from .scma import build_codebook_map, ofdma_map
from .topology import NetworkConfig, generate_topology, validate_config

SWEEP_VARIABLES = (
    "power_scale",
    "kappa",
    "r_min_bps_hz",
    "num_slices",
    "num_users",
    "access",
    "fading",
)

_COLUMNS = [
    "scenario",
    "variable",
    "value",
    "access",
    "fading",
    "association",
    "placement",
    "seed",
    "feasible",
    "sum_rate_bps_hz",
    "iterations",
    "converged",
    "per_slice_bps_hz",
    "per_rrh_power_w",
    "fronthaul_load_bps_hz",
    "wall_time_s",
]


@dataclass
class ExperimentSpec:
    config: NetworkConfig
    variable: str
    values: tuple
    seeds: tuple[int, ...]
    fading: FadingModel = field(default_factory=lambda: FadingModel("rayleigh"))
    association: str = "joint"
    user_placement: str = "uniform"
    name: str = "experiment"
    options: AsmOptions = field(default_factory=AsmOptions)

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(
                f"unknown sweep variable {self.variable!r}; pick one of {SWEEP_VARIABLES}"
            )
        if len(self.values) < 1:
            raise ValueError("need at least one sweep value")
        if len(self.seeds) < 1:
            raise ValueError("need at least one seed")
        problems = validate_config(self.config)
        if problems:
            raise ValueError("invalid scenario config: " + "; ".join(problems))


def _near_equal_split(total: int, parts: int) -> tuple[int, ...]:
    base, extra = divmod(total, parts)
    return tuple(base + (1 if i < extra else 0) for i in range(parts))


def apply_sweep(
    config: NetworkConfig, fading: FadingModel, variable: str, value
) -> tuple[NetworkConfig, FadingModel, str]:
    """Return (config, fading, access) with one swept variable applied."""
    access = "scma"
    if variable == "power_scale":
        caps = tuple(float(p) * float(value) for p in config.power_caps_w)
        config = config.with_updates(power_caps_w=caps)
    elif variable == "kappa":
        config = config.with_updates(error_bound=float(value))
    elif variable == "r_min_bps_hz":
        config = config.with_updates(
            slice_min_rates_bps_hz=(float(value),) * config.num_slices
        )
    elif variable == "num_slices":
        v = int(value)
        config = config.with_updates(
            num_slices=v,
            slice_sizes=_near_equal_split(config.num_users, v),
            slice_min_rates_bps_hz=(config.slice_min_rates_bps_hz[0],) * v,
        )
    elif variable == "num_users":
        k = int(value)
        config = config.with_updates(
            num_users=k, slice_sizes=_near_equal_split(k, config.num_slices)
        )
    elif variable == "access":
        access = str(value)
        if access not in ("scma", "ofdma"):
            raise ValueError(f"unknown access scheme {access!r}")
    elif variable == "fading":
        fading = FadingModel(str(value), fading.rician_k_factor)
    else:
        raise ValueError(f"unknown sweep variable {variable!r}")
    return config, fading, access


def run_point(
    config: NetworkConfig,
    fading: FadingModel,
    seed: int,
    access: str = "scma",
    association: str = "joint",
    user_placement: str = "uniform",
    options: AsmOptions | None = None,
) -> dict:
    """One end-to-end run; infeasible scenarios become a row, not an error."""
    if access == "ofdma":
        # orthogonal baseline: identity map, one signal per subcarrier
        config = config.with_updates(
            num_codebooks=config.num_subcarriers, codeword_degree=1, reuse_limit=1
        )
        cmap = ofdma_map(config.num_subcarriers)
    else:
        cmap = build_codebook_map(
            config.num_subcarriers, config.num_codebooks, config.codeword_degree
        )
    topology = generate_topology(config, seed, user_placement)
    channels = generate_channels(topology, config, fading, seed)
    opts = dataclasses.replace(options or AsmOptions(), association=association)
    started = time.perf_counter()
    row = {
        "access": access,
        "fading": fading.kind,
        "association": association,
        "placement": user_placement,
        "seed": int(seed),
    }
    try:
        sol = run_asm(
            channels,
            cmap,
            config,
            topology.slice_of_user,
            options=opts,
            rrh_user_distances=topology.distances(),
        )
        row.update(
            feasible=1,
            sum_rate_bps_hz=float(sol.objective),
            iterations=int(sol.iterations),
            converged=int(sol.converged),
            per_slice_bps_hz=";".join(f"{r:.9g}" for r in sol.report.per_slice),
            per_rrh_power_w=";".join(f"{p:.9g}" for p in sol.report.per_rrh_power),
            fronthaul_load_bps_hz=";".join(
                f"{r:.9g}" for r in sol.report.fronthaul_load
            ),
        )
    except ScenarioInfeasible:
        row.update(
            feasible=0,
            sum_rate_bps_hz=float("nan"),
            iterations=0,
            converged=0,
            per_slice_bps_hz="",
            per_rrh_power_w="",
            fronthaul_load_bps_hz="",
        )
    row["wall_time_s"] = time.perf_counter() - started
    return row


@dataclass
class ResultTable:
    rows: list[dict]
    columns: list[str] = field(default_factory=lambda: list(_COLUMNS))

    def summary(self) -> list[dict]:
        """Per sweep point: seed mean, standard error, feasibility count."""
        groups: dict[tuple, list[dict]] = {}
        order = []
        for row in self.rows:
            key = (
                row["variable"],
                row["value"],
                row["access"],
                row["fading"],
                row["association"],
            )
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(row)
        out = []
        for key in order:
            rows = groups[key]
            rates = [r["sum_rate_bps_hz"] for r in rows if r["feasible"]]
            mean = float(np.mean(rates)) if rates else float("nan")
            spread = float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0
            out.append(
                {
                    "variable": key[0],
                    "value": key[1],
                    "access": key[2],
                    "fading": key[3],
                    "association": key[4],
                    "seeds": len(rows),
                    "feasible": sum(r["feasible"] for r in rows),
                    "mean_sum_rate_bps_hz": mean,
                    "stderr_bps_hz": spread / math.sqrt(max(1, len(rates))),
                    "mean_iterations": float(
                        np.mean([r["iterations"] for r in rows if r["feasible"]])
                    )
                    if rates
                    else float("nan"),
                }
            )
        return out

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=self.columns, extrasaction="ignore")
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: _fmt(row.get(k)) for k in self.columns})

    def to_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(
                {"rows": self.rows, "summary": self.summary()},
                fh,
                indent=2,
                sort_keys=True,
                allow_nan=True,
            )
            fh.write("\n")

    def all_feasible(self) -> bool:
        return all(r["feasible"] for r in self.rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return "" if v is None else str(v)


def _point_task(args: tuple) -> dict:
    spec, variable, value, seed, access_override, assoc_override = args
    config, fading, access = apply_sweep(spec.config, spec.fading, variable, value)
    if access_override is not None:
        access = access_override
    association = assoc_override if assoc_override is not None else spec.association
    row = run_point(
        config,
        fading,
        seed,
        access=access,
        association=association,
        user_placement=spec.user_placement,
        options=spec.options,
    )
    row.update(scenario=spec.name, variable=variable, value=value)
    return row


def _run_tasks(tasks: list[tuple], workers: int) -> list[dict]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_point_task, tasks))
    return [_point_task(t) for t in tasks]


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Sweep the spec's variable over its values, seeds paired per point."""
    tasks = [
        (spec, spec.variable, value, seed, None, None)
        for value in spec.values
        for seed in spec.seeds
    ]
    return ResultTable(rows=_run_tasks(tasks, workers))


def compare_access(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Overloaded access against the orthogonal baseline, paired per seed.

    The sweep values scale the power caps; both schemes run on identical
    topologies and channel draws.
    """
    tasks = [
        (spec, "power_scale", value, seed, access, None)
        for value in spec.values
        for access in ("scma", "ofdma")
        for seed in spec.seeds
    ]
    return ResultTable(rows=_run_tasks(tasks, workers))


def compare_channels(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Line-of-sight against scattered fading on perfect CSI, paired seeds."""
    base = dataclasses.replace(spec, config=spec.config.with_updates(error_bound=0.0))
    tasks = [
        (
            dataclasses.replace(base, fading=FadingModel(kind, spec.fading.rician_k_factor)),
            "power_scale",
            value,
            seed,
            None,
            None,
        )
        for value in spec.values
        for kind in ("rayleigh", "rician")
        for seed in spec.seeds
    ]
    return ResultTable(rows=_run_tasks(tasks, workers))


def compare_association(spec: ExperimentSpec, workers: int = 1) -> ResultTable:
    """Joint association against the nearest-RRH baseline, paired seeds."""
    tasks = [
        (spec, "power_scale", value, seed, None, assoc)
        for value in spec.values
        for assoc in ("joint", "nearest")
        for seed in spec.seeds
    ]
    return ResultTable(rows=_run_tasks(tasks, workers))


def config_to_dict(config: NetworkConfig) -> dict:
    return dataclasses.asdict(config)


def config_from_dict(data: dict) -> NetworkConfig:
    known = {f.name for f in dataclasses.fields(NetworkConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown network keys: {sorted(unknown)}")
    fixed = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in data.items()
    }
    return NetworkConfig(**fixed)


def load_spec(path: str) -> ExperimentSpec:
    """Read a scenario file; see the repository README for the schema."""
    with open(path) as fh:
        data = json.load(fh)
    fading = data.get("fading", {})
    options = data.get("options", {})
    return ExperimentSpec(
        config=config_from_dict(data["network"]),
        variable=data["sweep"]["variable"],
        values=tuple(data["sweep"]["values"]),
        seeds=tuple(int(s) for s in data["seeds"]),
        fading=FadingModel(
            fading.get("kind", "rayleigh"), fading.get("rician_k_factor", 5.0)
        ),
        association=data.get("association", "joint"),
        user_placement=data.get("user_placement", "uniform"),
        name=data.get("name", "experiment"),
        options=AsmOptions(**options),
    )


def save_spec(spec: ExperimentSpec, path: str) -> None:
    data = {
        "name": spec.name,
        "network": config_to_dict(spec.config),
        "fading": {
            "kind": spec.fading.kind,
            "rician_k_factor": spec.fading.rician_k_factor,
        },
        "sweep": {"variable": spec.variable, "values": list(spec.values)},
        "seeds": list(spec.seeds),
        "association": spec.association,
        "user_placement": spec.user_placement,
        "options": dataclasses.asdict(spec.options),
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
