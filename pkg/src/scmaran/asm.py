"""Alternating scheduling and beamforming driver.

Each outer iteration solves the convex beamforming surrogate at the fixed
schedule, then re-solves the frozen-coefficient scheduling program at the
fixed beams.  A candidate block update is adopted only when the true
evaluated worst-case sum rate does not decrease and the true constraint set
stays satisfied; otherwise the previous block value is retained.  The
starting point is feasible, so the iterate never leaves the feasible set and
the objective trace is non-decreasing by construction.  The loop stops when
the beams move less than a fixed fraction of their first-iteration norm and
the schedule repeats, or after a hard iteration cap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assign import AssignInfeasible, build_assignment_problem, solve_bnb
from .beamform import (
    build_subproblem,
    init_beamformers,
    refresh_reference_beams,
    solve_subproblem,
)
from .channel import ChannelSet
from .ipm import InfeasibleError, SolverError
from .rate import Assignment, BeamformerSet, RateReport, aggregate_report, rate_of
from .scma import CodebookMap, reuse_count
from .topology import NetworkConfig


class ScenarioInfeasible(RuntimeError):
    """No feasible starting point exists for the scenario."""

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail = detail or {}


@dataclass
class AsmOptions:
    max_iterations: int = 50
    epsilon_rel: float = 1e-3
    solver_tol: float = 1e-9
    association: str = "joint"  # "joint" or "nearest"

    def __post_init__(self) -> None:
        if self.association not in ("joint", "nearest"):
            raise ValueError(f"unknown association mode {self.association!r}")


@dataclass
class Solution:
    assignment: Assignment
    beams: BeamformerSet
    report: RateReport
    objective: float
    trace: list[dict] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def to_json_dict(self) -> dict:
        return {
            "objective_bps_hz": self.objective,
            "iterations": self.iterations,
            "converged": self.converged,
            "scheduled_triples": [list(map(int, t)) for t in self.assignment.triples()],
            "report": self.report.to_json_dict(),
            "trace": self.trace,
        }


def constraint_counts(
    num_rrh: int, num_codebooks: int, num_users: int, num_slices: int, num_subcarriers: int
) -> dict[str, int]:
    """Closed-form constraint totals of the two alternating subproblems."""
    B, C, K, V, N = num_rrh, num_codebooks, num_users, num_slices, num_subcarriers
    return {
        "beamforming": 4 * B * C * K + 2 * B + V,
        "assignment": 5 * B * C * K + C * C * B * B + N + 2 * B + V,
    }


def check_feasibility(
    W: BeamformerSet,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    tol: float = 1e-6,
) -> list[dict]:
    """Re-evaluate every constraint family at (W, schedule); list violations.

    Violations are reported when they exceed ``tol`` relative to the bound's
    own scale.
    """
    out = []
    rho = assignment.rho

    def over(amount: float, scale: float) -> bool:
        return amount > tol * max(1.0, abs(scale))

    if not np.isin(rho, (0, 1)).all():
        out.append({"family": "binary", "violation": float("nan")})
    per_rrh = rho.sum(axis=1)
    multi = np.flatnonzero((per_rrh > 0).sum(axis=0) > 1)
    for k in multi:
        out.append({"family": "association", "index": int(k), "violation": 1.0})
    if config.single_codebook_per_user:
        for k in np.flatnonzero((per_rrh > 1).any(axis=0)):
            out.append({"family": "single_codebook", "index": int(k), "violation": 1.0})
    loads = reuse_count(rho, cmap.q)
    for n in np.flatnonzero(loads > config.reuse_limit):
        out.append(
            {
                "family": "reuse",
                "index": int(n),
                "violation": float(loads[n] - config.reuse_limit),
            }
        )
    report = aggregate_report(W, assignment, cmap, channels, config, slice_of_user)
    for b in range(config.num_rrh):
        excess = report.per_rrh_power[b] - config.power_caps_w[b]
        if over(excess, config.power_caps_w[b]):
            out.append({"family": "power", "index": b, "violation": float(excess)})
        excess = report.fronthaul_load[b] - config.fronthaul_caps_bps_hz[b]
        if over(excess, config.fronthaul_caps_bps_hz[b]):
            out.append({"family": "fronthaul", "index": b, "violation": float(excess)})
    for v, r_min in enumerate(config.slice_min_rates_bps_hz):
        gap = r_min - report.per_slice[v]
        if over(gap, r_min):
            out.append({"family": "slice_min_rate", "index": v, "violation": float(gap)})
    return out


def _scheduled_slot_mask(assignment: Assignment, cmap: CodebookMap, shape) -> np.ndarray:
    """(B, N, K) True where a beam slot belongs to a scheduled triple."""
    mask = np.zeros(shape, dtype=bool)
    for b, c, k in assignment.triples():
        for n in cmap.support(c):
            mask[b, int(n), k] = True
    return mask


def _overrelax_beams(
    W_prev: BeamformerSet,
    W: BeamformerSet,
    report: RateReport,
    objective: float,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    epsilon: float | None,
):
    """Extrapolate an accepted beam step while the true problem rewards it.

    The surrogate subproblem under-steps along flat ridges, which can stretch
    convergence far past the iteration budget.  Trying
    W_prev + alpha * (W - W_prev) for a few alpha > 1 against the *true*
    objective and constraints recovers that progress at the cost of a few
    rate evaluations.  Per-RRH power is rescaled down to the caps first so
    boundary-riding steps stay eligible; adoption keeps the monotone
    feasible-iterate guarantee because a candidate is taken only when it
    improves the evaluated objective and passes the full constraint check.
    """
    step = W.w - W_prev.w
    if not np.any(step):
        return W, report, objective
    # endgame gate: once the raw surrogate step is near the stopping
    # threshold, amplifying it would only keep the stopping rule from firing
    if epsilon is not None and float(np.linalg.norm(step)) <= 2.0 * epsilon:
        return W, report, objective
    mask = _scheduled_slot_mask(assignment, cmap, W.w.shape[:3])
    pcaps = np.asarray(config.power_caps_w, dtype=float)
    fcaps = np.asarray(config.fronthaul_caps_bps_hz, dtype=float)

    def measure(w: np.ndarray):
        cand = BeamformerSet(w=w)
        return cand, aggregate_report(
            cand, assignment, cmap, channels, config, slice_of_user
        )

    def attempt(alpha: float):
        w = W_prev.w + alpha * step
        # transmit power projects straight onto the caps
        power = np.sum(np.sum(np.abs(w) ** 2, axis=-1) * mask, axis=(1, 2))
        over = power > pcaps
        if np.any(over):
            shrink = np.sqrt(np.where(over, pcaps / np.maximum(power, 1e-300), 1.0))
            w = w * shrink[:, None, None, None]
        # fronthaul load is nonlinear: shrink each offending RRH onto its cap
        # (lowering one RRH raises the others' rates a little, hence rounds)
        cand, cand_report = measure(w)
        for _ in range(4):
            loads = np.asarray(cand_report.fronthaul_load, dtype=float)
            bad = np.nonzero(loads > fcaps + 1e-10)[0]
            if bad.size == 0:
                break
            for b in bad:
                lo, hi = 0.0, 1.0
                for _ in range(12):
                    mid = 0.5 * (lo + hi)
                    trial = w.copy()
                    trial[b] *= mid
                    _, trial_report = measure(trial)
                    if trial_report.fronthaul_load[b] > fcaps[b]:
                        hi = mid
                    else:
                        lo = mid
                w = w.copy()
                w[b] *= lo
            cand, cand_report = measure(w)
        if cand_report.sum_rate <= objective + 1e-12:
            return None
        if check_feasibility(
            cand, assignment, cmap, channels, config, slice_of_user, tol=1e-7
        ):
            return None
        return cand, cand_report

    best = None
    best_rate = objective
    for alpha in (16.0, 8.0, 4.0, 2.0, 1.5):
        got = attempt(alpha)
        if got is not None and got[1].sum_rate > best_rate:
            best, best_rate = got, got[1].sum_rate
    if best is None:
        return W, report, objective
    cand, cand_report = best
    return cand, cand_report, cand_report.sum_rate


def _nearest_rrh_mask(topology_distances: np.ndarray, shape) -> np.ndarray:
    """Allow only each user's nearest RRH (association baseline)."""
    B, C, K = shape
    nearest = np.argmin(topology_distances, axis=0)  # (K,)
    allowed = np.zeros((B, C, K), dtype=bool)
    for k in range(K):
        allowed[nearest[k], :, k] = True
    return allowed


def initial_point(
    channels: ChannelSet,
    cmap: CodebookMap,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    allowed: np.ndarray | None = None,
) -> tuple[Assignment, BeamformerSet]:
    """Greedy feasible start.

    Users are ranked by their best single-link worst-case rate under a
    nominal equal power share and greedily given their best (RRH, codebook)
    that keeps reuse, exclusivity and an estimated fronthaul load feasible.
    Matched-filter beams split each power cap equally over scheduled links,
    each concentrated on its best in-codebook subcarrier; power is then
    scaled down per RRH until the exact fronthaul loads fit.
    """
    B, N, K, M = channels.h.shape
    C = cmap.num_codebooks
    sigma = config.noise_power
    if allowed is None:
        allowed = np.ones((B, C, K), dtype=bool)

    # single-link rate estimates under an equal share of users per RRH; a
    # link's power rides its best in-codebook subcarrier, matching the
    # concentrated matched-filter start
    share = max(1, -(-K // B))
    p_est = np.asarray(config.power_caps_w, dtype=float) / share
    h_norm2 = np.sum(np.abs(channels.h) ** 2, axis=-1)  # (B, N, K)
    num = np.maximum(0.0, h_norm2 - channels.theta) * p_est[:, None, None]
    den = (h_norm2 + channels.theta) * p_est[:, None, None]
    best_low = np.zeros((B, C, K))
    best_up = np.zeros((B, C, K))
    for c in range(C):
        supp = cmap.support(c)
        best_low[:, c, :] = num[:, supp, :].max(axis=1)
        best_up[:, c, :] = den[:, supp, :].max(axis=1)
    est_low = rate_of(best_low / sigma)
    est_up = rate_of(best_up / sigma)

    order = sorted(range(K), key=lambda k: (-est_low[:, :, k].max(initial=0.0), k))
    reuse_left = np.full(N, config.reuse_limit, dtype=np.int64)
    caps = np.asarray(config.fronthaul_caps_bps_hz, dtype=float)
    fh_left = caps.copy()
    rho = np.zeros((B, C, K), dtype=np.int8)
    for k in order:
        cands = [
            (b, c)
            for b in range(B)
            for c in range(C)
            if allowed[b, c, k] and est_low[b, c, k] > 0.0
        ]
        cands.sort(key=lambda bc: (-est_low[bc[0], bc[1], k], bc))
        for b, c in cands:
            supp = cmap.support(c)
            if np.all(reuse_left[supp] >= 1) and est_up[b, c, k] <= fh_left[b]:
                rho[b, c, k] = 1
                reuse_left[supp] -= 1
                fh_left[b] -= est_up[b, c, k]
                break
    assignment = Assignment(rho=rho)
    W = init_beamformers(channels, assignment, cmap, config)

    # exact fronthaul repair: shrink overloaded RRHs' transmit power
    target = caps * (1.0 - 1e-6)
    scale = np.ones(B)
    active_slots = {
        (b, int(n), k)
        for b, c, k in assignment.triples()
        for n in cmap.support(c)
    }

    def scaled_beams(factors: np.ndarray) -> BeamformerSet:
        Ws = W.copy()
        for b, n, k in active_slots:
            Ws.w[b, n, k] *= np.sqrt(factors[b])
        return Ws

    for _ in range(40):
        report = aggregate_report(
            scaled_beams(scale), assignment, cmap, channels, config, slice_of_user
        )
        overloaded = [
            b for b in range(B) if report.fronthaul_load[b] > caps[b] * (1 - 1e-9)
        ]
        if not overloaded:
            break
        for b in overloaded:
            lo, hi = 0.0, scale[b]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                trial = scale.copy()
                trial[b] = mid
                load = aggregate_report(
                    scaled_beams(trial), assignment, cmap, channels, config, slice_of_user
                ).fronthaul_load[b]
                if load > target[b]:
                    hi = mid
                else:
                    lo = mid
            scale[b] = lo
    W = scaled_beams(scale)

    report = aggregate_report(W, assignment, cmap, channels, config, slice_of_user)
    shortfall = {
        int(v): {"required": float(r_min), "achieved": float(report.per_slice[v])}
        for v, r_min in enumerate(config.slice_min_rates_bps_hz)
        if report.per_slice[v] < r_min
    }
    if shortfall:
        raise ScenarioInfeasible(
            "initial point cannot meet every slice minimum rate", shortfall
        )
    leftover = check_feasibility(W, assignment, cmap, channels, config, slice_of_user)
    if leftover:
        raise ScenarioInfeasible("initial point infeasible", {"violations": leftover})
    refresh_reference_beams(W, assignment, cmap, channels, config)
    return assignment, W


def run_asm(
    channels: ChannelSet,
    cmap: CodebookMap,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    options: AsmOptions | None = None,
    warm_start: tuple[Assignment, BeamformerSet] | None = None,
    rrh_user_distances: np.ndarray | None = None,
) -> Solution:
    """Run the alternating algorithm to a stationary schedule and beams.

    ``rrh_user_distances`` is required for the "nearest" association
    baseline; ``warm_start`` must be a feasible (schedule, beams) pair.
    """
    options = options or AsmOptions()
    allowed = None
    if options.association == "nearest":
        if rrh_user_distances is None:
            raise ValueError("nearest association needs rrh_user_distances")
        allowed = _nearest_rrh_mask(
            rrh_user_distances, (config.num_rrh, cmap.num_codebooks, config.num_users)
        )

    if warm_start is not None:
        assignment, W = warm_start[0].copy(), warm_start[1].copy()
        bad = check_feasibility(W, assignment, cmap, channels, config, slice_of_user)
        if bad:
            raise ValueError(f"warm start violates constraints: {bad}")
    else:
        assignment, W = initial_point(channels, cmap, config, slice_of_user, allowed)

    report = aggregate_report(W, assignment, cmap, channels, config, slice_of_user)
    objective = report.sum_rate
    trace: list[dict] = [
        {
            "iteration": 0,
            "objective": objective,
            "beam_step": "init",
            "schedule_step": "init",
            "per_rrh_power_w": [float(p) for p in report.per_rrh_power],
            "per_slice_bps_hz": [float(r) for r in report.per_slice],
            "wall_time_s": 0.0,
        }
    ]
    epsilon = None
    converged = False
    t0 = time.perf_counter()

    for it in range(1, options.max_iterations + 1):
        W_prev = W.copy()
        rho_prev = assignment.copy()

        # beamforming block at fixed schedule
        beam_status = "solved"
        kkt = float("nan")
        try:
            problem = build_subproblem(
                W, assignment, cmap, channels, config, slice_of_user
            )
            W_cand, _, ipm = solve_subproblem(problem, tol=options.solver_tol)
            kkt = ipm.kkt_residual
            cand_report = aggregate_report(
                W_cand, assignment, cmap, channels, config, slice_of_user
            )
            ok = not check_feasibility(
                W_cand, assignment, cmap, channels, config, slice_of_user, tol=1e-7
            )
            if ok and cand_report.sum_rate >= objective - 1e-12:
                W, report, objective = W_cand, cand_report, cand_report.sum_rate
                W, report, objective = _overrelax_beams(
                    W_prev,
                    W,
                    report,
                    objective,
                    assignment,
                    cmap,
                    channels,
                    config,
                    slice_of_user,
                    epsilon,
                )
            else:
                beam_status = "guarded"
        except (InfeasibleError, SolverError) as err:
            beam_status = f"failed:{type(err).__name__}"
        refresh_reference_beams(W, assignment, cmap, channels, config)

        # scheduling block at fixed beams
        sched_status = "kept"
        try:
            ap = build_assignment_problem(
                W, assignment, cmap, channels, config, slice_of_user, allowed
            )
            rho_cand, _, _ = solve_bnb(ap, incumbent=assignment)
            if not np.array_equal(rho_cand.rho, assignment.rho):
                cand_report = aggregate_report(
                    W, rho_cand, cmap, channels, config, slice_of_user
                )
                ok = not check_feasibility(
                    W, rho_cand, cmap, channels, config, slice_of_user, tol=1e-7
                )
                if ok and cand_report.sum_rate >= objective - 1e-12:
                    assignment, report, objective = (
                        rho_cand,
                        cand_report,
                        cand_report.sum_rate,
                    )
                    sched_status = "updated"
                    refresh_reference_beams(W, assignment, cmap, channels, config)
                else:
                    sched_status = "guarded"
        except AssignInfeasible:
            sched_status = "failed:AssignInfeasible"

        delta_w = float(np.linalg.norm(W.w - W_prev.w))
        if epsilon is None:
            epsilon = options.epsilon_rel * float(np.linalg.norm(W.w))
        trace.append(
            {
                "iteration": it,
                "objective": objective,
                "beam_step": beam_status,
                "schedule_step": sched_status,
                "kkt_residual": kkt,
                "delta_w": delta_w,
                "per_rrh_power_w": [float(p) for p in report.per_rrh_power],
                "per_slice_bps_hz": [float(r) for r in report.per_slice],
                "wall_time_s": time.perf_counter() - t0,
            }
        )
        # the beam-movement test is the stopping rule; an exact repeat of
        # the whole iterate gives delta_w = 0 and stops as a special case
        if delta_w <= epsilon:
            converged = True
            break
        if delta_w == 0.0 and np.array_equal(assignment.rho, rho_prev.rho):
            converged = True
            break

    return Solution(
        assignment=assignment,
        beams=W,
        report=report,
        objective=objective,
        trace=trace,
        iterations=len(trace) - 1,
        converged=converged,
    )
