"""Codebook allocation and user association with beams held fixed.

Freezing the interference pattern at the previous schedule makes every
candidate triple's worst-case rate a constant, so the scheduling step becomes
a pure binary program: maximize the sum of frozen rate coefficients subject
to per-RRH power and fronthaul budgets, the per-subcarrier reuse cap, RRH
exclusivity per user and per-slice minimum rates.  ``solve_bnb`` solves it
exactly by depth-first branch and bound; ``solve_exhaustive`` enumerates all
patterns and is the reference implementation for small instances.

Both solvers break objective ties deterministically towards the
lexicographically smallest list of scheduled (rrh, codebook, user) triples,
and both re-evaluate candidate objectives with the same canonical summation
order so they agree bit-for-bit.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelSet
from .rate import (
    Assignment,
    BeamformerSet,
    _codebook_sums,
    _interference_split,
    link_products,
    rate_of,
)
from .scma import CodebookMap
from .topology import NetworkConfig


class AssignInfeasible(RuntimeError):
    """No schedule satisfies the constraint system.

    Every row except the slice minimum rates is satisfied by the empty
    schedule, so infeasibility always names the slice family together with
    the best aggregate rate each failing slice can reach.
    """

    def __init__(self, message: str, shortfall: dict):
        super().__init__(message)
        self.family = "slice_min_rate"
        self.shortfall = shortfall


@dataclass
class AssignmentProblem:
    """Frozen-coefficient scheduling instance.

    r_hat / r_bar : (B, C, K) worst-case rate brackets of each candidate
        triple with interference frozen at the previous schedule
    power_cost : (B, C, K) transmit power a triple consumes under the fixed
        beams
    allowed : (B, C, K) candidate mask (used e.g. to pin users to their
        nearest RRH in the association baseline)
    """

    r_hat: np.ndarray
    r_bar: np.ndarray
    power_cost: np.ndarray
    q: np.ndarray
    reuse_limit: int
    power_caps: np.ndarray
    fronthaul_caps: np.ndarray
    slice_min: np.ndarray
    slice_of_user: np.ndarray
    single_codebook: bool
    allowed: np.ndarray
    tally: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.r_hat.shape

    def tally_total(self) -> int:
        return sum(self.tally.values())

    def objective_of(self, assignment: Assignment) -> float:
        """Canonical frozen objective (fixed summation order)."""
        return float(np.sum(self.r_hat * assignment.rho, dtype=float))

    def is_feasible(self, assignment: Assignment) -> bool:
        rho = assignment.rho
        if np.any(rho.astype(bool) & ~self.allowed):
            return False
        per_rrh = rho.sum(axis=1)
        if ((per_rrh > 0).sum(axis=0) > 1).any():
            return False
        if self.single_codebook and (per_rrh > 1).any():
            return False
        loads = self.q.astype(np.int64) @ rho.sum(axis=(0, 2))
        if (loads > self.reuse_limit).any():
            return False
        if ((self.power_cost * rho).sum(axis=(1, 2)) > self.power_caps + 1e-9).any():
            return False
        if ((self.r_bar * rho).sum(axis=(1, 2)) > self.fronthaul_caps + 1e-9).any():
            return False
        per_user = (self.r_hat * rho).sum(axis=(0, 1))
        for v, r_min in enumerate(self.slice_min):
            if per_user[self.slice_of_user == v].sum() < r_min - 1e-9:
                return False
        return True


def frozen_rate_tables(
    W: BeamformerSet,
    previous: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    sigma: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Worst-case rate brackets of every candidate triple with interference
    produced by the previous schedule only.

    A candidate's own numerator is evaluated live; its denominator counts
    co-codebook beams scheduled in ``previous`` (excluding the candidate's
    own same-RRH entry), which is exactly the linearizing freeze.
    """
    X, W2 = link_products(W, channels)
    q = cmap.q
    rho = previous.rho.astype(float)
    theta = channels.theta
    protect = theta[:, :, None, :] * W2[:, :, :, None]
    diag = np.arange(X.shape[2])

    num_low = _codebook_sums(q, np.maximum(0.0, X[:, :, diag, diag] - theta * W2))
    A_hi = _codebook_sums(q, X + protect)
    intra_hi, inter_hi = _interference_split(A_hi, rho, A_hi[:, :, diag, diag])
    r_hat = rate_of(num_low / (intra_hi + inter_hi + sigma))

    num_hi = _codebook_sums(q, X[:, :, diag, diag] + theta * W2)
    A_lo = _codebook_sums(q, np.maximum(0.0, X - protect))
    intra_lo, inter_lo = _interference_split(A_lo, rho, A_lo[:, :, diag, diag])
    r_bar = rate_of(num_hi / (intra_lo + inter_lo + sigma))
    return np.asarray(r_hat), np.asarray(r_bar)


def build_assignment_problem(
    W: BeamformerSet,
    previous: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    allowed: np.ndarray | None = None,
) -> AssignmentProblem:
    """Freeze coefficients at the previous schedule and package the binary
    program."""
    sigma = config.noise_power
    r_hat, r_bar = frozen_rate_tables(W, previous, cmap, channels, sigma)
    power_cost = np.einsum("nc,bnk->bck", cmap.q.astype(float), W.beam_power())
    B, C, K = r_hat.shape
    N = cmap.num_subcarriers
    V = len(config.slice_min_rates_bps_hz)
    if allowed is None:
        allowed = np.ones((B, C, K), dtype=bool)
    tally = {
        "rate_epigraph_frozen": 4 * B * C * K,
        "binary": B * C * K,
        "association_pairs": C * C * B * B,
        "reuse": N,
        "power": B,
        "fronthaul": B,
        "slice_min_rate": V,
    }
    return AssignmentProblem(
        r_hat=r_hat,
        r_bar=r_bar,
        power_cost=power_cost,
        q=cmap.q.copy(),
        reuse_limit=config.reuse_limit,
        power_caps=np.asarray(config.power_caps_w, dtype=float),
        fronthaul_caps=np.asarray(config.fronthaul_caps_bps_hz, dtype=float),
        slice_min=np.asarray(config.slice_min_rates_bps_hz, dtype=float),
        slice_of_user=np.asarray(slice_of_user),
        single_codebook=config.single_codebook_per_user,
        allowed=allowed.astype(bool),
        tally=tally,
    )


def _pattern_key(triples: tuple) -> tuple:
    return tuple(sorted(triples))


def _slice_shortfall(problem: AssignmentProblem, best: Assignment | None) -> dict:
    per_user = (
        (problem.r_hat * best.rho).sum(axis=(0, 1))
        if best is not None
        else np.zeros(problem.shape[2])
    )
    out = {}
    for v, r_min in enumerate(problem.slice_min):
        got = float(per_user[problem.slice_of_user == v].sum())
        if got < r_min - 1e-9:
            out[int(v)] = {"required": float(r_min), "achievable": got}
    return out


def solve_exhaustive(
    problem: AssignmentProblem, pattern_cap: int = 2**20
) -> tuple[Assignment, float, dict]:
    """Enumerate every pattern over the useful candidate triples.

    Triples that are masked out or carry a zero frozen rate cannot appear in
    the lexicographically smallest optimum (they add no objective or slice
    value and only consume budgets), so enumeration runs over the rest.
    """
    B, C, K = problem.shape
    useful = problem.allowed & (problem.r_hat > 0.0)
    cand = [tuple(t) for t in np.argwhere(useful)]
    nv = len(cand)
    if 2**nv > pattern_cap:
        raise ValueError(f"2^{nv} patterns exceed the cap {pattern_cap}")
    bits = (np.arange(2**nv, dtype=np.int64)[:, None] >> np.arange(nv)) & 1

    r_hat_v = np.array([problem.r_hat[t] for t in cand])
    r_bar_v = np.array([problem.r_bar[t] for t in cand])
    p_v = np.array([problem.power_cost[t] for t in cand])
    feas = np.ones(bits.shape[0], dtype=bool)
    for b in range(B):
        sel = np.array([t[0] == b for t in cand], dtype=float)
        feas &= bits @ (p_v * sel) <= problem.power_caps[b] + 1e-12
        feas &= bits @ (r_bar_v * sel) <= problem.fronthaul_caps[b] + 1e-12
    for n in range(problem.q.shape[0]):
        inc = np.array([float(problem.q[n, t[1]]) for t in cand])
        feas &= bits @ inc <= problem.reuse_limit
    for i in range(nv):
        for j in range(i + 1, nv):
            bi, _, ki = cand[i]
            bj, _, kj = cand[j]
            if ki == kj and (bi != bj or problem.single_codebook):
                feas &= ~((bits[:, i] == 1) & (bits[:, j] == 1))
    feas_base = feas.copy()
    slice_vals = []
    for v, r_min in enumerate(problem.slice_min):
        sel = np.array([problem.slice_of_user[t[2]] == v for t in cand], dtype=float)
        slice_vals.append(bits @ (r_hat_v * sel))
        feas &= slice_vals[-1] >= r_min - 1e-12
    if not feas.any():
        shortfall = {}
        for v, r_min in enumerate(problem.slice_min):
            achievable = float(slice_vals[v][feas_base].max()) if feas_base.any() else 0.0
            if achievable < r_min - 1e-12:
                shortfall[int(v)] = {"required": float(r_min), "achievable": achievable}
        raise AssignInfeasible("no feasible schedule", shortfall)

    values = bits @ r_hat_v
    values[~feas] = -np.inf
    best_val = values.max()
    tied = np.flatnonzero(values >= best_val - 1e-12 * (1.0 + abs(best_val)))
    best = None
    for idx in tied:
        triples = tuple(cand[i] for i in np.flatnonzero(bits[idx]))
        value = float(np.sum(np.sort(np.array([problem.r_hat[t] for t in triples]))))
        key = (-value, _pattern_key(triples))
        if best is None or key < best[0]:
            best = (key, triples)
    assignment = Assignment.from_triples((B, C, K), best[1])
    return assignment, problem.objective_of(assignment), {"patterns": int(2**nv)}


def solve_bnb(
    problem: AssignmentProblem, incumbent: Assignment | None = None
) -> tuple[Assignment, float, dict]:
    """Exact depth-first branch and bound over the useful candidate triples.

    ``incumbent`` seeds the search (the previous schedule during alternating
    optimization), guaranteeing the result is never worse than it.
    """
    B, C, K = problem.shape
    useful = problem.allowed & (problem.r_hat > 0.0)
    cand = [tuple(t) for t in np.argwhere(useful)]
    # branch on strong candidates first
    cand.sort(key=lambda t: (-problem.r_hat[t], t))
    nv = len(cand)
    r_hat_v = np.array([problem.r_hat[t] for t in cand])
    r_bar_v = np.array([problem.r_bar[t] for t in cand])
    p_v = np.array([problem.power_cost[t] for t in cand])
    user_v = np.array([t[2] for t in cand])
    rrh_v = np.array([t[0] for t in cand])
    slice_v = problem.slice_of_user[user_v] if nv else np.zeros(0, dtype=np.int64)
    supp = [np.flatnonzero(problem.q[:, t[1]]) for t in cand]

    best_key: tuple | None = None
    best_pattern: tuple | None = None

    def canonical_value(chosen: list[int]) -> float:
        return float(np.sum(np.sort(r_hat_v[chosen]))) if chosen else 0.0

    def consider(chosen: list[int]) -> None:
        nonlocal best_key, best_pattern
        per_user = np.zeros(K)
        for i in chosen:
            per_user[user_v[i]] += r_hat_v[i]
        for v, r_min in enumerate(problem.slice_min):
            if per_user[problem.slice_of_user == v].sum() < r_min - 1e-12:
                return
        triples = tuple(cand[i] for i in chosen)
        key = (-canonical_value(chosen), _pattern_key(triples))
        if best_key is None or key < best_key:
            best_key, best_pattern = key, triples

    if incumbent is not None and problem.is_feasible(incumbent):
        triples = incumbent.triples()
        idx = {t: i for i, t in enumerate(cand)}
        chosen0 = [idx[t] for t in triples if t in idx]
        consider(chosen0)

    power_left = problem.power_caps.astype(float).copy()
    fh_left = problem.fronthaul_caps.astype(float).copy()
    reuse_left = np.full(problem.q.shape[0], float(problem.reuse_limit))
    user_rrh = -np.ones(K, dtype=np.int64)  # RRH lock once a user is scheduled
    user_used = np.zeros(K, dtype=bool)
    slice_val = np.zeros(len(problem.slice_min))
    nodes = 0
    num_slices = len(problem.slice_min)
    user_slice = problem.slice_of_user

    # suffix tables: best remaining gain per user (and per user-RRH pair)
    # over candidates j >= i, so the node bound is a lookup per user
    suf_user = np.zeros((K, nv + 1))
    suf_user_rrh = np.zeros((K, B, nv + 1))
    for j in range(nv - 1, -1, -1):
        suf_user[:, j] = suf_user[:, j + 1]
        suf_user_rrh[:, :, j] = suf_user_rrh[:, :, j + 1]
        k, b = user_v[j], rrh_v[j]
        if problem.single_codebook:
            suf_user[k, j] = max(suf_user[k, j], r_hat_v[j])
            suf_user_rrh[k, b, j] = max(suf_user_rrh[k, b, j], r_hat_v[j])
        else:
            suf_user_rrh[k, b, j] += r_hat_v[j]
            suf_user[k, j] = suf_user_rrh[k, :, j].max()
    arange_k = np.arange(K)

    def upper_bound(i: int, value: float) -> tuple[float, np.ndarray]:
        """Value bound ignoring shared budgets; per-user exclusivity kept."""
        locked = user_rrh >= 0
        at_lock = suf_user_rrh[arange_k, np.where(locked, user_rrh, 0), i]
        gains = np.where(locked, at_lock, suf_user[:, i])
        if problem.single_codebook:
            gains = np.where(user_used, 0.0, gains)
        free_best = np.bincount(user_slice, weights=gains, minlength=num_slices)
        return value + float(gains.sum()), free_best

    def dfs(i: int, value: float, chosen: list[int]) -> None:
        nonlocal nodes
        nodes += 1
        bound, free_best = upper_bound(i, value)
        if best_key is not None and bound < -best_key[0] - 1e-12:
            return
        for v, r_min in enumerate(problem.slice_min):
            if slice_val[v] + free_best[v] < r_min - 1e-12:
                return
        if i == nv:
            consider(chosen)
            return
        k, b = user_v[i], rrh_v[i]
        can_take = (
            (not user_used[k] or not problem.single_codebook)
            and (user_rrh[k] < 0 or user_rrh[k] == b)
            and p_v[i] <= power_left[b] + 1e-12
            and r_bar_v[i] <= fh_left[b] + 1e-12
            and np.all(reuse_left[supp[i]] >= 1.0)
        )
        if can_take:
            prev_rrh, prev_used = user_rrh[k], user_used[k]
            power_left[b] -= p_v[i]
            fh_left[b] -= r_bar_v[i]
            reuse_left[supp[i]] -= 1.0
            user_rrh[k], user_used[k] = b, True
            slice_val[slice_v[i]] += r_hat_v[i]
            chosen.append(i)
            dfs(i + 1, value + r_hat_v[i], chosen)
            chosen.pop()
            slice_val[slice_v[i]] -= r_hat_v[i]
            user_rrh[k], user_used[k] = prev_rrh, prev_used
            reuse_left[supp[i]] += 1.0
            fh_left[b] += r_bar_v[i]
            power_left[b] += p_v[i]
        dfs(i + 1, value, chosen)

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 4 * nv + 100))
    try:
        dfs(0, 0.0, [])
    finally:
        sys.setrecursionlimit(old_limit)

    if best_pattern is None:
        # only the slice minimums can make the system infeasible; report the
        # best rate each underprovisioned slice could reach on its own
        shortfall = {}
        for v, r_min in enumerate(problem.slice_min):
            if r_min <= 0.0:
                continue
            mask = (problem.slice_of_user == v)[None, None, :]
            alone = replace(
                problem,
                r_hat=np.where(mask, problem.r_hat, 0.0),
                slice_min=np.zeros_like(problem.slice_min),
            )
            _, max_v, _ = solve_bnb(alone)
            if max_v < r_min - 1e-12:
                shortfall[int(v)] = {"required": float(r_min), "achievable": max_v}
        if not shortfall:
            relaxed = replace(problem, slice_min=np.zeros_like(problem.slice_min))
            best_rates, _, _ = solve_bnb(relaxed)
            shortfall = _slice_shortfall(problem, best_rates)
        raise AssignInfeasible("no schedule meets every slice minimum rate", shortfall)
    assignment = Assignment.from_triples((B, C, K), best_pattern)
    return assignment, problem.objective_of(assignment), {"nodes": nodes}
