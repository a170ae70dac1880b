"""Convex beamforming step of the alternating optimization.

With the schedule fixed, the worst-case sum-rate problem is lifted with four
auxiliary variables per scheduled triple: psi1 (1 + worst-case SINR floor),
phi1 (an upper bound on its noise-plus-interference), psi2 (a fronthaul rate
budget, at least the optimistic rate bound) and phi2 (a lower bound on the
optimistic-rate denominator).  Nonconvex couplings are replaced around the
incumbent point by

* a bilinear majorant for the product psi1*phi1 (exact at the incumbent),
* tangent minorants for received-power terms |w^T h|^2 that appear on the
  helpful side of an inequality,
* a tangent overestimate of ln(signal + phi2) for the fronthaul budget row,

all of which keep every row convex and conservative: any feasible point of
the surrogate satisfies the true worst-case constraints, and the incumbent
stays feasible with equality, which is what makes the outer loop monotone.

Received-power terms whose protected value is not positive at the incumbent
are replaced by their trivial lower bound zero, matching the clamped
worst-case SINR evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .ipm import InfeasibleError, IpmResult, SmoothFn, minimize_with_barrier
from .rate import Assignment, BeamformerSet, link_products, sinr_tables
from .scma import CodebookMap
from .topology import NetworkConfig

LN2 = math.log(2.0)


def bilinear_surrogate(psi, phi, psi_t, phi_t) -> np.ndarray | float:
    """Convex upper bound of the product psi*phi, exact when
    psi - phi == psi_t - phi_t (in particular at the expansion point)."""
    psi, phi = np.asarray(psi, float), np.asarray(phi, float)
    u_t = np.asarray(psi_t, float) - np.asarray(phi_t, float)
    return 0.25 * (psi + phi) ** 2 - 0.25 * (u_t**2 + 2.0 * u_t * (psi - phi - u_t))


def quadratic_tangent(theta, theta_t) -> np.ndarray | float:
    """Affine lower bound of ||theta||^2 around theta_t (exact there).

    Broadcasts over leading axes; the last axis is the vector dimension.
    """
    theta = np.asarray(theta, float)
    theta_t = np.asarray(theta_t, float)
    return np.sum(theta_t * (2.0 * theta - theta_t), axis=-1)


@dataclass
class AuxiliaryVars:
    """Per-triple auxiliary values, all (B, C, K).

    Unscheduled triples hold the neutral values psi1=1, phi1=phi2=sigma,
    psi2=0.
    """

    psi1: np.ndarray
    phi1: np.ndarray
    psi2: np.ndarray
    phi2: np.ndarray

    @staticmethod
    def from_point(
        W: BeamformerSet,
        assignment: Assignment,
        cmap: CodebookMap,
        channels: ChannelSet,
        sigma: float,
    ) -> "AuxiliaryVars":
        """Tight auxiliary values of an operating point: psi1 = 1 + worst-case
        SINR, phi1 = its denominator, psi2 = optimistic rate, phi2 = its
        denominator."""
        t = sinr_tables(W, assignment, cmap, channels, sigma, components=True)
        rho = assignment.rho.astype(bool)
        psi1 = np.where(rho, 1.0 + t["lower"], 1.0)
        phi1 = np.where(rho, t["den_hi"], sigma)
        psi2 = np.where(rho, np.log2(1.0 + t["upper"]), 0.0)
        phi2 = np.where(rho, t["den_lo"], sigma)
        return AuxiliaryVars(psi1=psi1, phi1=phi1, psi2=psi2, phi2=phi2)


@dataclass
class ConvexSubproblem:
    """One convex surrogate instance ready for the barrier solver.

    ``tally`` counts the constraint families of the underlying formulation
    over the full (B, C, K) index set; rows whose scheduled part is empty are
    trivially satisfied and not materialized for the solver, so
    ``len(constraints)`` can be smaller than the tally total.
    """

    n_var: int
    objective: SmoothFn
    constraints: list[SmoothFn]
    x0: np.ndarray
    active: list[tuple[int, int, int]]
    slots: list[tuple[int, int, int]]
    slot_col: dict
    aux_col: dict
    expansion_W: BeamformerSet
    expansion_aux: AuxiliaryVars
    tally: dict = field(default_factory=dict)
    num_antennas: int = 1
    shape: tuple[int, int, int] = (0, 0, 0)

    def tally_total(self) -> int:
        return sum(self.tally.values())

    def is_convex(self) -> bool:
        return self.objective.is_convex_form() and all(
            c.is_convex_form() for c in self.constraints
        )

    def describe(self) -> str:
        lines = [
            f"variables: {self.n_var} "
            f"({len(self.slots)} beam slots x {2 * self.num_antennas} reals "
            f"+ {len(self.active)} triples x 4 auxiliaries)",
            f"constraint families: {self.tally} (total {self.tally_total()})",
            f"materialized rows: {len(self.constraints)}",
        ]
        for c in self.constraints:
            lines.append(
                f"  {c.label}: quad_rows={c.quad_w.size} "
                f"diag_terms={int(np.count_nonzero(c.diag_w))} "
                f"logs={c.log_w.size} const={c.const:.6g}"
            )
        return "\n".join(lines)


def _re_im_rows(n_var: int, cols_re: np.ndarray, cols_im: np.ndarray, h: np.ndarray):
    """Rows of the real and imaginary parts of w^T h over the flat layout."""
    a_re = np.zeros(n_var)
    a_im = np.zeros(n_var)
    a_re[cols_re] = h.real
    a_re[cols_im] = -h.imag
    a_im[cols_re] = h.imag
    a_im[cols_im] = h.real
    return a_re, a_im


def build_subproblem(
    W: BeamformerSet,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    aux: AuxiliaryVars | None = None,
) -> ConvexSubproblem:
    """Assemble the convex surrogate around the incumbent (W, schedule)."""
    problems = assignment.validate(config, cmap)
    if problems:
        raise ValueError("infeasible schedule: " + "; ".join(problems))
    sigma = config.noise_power
    if aux is None:
        aux = AuxiliaryVars.from_point(W, assignment, cmap, channels, sigma)

    B, C, K = assignment.rho.shape
    M = config.num_antennas
    h = channels.h
    theta = channels.theta
    X, W2 = link_products(W, channels)

    active = sorted(assignment.triples())
    supports = {c: cmap.support(c) for c in range(C)}
    slot_set: set[tuple[int, int, int]] = set()
    for b, c, k in active:
        for n in supports[c]:
            slot_set.add((b, int(n), k))
    slots = sorted(slot_set)
    slot_col = {s: 2 * M * i for i, s in enumerate(slots)}
    aux_base = 2 * M * len(slots)
    aux_col = {t: aux_base + 4 * j for j, t in enumerate(active)}
    n_var = aux_base + 4 * len(active)

    tally = {
        "signal_epigraph": B * C * K,
        "interference_upper": B * C * K,
        "rate_upper_epigraph": B * C * K,
        "interference_lower": B * C * K,
        "power": B,
        "fronthaul": B,
        "slice_min_rate": len(config.slice_min_rates_bps_hz),
    }

    # starting point: incumbent beams plus tight auxiliaries
    x0 = np.zeros(n_var)
    for s, col in slot_col.items():
        b, n, k = s
        x0[col : col + M] = W.w[b, n, k].real
        x0[col + M : col + 2 * M] = W.w[b, n, k].imag
    for t, col in aux_col.items():
        b, c, k = t
        x0[col + 0] = aux.psi1[b, c, k]
        x0[col + 1] = aux.phi1[b, c, k]
        x0[col + 2] = aux.psi2[b, c, k]
        x0[col + 3] = aux.phi2[b, c, k]

    def slot_cols(s):
        col = slot_col[s]
        return np.arange(col, col + M), np.arange(col + M, col + 2 * M)

    # objective: maximize sum log2 psi1 -> minimize the negative
    obj_idx = np.array([aux_col[t] for t in active], dtype=np.int64)
    objective = SmoothFn(
        n=n_var,
        log_w=np.full(len(active), -1.0 / LN2),
        log_idx=obj_idx,
        label="objective",
    )

    constraints: list[SmoothFn] = []

    def interferer_slots(b, c, k):
        """(slot, victim-channel, victim-protection) for every co-codebook
        beam heard by (b, c, k)."""
        out = []
        for b2, c2, k2 in active:
            if c2 != c or (b2 == b and k2 == k):
                continue
            for n in supports[c]:
                n = int(n)
                out.append(((b2, n, k2), h[b2, n, k], theta[b2, n, k]))
        return out

    for t in active:
        b, c, k = t
        col = aux_col[t]
        psi1_i, phi1_i, psi2_i, phi2_i = col, col + 1, col + 2, col + 3

        # --- signal epigraph: majorized psi1*phi1 - phi1 <= tangent-minorized
        # protected signal power
        u_t = aux.psi1[b, c, k] - aux.phi1[b, c, k]
        lin = np.zeros(n_var)
        lin[psi1_i] = -0.5 * u_t
        lin[phi1_i] = 0.5 * u_t - 1.0
        const = 0.25 * u_t * u_t
        qg = np.zeros((1, n_var))
        qg[0, psi1_i] = 1.0
        qg[0, phi1_i] = 1.0
        diag = np.zeros(n_var)
        for n in supports[c]:
            n = int(n)
            if X[b, n, k, k] - theta[b, n, k] * W2[b, n, k] <= 0.0:
                continue  # clamped to zero at the incumbent
            re_cols, im_cols = slot_cols((b, n, k))
            a_re, a_im = _re_im_rows(n_var, re_cols, im_cols, h[b, n, k])
            inner = np.dot(W.w[b, n, k], h[b, n, k])
            lin -= 2.0 * (inner.real * a_re + inner.imag * a_im)
            const += abs(inner) ** 2
            diag[re_cols] += theta[b, n, k]
            diag[im_cols] += theta[b, n, k]
        constraints.append(
            SmoothFn(
                n=n_var,
                const=const,
                lin=lin,
                quad_w=np.array([0.25]),
                quad_G=qg,
                quad_d=np.zeros(1),
                diag_w=diag,
                label=f"signal_epigraph[{b},{c},{k}]",
            )
        )

        interferers = interferer_slots(b, c, k)

        # --- interference upper bound: protected co-codebook power + noise
        # <= phi1
        lin = np.zeros(n_var)
        lin[phi1_i] = -1.0
        diag = np.zeros(n_var)
        rows, weights = [], []
        for slot, hv, th in interferers:
            re_cols, im_cols = slot_cols(slot)
            a_re, a_im = _re_im_rows(n_var, re_cols, im_cols, hv)
            rows += [a_re, a_im]
            weights += [1.0, 1.0]
            diag[re_cols] += th
            diag[im_cols] += th
        constraints.append(
            SmoothFn(
                n=n_var,
                const=sigma,
                lin=lin,
                quad_w=np.array(weights),
                quad_G=np.array(rows) if rows else np.zeros((0, n_var)),
                quad_d=np.zeros(len(rows)),
                diag_w=diag,
                label=f"interference_upper[{b},{c},{k}]",
            )
        )

        # --- fronthaul rate epigraph, log domain: psi2*ln2 + ln(phi2) must
        # dominate the tangent overestimate of ln(signal_upper + phi2)
        s_bar_t = 0.0
        for n in supports[c]:
            n = int(n)
            s_bar_t += X[b, n, k, k] + theta[b, n, k] * W2[b, n, k]
        t_ref = s_bar_t + aux.phi2[b, c, k]
        lin = np.zeros(n_var)
        lin[psi2_i] = -LN2
        lin[phi2_i] = 1.0 / t_ref
        diag = np.zeros(n_var)
        rows, weights = [], []
        for n in supports[c]:
            n = int(n)
            re_cols, im_cols = slot_cols((b, n, k))
            a_re, a_im = _re_im_rows(n_var, re_cols, im_cols, h[b, n, k])
            rows += [a_re, a_im]
            weights += [1.0 / t_ref, 1.0 / t_ref]
            diag[re_cols] += theta[b, n, k] / t_ref
            diag[im_cols] += theta[b, n, k] / t_ref
        constraints.append(
            SmoothFn(
                n=n_var,
                const=math.log(t_ref) - 1.0,
                lin=lin,
                quad_w=np.array(weights),
                quad_G=np.array(rows),
                quad_d=np.zeros(len(rows)),
                diag_w=diag,
                log_w=np.array([-1.0]),
                log_idx=np.array([phi2_i], dtype=np.int64),
                label=f"rate_upper_epigraph[{b},{c},{k}]",
            )
        )

        # --- interference lower bound: phi2 <= tangent-minorized deflated
        # co-codebook power + noise
        lin = np.zeros(n_var)
        lin[phi2_i] = 1.0
        const = -sigma
        diag = np.zeros(n_var)
        for slot, hv, th in interferers:
            b2, n2, k2 = slot
            if X[b2, n2, k2, k] - th * W2[b2, n2, k2] <= 0.0:
                continue  # clamped to zero at the incumbent
            re_cols, im_cols = slot_cols(slot)
            a_re, a_im = _re_im_rows(n_var, re_cols, im_cols, hv)
            inner = np.dot(W.w[b2, n2, k2], hv)
            lin -= 2.0 * (inner.real * a_re + inner.imag * a_im)
            const += abs(inner) ** 2
            diag[re_cols] += th
            diag[im_cols] += th
        constraints.append(
            SmoothFn(
                n=n_var,
                const=const,
                lin=lin,
                diag_w=diag,
                label=f"interference_lower[{b},{c},{k}]",
            )
        )

    # --- per-RRH transmit power over scheduled beams (codebook multiplicity
    # counts)
    for b in range(B):
        diag = np.zeros(n_var)
        any_slot = False
        for b2, c2, k2 in active:
            if b2 != b:
                continue
            for n in supports[c2]:
                re_cols, im_cols = slot_cols((b, int(n), k2))
                diag[re_cols] += 1.0
                diag[im_cols] += 1.0
                any_slot = True
        if any_slot:
            constraints.append(
                SmoothFn(
                    n=n_var,
                    const=-float(config.power_caps_w[b]),
                    diag_w=diag,
                    label=f"power[{b}]",
                )
            )

    # --- per-RRH fronthaul budget
    for b in range(B):
        cols = [aux_col[t] + 2 for t in active if t[0] == b]
        if not cols:
            continue
        lin = np.zeros(n_var)
        lin[cols] = 1.0
        constraints.append(
            SmoothFn(
                n=n_var,
                const=-float(config.fronthaul_caps_bps_hz[b]),
                lin=lin,
                label=f"fronthaul[{b}]",
            )
        )

    # --- per-slice minimum aggregate worst-case rate
    for v, r_min in enumerate(config.slice_min_rates_bps_hz):
        if r_min <= 0.0:
            continue
        cols = [aux_col[t] for t in active if slice_of_user[t[2]] == v]
        if not cols:
            raise InfeasibleError(
                f"slice {v} has a minimum rate but no scheduled user",
                margin=float(r_min),
                by_label={f"slice_min_rate[{v}]": float(r_min)},
            )
        constraints.append(
            SmoothFn(
                n=n_var,
                const=float(r_min),
                log_w=np.full(len(cols), -1.0 / LN2),
                log_idx=np.array(cols, dtype=np.int64),
                label=f"slice_min_rate[{v}]",
            )
        )

    # --- nonnegative fronthaul budgets
    for t in active:
        lin = np.zeros(n_var)
        lin[aux_col[t] + 2] = -1.0
        constraints.append(
            SmoothFn(n=n_var, lin=lin, label=f"psi2_nonneg[{t[0]},{t[1]},{t[2]}]")
        )

    # normalize each row by its magnitude at the incumbent
    scaled = []
    for c in constraints:
        mag = (
            abs(c.const)
            + float(np.abs(c.lin) @ np.abs(x0))
            + float(c.quad_w @ (c.quad_G @ x0 + c.quad_d) ** 2)
            + float(c.diag_w @ (x0 * x0))
            + float(np.sum(np.abs(c.log_w * np.log(np.maximum(x0[c.log_idx], 1e-300)))))
        )
        scaled.append(c.scaled(1.0 / max(1.0, mag)))

    return ConvexSubproblem(
        n_var=n_var,
        objective=objective,
        constraints=scaled,
        x0=x0,
        active=active,
        slots=slots,
        slot_col=slot_col,
        aux_col=aux_col,
        expansion_W=W,
        expansion_aux=aux,
        tally=tally,
        num_antennas=M,
        shape=(B, C, K),
    )


def solve_subproblem(
    problem: ConvexSubproblem, tol: float = 1e-9
) -> tuple[BeamformerSet, AuxiliaryVars, IpmResult]:
    """Solve one surrogate instance.

    Returns updated beams (scheduled slots only; other slots keep their
    incumbent values), the auxiliary values at the solution and the solver
    report with its KKT residual.
    """
    W_new = problem.expansion_W.copy()
    aux = AuxiliaryVars(
        psi1=problem.expansion_aux.psi1.copy(),
        phi1=problem.expansion_aux.phi1.copy(),
        psi2=problem.expansion_aux.psi2.copy(),
        phi2=problem.expansion_aux.phi2.copy(),
    )
    if not problem.active:
        empty = IpmResult(
            x=problem.x0,
            objective=0.0,
            duals=np.zeros(0),
            gap=0.0,
            kkt_residual=0.0,
            newton_iterations=0,
            status="empty",
        )
        return W_new, aux, empty

    result = minimize_with_barrier(
        problem.objective, problem.constraints, problem.x0, gap_tol=tol
    )
    M = problem.num_antennas
    x = result.x
    for s, col in problem.slot_col.items():
        b, n, k = s
        W_new.w[b, n, k] = x[col : col + M] + 1j * x[col + M : col + 2 * M]
    for t, col in problem.aux_col.items():
        b, c, k = t
        aux.psi1[b, c, k] = x[col]
        aux.phi1[b, c, k] = x[col + 1]
        aux.psi2[b, c, k] = x[col + 2]
        aux.phi2[b, c, k] = x[col + 3]
    return W_new, aux, result


def matched_filter(h: np.ndarray, power: float) -> np.ndarray:
    """Beam with w^T h real positive and ||w||^2 = power."""
    norm = np.linalg.norm(h)
    if norm == 0.0:
        return np.zeros_like(h)
    return math.sqrt(power) * np.conj(h) / norm


def refresh_reference_beams(
    W: BeamformerSet,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
) -> None:
    """Overwrite every unscheduled beam slot with a matched-filter reference
    beam at the power an additional codebook would plausibly receive.

    These slots carry no transmit power; they only price candidate schedule
    changes for the assignment step.
    """
    B, N, K, _ = W.w.shape
    U = cmap.degree
    uses = assignment.rho.sum(axis=(1, 2)) * U  # (B,) scheduled beam uses
    scheduled = set()
    for b, c, k in assignment.triples():
        for n in cmap.support(c):
            scheduled.add((b, int(n), k))
    for b in range(B):
        p_ref = config.power_caps_w[b] / (uses[b] + U)
        for n in range(N):
            for k in range(K):
                if (b, n, k) not in scheduled:
                    W.w[b, n, k] = matched_filter(channels.h[b, n, k], p_ref)


def init_beamformers(
    channels: ChannelSet,
    assignment: Assignment,
    cmap: CodebookMap,
    config: NetworkConfig,
) -> BeamformerSet:
    """Matched-filter start: each RRH splits its power cap equally over its
    scheduled links, and each link concentrates its share on its best
    in-codebook subcarrier (max beats the even split; the remaining support
    slots keep a vanishing seed beam so the surrogate step can still grow
    them)."""
    B, N, K, M = channels.h.shape
    W = BeamformerSet(w=np.zeros((B, N, K, M), dtype=complex))
    links = assignment.rho.sum(axis=(1, 2))  # (B,) scheduled links
    for b, c, k in assignment.triples():
        p_use = config.power_caps_w[b] / links[b]
        supp = [int(n) for n in cmap.support(c)]
        gains = [float(np.sum(np.abs(channels.h[b, n, k]) ** 2)) for n in supp]
        best = supp[int(np.argmax(gains))]
        weights = {n: (1.0 if n == best else 1e-6) for n in supp}
        total = sum(weights.values())
        for n in supp:
            W.w[b, n, k] = matched_filter(
                channels.h[b, n, k], p_use * weights[n] / total
            )
    refresh_reference_beams(W, assignment, cmap, channels, config)
    return W
