"""Dense log-barrier interior-point solver.

Every objective and constraint handled here is expressed in a fixed smooth
convex atom form

    f(x) = const + a.x + sum_l s_l (g_l.x + d_l)^2 + sum_j u_j x_j^2
           + sum_m t_m ln(x_{i_m})

with s >= 0, u >= 0 and t <= 0, so convexity is auditable from the stored
coefficients.  The solver pulls the starting point into the strict interior
by minimizing the worst constraint margin (phase I), then follows the
central path of  minimize f0(x)  s.t.  f_i(x) <= 0  with damped Newton
centering steps (phase II).  Problems at the intended scale have a few
hundred variables and constraints, so the whole constraint set is stacked
into flat arrays once and every barrier evaluation runs as a handful of
dense matrix products instead of a Python loop over constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SmoothFn:
    """One convex atom-form function of a flat real variable vector."""

    n: int
    const: float = 0.0
    lin: np.ndarray | None = None
    quad_w: np.ndarray | None = None  # (L,) nonnegative
    quad_G: np.ndarray | None = None  # (L, n)
    quad_d: np.ndarray | None = None  # (L,)
    diag_w: np.ndarray | None = None  # (n,) nonnegative
    log_w: np.ndarray | None = None  # (M,) nonpositive
    log_idx: np.ndarray | None = None  # (M,)
    label: str = ""

    def __post_init__(self) -> None:
        z = np.zeros
        if self.lin is None:
            self.lin = z(self.n)
        if self.quad_w is None:
            self.quad_w = z(0)
            self.quad_G = z((0, self.n))
            self.quad_d = z(0)
        if self.diag_w is None:
            self.diag_w = z(self.n)
        if self.log_w is None:
            self.log_w = z(0)
            self.log_idx = z(0, dtype=np.int64)

    def is_convex_form(self) -> bool:
        return (
            bool(np.all(self.quad_w >= 0))
            and bool(np.all(self.diag_w >= 0))
            and bool(np.all(self.log_w <= 0))
        )

    def in_domain(self, x: np.ndarray) -> bool:
        return self.log_w.size == 0 or bool(np.all(x[self.log_idx] > 0.0))

    def value(self, x: np.ndarray) -> float:
        v = self.const + self.lin @ x
        if self.quad_w.size:
            u = self.quad_G @ x + self.quad_d
            v += self.quad_w @ (u * u)
        if np.any(self.diag_w):
            v += self.diag_w @ (x * x)
        if self.log_w.size:
            v += self.log_w @ np.log(x[self.log_idx])
        return float(v)

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = self.lin.copy()
        if self.quad_w.size:
            u = self.quad_G @ x + self.quad_d
            g += 2.0 * self.quad_G.T @ (self.quad_w * u)
        if np.any(self.diag_w):
            g += 2.0 * self.diag_w * x
        if self.log_w.size:
            np.add.at(g, self.log_idx, self.log_w / x[self.log_idx])
        return g

    def hess(self, x: np.ndarray) -> np.ndarray:
        H = np.zeros((self.n, self.n))
        if self.quad_w.size:
            H += 2.0 * (self.quad_G.T * self.quad_w) @ self.quad_G
        if np.any(self.diag_w):
            H[np.diag_indices(self.n)] += 2.0 * self.diag_w
        if self.log_w.size:
            np.add.at(
                H,
                (self.log_idx, self.log_idx),
                -self.log_w / x[self.log_idx] ** 2,
            )
        return H

    def scaled(self, factor: float) -> "SmoothFn":
        return SmoothFn(
            n=self.n,
            const=self.const * factor,
            lin=self.lin * factor,
            quad_w=self.quad_w * factor,
            quad_G=self.quad_G.copy(),
            quad_d=self.quad_d.copy(),
            diag_w=self.diag_w * factor,
            log_w=self.log_w * factor,
            log_idx=self.log_idx.copy(),
            label=self.label,
        )

    def with_extra_coord(self, extra_lin: float) -> "SmoothFn":
        """Same function over (x, s) with an added linear term in s."""
        n = self.n + 1
        return SmoothFn(
            n=n,
            const=self.const,
            lin=np.append(self.lin, extra_lin),
            quad_w=self.quad_w.copy(),
            quad_G=np.pad(self.quad_G, ((0, 0), (0, 1))),
            quad_d=self.quad_d.copy(),
            diag_w=np.append(self.diag_w, 0.0),
            log_w=self.log_w.copy(),
            log_idx=self.log_idx.copy(),
            label=self.label,
        )


class _Stacked:
    """All inequality constraints flattened into shared arrays.

    Lets one barrier evaluation (values, gradient, Hessian) run as a few
    dense products over every constraint at once.  Quadratic rows keep a
    row-to-constraint owner index; per-constraint reductions use bincount
    and reduceat over the (sorted) owner array.
    """

    def __init__(self, fns: list[SmoothFn]):
        self.fns = fns
        m = len(fns)
        n = fns[0].n
        self.m, self.n = m, n
        self.const = np.array([f.const for f in fns])
        self.A = np.stack([f.lin for f in fns])
        gs, ds, ws, owner = [], [], [], []
        for i, f in enumerate(fns):
            if f.quad_w.size:
                gs.append(f.quad_G)
                ds.append(f.quad_d)
                ws.append(f.quad_w)
                owner.append(np.full(f.quad_w.size, i))
        if gs:
            self.G = np.concatenate(gs)
            self.d = np.concatenate(ds)
            self.s = np.concatenate(ws)
            self.owner = np.concatenate(owner)
            self.groups, self.group_starts = np.unique(self.owner, return_index=True)
        else:
            self.G = np.zeros((0, n))
            self.d = self.s = np.zeros(0)
            self.owner = np.zeros(0, dtype=np.int64)
            self.groups = self.group_starts = np.zeros(0, dtype=np.int64)
        self.D = np.stack([f.diag_w for f in fns])
        self.has_diag = bool(self.D.any())
        cols = sorted({int(j) for f in fns for j in f.log_idx})
        self.log_cols = np.array(cols, dtype=np.int64)
        self.T = np.zeros((m, len(cols)))
        pos = {j: p for p, j in enumerate(cols)}
        for i, f in enumerate(fns):
            for w, j in zip(f.log_w, f.log_idx):
                self.T[i, pos[int(j)]] += w
        self.has_log = len(cols) > 0

    def in_domain(self, x: np.ndarray) -> bool:
        return not self.has_log or bool(np.all(x[self.log_cols] > 0.0))

    def values(self, x: np.ndarray) -> np.ndarray:
        v = self.const + self.A @ x
        if self.s.size:
            y = self.G @ x + self.d
            v = v + np.bincount(self.owner, weights=self.s * y * y, minlength=self.m)
        if self.has_diag:
            v = v + self.D @ (x * x)
        if self.has_log:
            v = v + self.T @ np.log(x[self.log_cols])
        return v

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        J = self.A.copy()
        if self.s.size:
            y = self.G @ x + self.d
            rows = self.G * (2.0 * self.s * y)[:, None]
            J[self.groups] += np.add.reduceat(rows, self.group_starts, axis=0)
        if self.has_diag:
            J += 2.0 * self.D * x[None, :]
        if self.has_log:
            J[:, self.log_cols] += self.T / x[self.log_cols][None, :]
        return J

    def barrier_terms(
        self, x: np.ndarray, vals: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """Gradient and Hessian of -sum log(-f_i) at an interior x."""
        q = 1.0 / (-vals)
        J = self.jacobian(x)
        Jq = J * q[:, None]
        g = J.T @ q
        H = Jq.T @ Jq
        if self.s.size:
            GW = self.G * (2.0 * self.s * q[self.owner])[:, None]
            H += self.G.T @ GW
        if self.has_diag:
            H[np.diag_indices(self.n)] += 2.0 * (self.D.T @ q)
        if self.has_log:
            xc = x[self.log_cols]
            H[self.log_cols, self.log_cols] += -(self.T.T @ q) / (xc * xc)
        return g, H


class SolverError(RuntimeError):
    """Raised when the barrier method stalls; carries the best iterate."""

    def __init__(self, message: str, best_x: np.ndarray | None = None):
        super().__init__(message)
        self.best_x = best_x


class InfeasibleError(RuntimeError):
    """Raised when phase I certifies the constraint system is infeasible.

    ``margin`` is the best achievable value of max_i f_i(x); a positive
    value means no point satisfies every constraint.
    """

    def __init__(self, message: str, margin: float, by_label: dict | None = None):
        super().__init__(message)
        self.margin = margin
        self.by_label = by_label or {}


@dataclass
class IpmResult:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    gap: float
    kkt_residual: float
    newton_iterations: int
    status: str = "optimal"


def _newton_step(H: np.ndarray, g: np.ndarray) -> np.ndarray:
    reg = 1e-12 * (1.0 + np.trace(H) / H.shape[0])
    try:
        L = np.linalg.cholesky(H + reg * np.eye(H.shape[0]))
        return -np.linalg.solve(L.T, np.linalg.solve(L, g))
    except np.linalg.LinAlgError:
        return -np.linalg.lstsq(H + 1e-8 * np.eye(H.shape[0]), g, rcond=None)[0]


def _center(
    f0: SmoothFn,
    block: _Stacked,
    x: np.ndarray,
    t: float,
    max_iter: int,
    stop_early=None,
    dec_tol: float = 1e-10,
) -> tuple[np.ndarray, int]:
    """Damped Newton minimization of t*f0 + barrier at fixed t."""
    iters = 0
    for _ in range(max_iter):
        vals = block.values(x)
        if np.any(vals >= 0.0):
            raise SolverError("lost interior point during centering", x)
        bg, bH = block.barrier_terms(x, vals)
        g = t * f0.grad(x) + bg
        H = t * f0.hess(x) + bH
        step = _newton_step(H, g)
        decrement = -0.5 * g @ step
        if decrement <= dec_tol:
            break
        # backtracking line search staying inside every domain and margin
        alpha = 1.0
        phi0 = t * f0.value(x) - np.sum(np.log(-vals))
        accepted = False
        for _ in range(60):
            xn = x + alpha * step
            if f0.in_domain(xn) and block.in_domain(xn):
                vn = block.values(xn)
                if np.all(vn < 0.0):
                    phin = t * f0.value(xn) - np.sum(np.log(-vn))
                    if phin <= phi0 - 0.02 * alpha * decrement:
                        x = xn
                        accepted = True
                        break
            alpha *= 0.5
        iters += 1
        if not accepted:
            break
        if stop_early is not None and stop_early(x):
            break
    return x, iters


def find_interior(
    constraints: list[SmoothFn],
    x0: np.ndarray,
    margin_target: float,
    max_rounds: int = 12,
) -> tuple[np.ndarray, int]:
    """Phase I: push x0 to a point with every constraint below -margin_target.

    Requires only that x0 is inside every log domain; constraints may be
    tight or mildly violated at x0.
    """
    plain = _Stacked(constraints)
    worst = float(np.max(plain.values(x0)))
    if worst <= -margin_target:
        return x0, 0
    n = x0.size
    x = np.append(x0, worst + 1.0)
    shifted = _Stacked([c.with_extra_coord(-1.0) for c in constraints])
    objective = SmoothFn(n=n + 1, lin=np.append(np.zeros(n), 1.0))

    def good(xs: np.ndarray) -> bool:
        return float(np.max(plain.values(xs[:-1]))) <= -margin_target

    t = 1.0
    total = 0
    for _ in range(max_rounds):
        x, it = _center(objective, shifted, x, t, max_iter=50, stop_early=good)
        total += it
        if good(x):
            return x[:-1], total
        if len(constraints) / t < 0.1 * margin_target:
            break
        t *= 10.0
    vals = plain.values(x[:-1])
    margins = {
        c.label: float(v)
        for c, v in zip(constraints, vals)
        if v > -margin_target
    }
    raise InfeasibleError(
        "no strictly feasible point found", margin=float(x[-1]), by_label=margins
    )


def minimize_with_barrier(
    f0: SmoothFn,
    constraints: list[SmoothFn],
    x0: np.ndarray,
    gap_tol: float = 1e-9,
    margin_target: float = 1e-8,
    mu: float = 30.0,
    max_centering_rounds: int = 40,
) -> IpmResult:
    """Minimize f0 subject to f_i <= 0 from a (near-)feasible start."""
    bad = [f.label for f in [f0, *constraints] if not f.is_convex_form()]
    if bad:
        raise ValueError(f"non-convex atom coefficients in: {bad}")
    if not f0.in_domain(x0) or not all(c.in_domain(x0) for c in constraints):
        raise ValueError("starting point outside a log domain")

    x, total_iters = find_interior(constraints, x0, margin_target)
    block = _Stacked(constraints)
    m = len(constraints)
    t = max(1.0, m / max(1.0, abs(f0.value(x))))
    for _ in range(max_centering_rounds):
        x, it = _center(f0, block, x, t, max_iter=60)
        total_iters += it
        if m / t <= gap_tol:
            break
        t *= mu
    else:
        raise SolverError("barrier did not reach the requested gap", x)

    vals = block.values(x)
    duals = 1.0 / (t * (-vals))
    grad_lag = f0.grad(x) + block.jacobian(x).T @ duals
    kkt = max(float(np.max(np.abs(grad_lag))), m / t)
    return IpmResult(
        x=x,
        objective=f0.value(x),
        duals=duals,
        gap=m / t,
        kkt_residual=kkt,
        newton_iterations=total_iters,
    )
