"""Per-link SINRs and achievable-rate accounting.

The received SINR of a scheduled (RRH, codebook, user) triple aggregates the
useful power over the codebook's subcarriers and is degraded by co-codebook
beams of the same RRH (other users) and of all other RRHs.  Under norm-ball
CSI uncertainty every received-power term moves by at most the protection
level theta * ||w||^2, which gives closed-form worst-case SINR brackets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .scma import CodebookMap, reuse_count
from .topology import NetworkConfig


@dataclass
class Assignment:
    """Binary scheduling indicator rho over (RRH, codebook, user)."""

    rho: np.ndarray  # (B, C, K) int8

    def triples(self) -> list[tuple[int, int, int]]:
        return [tuple(t) for t in np.argwhere(self.rho != 0)]

    def copy(self) -> "Assignment":
        return Assignment(rho=self.rho.copy())

    @staticmethod
    def from_triples(shape: tuple[int, int, int], triples) -> "Assignment":
        rho = np.zeros(shape, dtype=np.int8)
        for b, c, k in triples:
            rho[b, c, k] = 1
        return Assignment(rho=rho)

    def validate(self, config: NetworkConfig, cmap: CodebookMap) -> list[str]:
        problems = []
        rho = self.rho
        if not np.isin(rho, (0, 1)).all():
            problems.append("rho entries must be binary")
        # a user may not be served by two different RRHs
        per_rrh = rho.sum(axis=1)  # (B, K)
        if ((per_rrh > 0).sum(axis=0) > 1).any():
            problems.append("some user is scheduled at more than one RRH")
        if config.single_codebook_per_user and (per_rrh > 1).any():
            problems.append("some user holds more than one codebook")
        if (reuse_count(rho, cmap.q) > config.reuse_limit).any():
            problems.append("subcarrier reuse limit exceeded")
        return problems


@dataclass
class BeamformerSet:
    """Beamforming vectors w over (RRH, subcarrier, user).

    w : (B, N, K, M) complex.  Slots outside the scheduled set carry
    reference beams used only to price candidate schedule changes; they do
    not consume transmit power.
    """

    w: np.ndarray

    def copy(self) -> "BeamformerSet":
        return BeamformerSet(w=self.w.copy())

    def beam_power(self) -> np.ndarray:
        """(B, N, K) squared norms ||w||^2."""
        return np.sum(np.abs(self.w) ** 2, axis=-1)


def link_products(W: BeamformerSet, channels: ChannelSet) -> tuple[np.ndarray, np.ndarray]:
    """Cross received powers X[b, n, p, k] = |w[b,n,p]^T h[b,n,k]|^2 and
    beam powers ||w[b,n,k]||^2."""
    inner = np.einsum("bnpm,bnkm->bnpk", W.w, channels.h)
    return np.abs(inner) ** 2, W.beam_power()


def _codebook_sums(q: np.ndarray, per_n: np.ndarray) -> np.ndarray:
    """Sum per-subcarrier quantities over each codebook support.

    per_n : (B, N, ...) -> (B, C, ...)
    """
    return np.einsum("nc,bn...->bc...", q.astype(float), per_n)


def _interference_split(terms_bcpk: np.ndarray, rho: np.ndarray, own: np.ndarray):
    """Split co-codebook received power into same-RRH and cross-RRH parts.

    terms_bcpk : (B, C, K, K) per-codebook power of beam (b, c, p) at victim k
    own : (B, C, K) the p == k diagonal of terms_bcpk
    Returns (intra, inter), both (B, C, K).
    """
    per_rrh = np.einsum("bcpk,bcp->bck", terms_bcpk, rho.astype(float))
    intra = per_rrh - rho * own
    inter = per_rrh.sum(axis=0, keepdims=True) - per_rrh
    return intra, inter


def sinr_tables(
    W: BeamformerSet,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    sigma: float,
    components: bool = False,
) -> dict[str, np.ndarray]:
    """All-triple SINR tables: nominal gamma, worst-case lower gamma_hat and
    worst-case upper gamma_bar, each (B, C, K).

    With ``components=True`` the numerators and denominators of the brackets
    are returned as well (num_low/den_hi for the lower bracket, num_hi/den_lo
    for the upper one).
    """
    X, W2 = link_products(W, channels)
    q = cmap.q
    rho = assignment.rho.astype(float)
    theta = channels.theta  # (B, N, K)

    protect = theta[:, :, None, :] * W2[:, :, :, None]  # (B, N, p, k)
    diag = np.arange(X.shape[2])

    # nominal
    A = _codebook_sums(q, X)
    own = A[:, :, diag, diag]
    intra, inter = _interference_split(A, rho, own)
    gamma = rho * own / (intra + inter + sigma)

    # lower bracket: protected numerator (clamped per subcarrier), inflated
    # interference
    num_low_n = np.maximum(0.0, X[:, :, diag, diag] - theta * W2)
    num_low = _codebook_sums(q, num_low_n)
    A_hi = _codebook_sums(q, X + protect)
    own_hi = A_hi[:, :, diag, diag]
    intra_hi, inter_hi = _interference_split(A_hi, rho, own_hi)
    den_hi = intra_hi + inter_hi + sigma
    gamma_hat = rho * num_low / den_hi

    # upper bracket: inflated numerator, deflated interference (clamped per
    # term)
    num_hi_n = X[:, :, diag, diag] + theta * W2
    num_hi = _codebook_sums(q, num_hi_n)
    A_lo = _codebook_sums(q, np.maximum(0.0, X - protect))
    own_lo = A_lo[:, :, diag, diag]
    intra_lo, inter_lo = _interference_split(A_lo, rho, own_lo)
    den_lo = intra_lo + inter_lo + sigma
    gamma_bar = rho * num_hi / den_lo

    out = {"nominal": gamma, "lower": gamma_hat, "upper": gamma_bar}
    if components:
        out.update(
            num_low=num_low, den_hi=den_hi, num_hi=num_hi, den_lo=den_lo
        )
    return out


def nominal_sinr(W, assignment, cmap, channels, sigma, b: int, c: int, k: int) -> float:
    """SINR of triple (b, c, k) under the nominal channels."""
    return float(sinr_tables(W, assignment, cmap, channels, sigma)["nominal"][b, c, k])


def worst_sinr_lower(W, assignment, cmap, channels, sigma, b: int, c: int, k: int) -> float:
    """Guaranteed SINR of (b, c, k) under any CSI error in the norm ball."""
    return float(sinr_tables(W, assignment, cmap, channels, sigma)["lower"][b, c, k])


def worst_sinr_upper(W, assignment, cmap, channels, sigma, b: int, c: int, k: int) -> float:
    """Largest SINR of (b, c, k) attainable under any CSI error in the ball."""
    return float(sinr_tables(W, assignment, cmap, channels, sigma)["upper"][b, c, k])


def rate_of(sinr) -> np.ndarray | float:
    """Spectral efficiency log2(1 + sinr) in bps/Hz."""
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


@dataclass
class RateReport:
    """Rates and resource loads of one (W, rho) operating point.

    r_lower / r_upper : (B, C, K) worst-case rate brackets in bps/Hz
    sum_rate : scalar, sum of scheduled r_lower
    per_slice : (V,) scheduled r_lower summed per slice
    fronthaul_load : (B,) scheduled r_upper summed per RRH
    per_rrh_power : (B,) transmit power consumed by the schedule in watts
    """

    r_lower: np.ndarray
    r_upper: np.ndarray
    sum_rate: float
    per_slice: np.ndarray
    fronthaul_load: np.ndarray
    per_rrh_power: np.ndarray

    def to_json_dict(self) -> dict:
        return {
            "sum_rate_bps_hz": self.sum_rate,
            "per_slice_bps_hz": self.per_slice.tolist(),
            "fronthaul_load_bps_hz": self.fronthaul_load.tolist(),
            "per_rrh_power_w": self.per_rrh_power.tolist(),
        }

    def to_csv_rows(self, assignment: Assignment) -> list[dict]:
        rows = []
        for b, c, k in assignment.triples():
            rows.append(
                {
                    "rrh": b,
                    "codebook": c,
                    "user": k,
                    "rate_lower_bps_hz": float(self.r_lower[b, c, k]),
                    "rate_upper_bps_hz": float(self.r_upper[b, c, k]),
                }
            )
        return rows


def aggregate_report(
    W: BeamformerSet,
    assignment: Assignment,
    cmap: CodebookMap,
    channels: ChannelSet,
    config: NetworkConfig,
    slice_of_user: np.ndarray,
    nominal: bool = False,
) -> RateReport:
    """Evaluate all scheduled rates and resource loads.

    With ``nominal=True`` both rate brackets collapse to the nominal rate
    (used for perfect-CSI pipelines and kappa=0 equivalence checks).
    """
    tables = sinr_tables(W, assignment, cmap, channels, config.noise_power)
    if nominal:
        r_low = rate_of(tables["nominal"])
        r_up = r_low
    else:
        r_low = rate_of(tables["lower"])
        r_up = rate_of(tables["upper"])
    rho = assignment.rho.astype(float)
    sched_low = rho * r_low
    per_user = sched_low.sum(axis=(0, 1))  # (K,)
    V = int(slice_of_user.max()) + 1 if slice_of_user.size else 0
    V = max(V, len(config.slice_min_rates_bps_hz))
    per_slice = np.array(
        [per_user[slice_of_user == v].sum() for v in range(V)], dtype=float
    )
    fronthaul = (rho * r_up).sum(axis=(1, 2))
    power = np.einsum(
        "nc,bck,bnk->b", cmap.q.astype(float), rho, W.beam_power()
    )
    return RateReport(
        r_lower=r_low,
        r_upper=r_up,
        sum_rate=float(sched_low.sum()),
        per_slice=per_slice,
        fronthaul_load=fronthaul,
        per_rrh_power=power,
    )
