"""Network geometry and scenario configuration.

One high-power RRH sits at the origin of a circular service area and a few
low-power RRHs are dropped uniformly inside it with a minimum mutual
separation.  Users are dropped uniformly in the same disk and partitioned
into service slices round-robin by index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

# noise power spectral density in dBm/Hz used when no explicit noise power
# is configured
NOISE_PSD_DBM_HZ = -174.0


@dataclass
class NetworkConfig:
    """Static scenario parameters.

    Power values are in watts, distances in meters, rates in bps/Hz and
    bandwidth in Hz.  ``noise_power_w=None`` derives the per-subcarrier-group
    noise power from the thermal PSD and ``bandwidth_hz / num_subcarriers``.
    """

    num_rrh: int = 4
    num_users: int = 10
    num_slices: int = 3
    slice_sizes: tuple[int, ...] = (4, 3, 3)
    num_subcarriers: int = 8
    num_codebooks: int = 8
    num_antennas: int = 3
    reuse_limit: int = 6
    codeword_degree: int = 2
    power_caps_w: tuple[float, ...] = (40.0, 3.0, 3.0, 3.0)
    fronthaul_caps_bps_hz: tuple[float, ...] = (20.0, 5.0, 5.0, 5.0)
    slice_min_rates_bps_hz: tuple[float, ...] = (0.5, 0.5, 0.5)
    error_bound: float = 0.0
    noise_power_w: float | None = None
    bandwidth_hz: float = 1e7
    pathloss_exponent: float = 3.0
    macro_radius_m: float = 500.0
    small_radius_m: float = 20.0
    reference_distance_m: float = 100.0
    min_user_distance_m: float = 1.0
    single_codebook_per_user: bool = False

    @property
    def noise_power(self) -> float:
        """Effective noise power sigma in watts."""
        if self.noise_power_w is not None:
            return float(self.noise_power_w)
        psd_w = 10.0 ** ((NOISE_PSD_DBM_HZ - 30.0) / 10.0)
        return psd_w * self.bandwidth_hz / self.num_subcarriers

    def with_updates(self, **kwargs) -> "NetworkConfig":
        return replace(self, **kwargs)


def validate_config(config: NetworkConfig) -> list[str]:
    """Return every invariant violation found, empty list when valid."""
    problems: list[str] = []
    c = config
    if c.num_rrh < 1:
        problems.append("num_rrh must be >= 1")
    if c.num_users < 1:
        problems.append("num_users must be >= 1")
    if c.num_antennas < 1:
        problems.append("num_antennas must be >= 1")
    if c.num_slices < 1:
        problems.append("num_slices must be >= 1")
    if len(c.slice_sizes) != c.num_slices:
        problems.append("slice_sizes length must equal num_slices")
    elif sum(c.slice_sizes) != c.num_users:
        problems.append("slice_sizes must sum to num_users")
    elif any(s < 1 for s in c.slice_sizes):
        problems.append("every slice must hold at least one user")
    if c.num_subcarriers < 2:
        problems.append("num_subcarriers must be >= 2")
    if not 1 <= c.codeword_degree < c.num_subcarriers:
        problems.append("codeword_degree must satisfy 1 <= U < num_subcarriers")
    else:
        if c.num_codebooks < 1:
            problems.append("num_codebooks must be >= 1")
        elif c.num_codebooks > math.comb(c.num_subcarriers, c.codeword_degree):
            problems.append("num_codebooks exceeds distinct codeword supports")
    if c.reuse_limit < 1:
        problems.append("reuse_limit must be >= 1")
    if len(c.power_caps_w) != c.num_rrh:
        problems.append("power_caps_w length must equal num_rrh")
    elif any(p <= 0 for p in c.power_caps_w):
        problems.append("power caps must be positive")
    if len(c.fronthaul_caps_bps_hz) != c.num_rrh:
        problems.append("fronthaul_caps_bps_hz length must equal num_rrh")
    elif any(r <= 0 for r in c.fronthaul_caps_bps_hz):
        problems.append("fronthaul caps must be positive")
    if len(c.slice_min_rates_bps_hz) != c.num_slices:
        problems.append("slice_min_rates_bps_hz length must equal num_slices")
    elif any(r < 0 for r in c.slice_min_rates_bps_hz):
        problems.append("slice minimum rates must be nonnegative")
    if c.error_bound < 0:
        problems.append("error_bound must be nonnegative")
    if c.noise_power_w is not None and c.noise_power_w <= 0:
        problems.append("noise_power_w must be positive when given")
    if c.bandwidth_hz <= 0:
        problems.append("bandwidth_hz must be positive")
    if c.macro_radius_m <= 0 or c.small_radius_m <= 0:
        problems.append("cell radii must be positive")
    if c.reference_distance_m <= 0:
        problems.append("reference_distance_m must be positive")
    if c.min_user_distance_m <= 0:
        problems.append("min_user_distance_m must be positive")
    return problems


@dataclass
class Topology:
    """Node placement for one scenario drop.

    rrh_xy : (B, 2) RRH positions in meters, index 0 is the high-power RRH
    user_xy : (K, 2) user positions in meters
    slice_of_user : (K,) slice index of each user
    """

    rrh_xy: np.ndarray
    user_xy: np.ndarray
    slice_of_user: np.ndarray

    @property
    def num_rrh(self) -> int:
        return self.rrh_xy.shape[0]

    @property
    def num_users(self) -> int:
        return self.user_xy.shape[0]

    def distances(self) -> np.ndarray:
        """(B, K) Euclidean RRH-user distances in meters."""
        diff = self.rrh_xy[:, None, :] - self.user_xy[None, :, :]
        return np.linalg.norm(diff, axis=-1)

    def users_in_slice(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.slice_of_user == v)


def slice_assignment(num_users: int, slice_sizes: tuple[int, ...]) -> np.ndarray:
    """Round-robin slice labels by user index, respecting slice capacities."""
    remaining = list(slice_sizes)
    labels = np.empty(num_users, dtype=np.int64)
    v = 0
    for k in range(num_users):
        # skip already-full slices in cyclic order
        while remaining[v % len(remaining)] == 0:
            v += 1
        labels[k] = v % len(remaining)
        remaining[v % len(remaining)] -= 1
        v += 1
    return labels


def _draw_in_disk(rng: np.random.Generator, radius: float, n: int = 1) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=n))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.stack([r * np.cos(phi), r * np.sin(phi)], axis=-1)


def generate_topology(
    config: NetworkConfig,
    seed: int,
    user_placement: str = "uniform",
) -> Topology:
    """Draw one scenario placement.

    RRH 0 is placed at the origin; the remaining RRHs are drawn uniformly in
    the macro disk under a pairwise separation of twice the low-power cell
    radius.  Users are uniform in the macro disk (``user_placement="uniform"``)
    or biased towards low-power cell neighborhoods
    (``user_placement="edge"``); either way they keep the configured minimum
    distance from every RRH.
    """
    problems = validate_config(config)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    if user_placement not in ("uniform", "edge"):
        raise ValueError(f"unknown user_placement {user_placement!r}")

    rng = np.random.default_rng([int(seed), 0x70F0])
    sep = 2.0 * config.small_radius_m
    rrh_xy = np.zeros((config.num_rrh, 2))
    for b in range(1, config.num_rrh):
        for _ in range(10_000):
            cand = _draw_in_disk(rng, config.macro_radius_m)[0]
            if np.all(np.linalg.norm(rrh_xy[:b] - cand, axis=1) >= sep):
                rrh_xy[b] = cand
                break
        else:
            raise RuntimeError("could not place RRHs with required separation")

    user_xy = np.zeros((config.num_users, 2))
    for k in range(config.num_users):
        for _ in range(10_000):
            if user_placement == "edge" and config.num_rrh > 1 and k % 2 == 0:
                # every other user lands near a low-power cell boundary
                b = 1 + int(rng.integers(config.num_rrh - 1))
                cand = rrh_xy[b] + _draw_in_disk(rng, 2.0 * config.small_radius_m)[0]
                if np.linalg.norm(cand) > config.macro_radius_m:
                    continue
            else:
                cand = _draw_in_disk(rng, config.macro_radius_m)[0]
            if np.all(
                np.linalg.norm(rrh_xy - cand, axis=1) >= config.min_user_distance_m
            ):
                user_xy[k] = cand
                break
        else:
            raise RuntimeError("could not place users at the minimum distance")

    labels = slice_assignment(config.num_users, tuple(config.slice_sizes))
    return Topology(rrh_xy=rrh_xy, user_xy=user_xy, slice_of_user=labels)
