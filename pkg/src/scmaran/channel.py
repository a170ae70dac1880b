"""Channel generation and the norm-ball CSI uncertainty model.

Each RRH-user link has an independent small-scale fading draw per subcarrier
and antenna on top of a distance power law.  Imperfect CSI is modeled as an
additive error of Euclidean norm at most ``kappa`` around the known nominal
vector; ``uncertainty_bound`` gives the induced protection level on received
power terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import NetworkConfig, Topology


@dataclass
class FadingModel:
    """Small-scale fading law: ``kind`` is "rayleigh" or "rician"."""

    kind: str = "rayleigh"
    rician_k_factor: float = 5.0

    def __post_init__(self) -> None:
        if self.kind not in ("rayleigh", "rician"):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.kind == "rician" and self.rician_k_factor < 0:
            raise ValueError("rician_k_factor must be nonnegative")


@dataclass
class ChannelSet:
    """Nominal channels and their per-link protection levels.

    h : (B, N, K, M) complex nominal channel vectors
    theta : (B, N, K) protection level kappa^2 + 2*kappa*||h||
    kappa : CSI error norm bound shared by all links
    """

    h: np.ndarray
    theta: np.ndarray
    kappa: float

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.h.shape


def uncertainty_bound(kappa: float, h_norm) -> np.ndarray | float:
    """Worst-case deviation of |w^T h|^2 per unit ||w||^2.

    For any error e with ||e|| <= kappa the received-power term moves by at
    most (kappa^2 + 2*kappa*||h||) * ||w||^2 around its nominal value.
    """
    if kappa < 0:
        raise ValueError("error bound must be nonnegative")
    return kappa * kappa + 2.0 * kappa * np.asarray(h_norm, dtype=float)


def pathloss_gain(distance_m, config: NetworkConfig) -> np.ndarray:
    """Distance power-law gain (d / d_ref)^(-alpha).

    The exponent is applied as a negative power regardless of the sign it
    was configured with.
    """
    alpha = abs(config.pathloss_exponent)
    d = np.asarray(distance_m, dtype=float)
    return (d / config.reference_distance_m) ** (-alpha)


def generate_channels(
    topology: Topology,
    config: NetworkConfig,
    fading: FadingModel,
    seed: int,
) -> ChannelSet:
    """Draw nominal channels for every (RRH, subcarrier, user) link."""
    B, K, N, M = (
        topology.num_rrh,
        topology.num_users,
        config.num_subcarriers,
        config.num_antennas,
    )
    rng = np.random.default_rng([int(seed), 0xC4A7])
    amp = np.sqrt(pathloss_gain(topology.distances(), config))  # (B, K)

    scatter = (
        rng.standard_normal((B, N, K, M)) + 1j * rng.standard_normal((B, N, K, M))
    ) / np.sqrt(2.0)
    if fading.kind == "rayleigh":
        fade = scatter
    else:
        kf = fading.rician_k_factor
        los = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(B, N, K, M)))
        fade = np.sqrt(kf / (kf + 1.0)) * los + np.sqrt(1.0 / (kf + 1.0)) * scatter

    h = amp[:, None, :, None] * fade
    theta = uncertainty_bound(config.error_bound, np.linalg.norm(h, axis=-1))
    return ChannelSet(h=h, theta=np.asarray(theta, dtype=float), kappa=config.error_bound)


def sample_error(rng: np.random.Generator, kappa: float, m: int, count: int = 1) -> np.ndarray:
    """Draw CSI errors inside the norm ball: uniform direction, radius uniform
    on [0, kappa].  Returns (count, m) complex."""
    direction = rng.standard_normal((count, m)) + 1j * rng.standard_normal((count, m))
    norms = np.linalg.norm(direction, axis=-1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radius = kappa * rng.uniform(size=(count, 1))
    return radius * direction / norms


def dump_channels(path: str, channels: ChannelSet) -> None:
    np.savez_compressed(path, h=channels.h, theta=channels.theta, kappa=channels.kappa)


def load_channels(path: str) -> ChannelSet:
    data = np.load(path)
    return ChannelSet(h=data["h"], theta=data["theta"], kappa=float(data["kappa"]))
