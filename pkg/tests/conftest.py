import numpy as np
import pytest

from scmaran import (
    FadingModel,
    NetworkConfig,
    build_codebook_map,
    generate_channels,
    generate_topology,
)


def small_config(**overrides) -> NetworkConfig:
    base = dict(
        num_rrh=2,
        num_users=4,
        num_slices=2,
        slice_sizes=(2, 2),
        num_subcarriers=4,
        num_codebooks=4,
        num_antennas=2,
        reuse_limit=3,
        codeword_degree=2,
        power_caps_w=(10.0, 2.0),
        fronthaul_caps_bps_hz=(12.0, 6.0),
        slice_min_rates_bps_hz=(0.1, 0.1),
        error_bound=0.05,
        noise_power_w=1.0,
        single_codebook_per_user=True,
    )
    base.update(overrides)
    return NetworkConfig(**base)


def table1_config(**overrides) -> NetworkConfig:
    base = dict(error_bound=0.05, noise_power_w=1.0, single_codebook_per_user=True)
    base.update(overrides)
    return NetworkConfig(**base)


def make_instance(seed, config=None, fading="rayleigh"):
    """Topology, channels and codebook map for one seeded scenario."""
    config = config or small_config()
    topology = generate_topology(config, seed)
    channels = generate_channels(topology, config, FadingModel(fading), seed)
    cmap = build_codebook_map(
        config.num_subcarriers, config.num_codebooks, config.codeword_degree
    )
    return config, topology, channels, cmap


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
