import itertools

import numpy as np
import pytest

from scmaran import Assignment, build_codebook_map, ofdma_map
from scmaran.scma import reuse_count

import oracles


def test_all_pair_map_is_every_two_subcarrier_pattern():
    cmap = build_codebook_map(4, 6, 2)
    cols = {tuple(cmap.q[:, c]) for c in range(6)}
    expect = set()
    for pair in itertools.combinations(range(4), 2):
        col = [0] * 4
        for n in pair:
            col[n] = 1
        expect.add(tuple(col))
    assert cols == expect
    assert cmap.q.sum(axis=0).tolist() == [2] * 6
    assert cmap.q.sum(axis=1).tolist() == [3] * 4


def test_baseline_map_balances_rows():
    cmap = build_codebook_map(8, 8, 2)
    assert cmap.validate() == []
    assert cmap.q.sum(axis=0).tolist() == [2] * 8
    assert cmap.q.sum(axis=1).tolist() == [2] * 8


def test_random_shapes_stay_valid_and_balanced():
    # c*(n-u) >= n keeps a fully shared subcarrier avoidable; below that
    # bound even the best c distinct supports must all meet somewhere
    import math

    rng = np.random.default_rng(7)
    done = 0
    while done < 25:
        n = int(rng.integers(3, 9))
        u = int(rng.integers(1, n))
        c_max = math.comb(n, u)
        c = int(rng.integers(1, min(c_max, 12) + 1))
        if c > 1 and c * (n - u) < n:
            continue
        cmap = build_codebook_map(n, c, u)
        assert cmap.validate() == []
        loads = cmap.q.sum(axis=1)
        assert loads.max() - loads.min() <= 1
        done += 1


def test_too_many_codebooks_rejected():
    with pytest.raises(ValueError):
        build_codebook_map(4, 7, 2)


def test_distinct_supports_required():
    cmap = build_codebook_map(4, 6, 2)
    q = cmap.q.copy()
    q[:, 1] = q[:, 0]
    from scmaran.scma import CodebookMap

    assert CodebookMap(q=q).validate()


def test_orthogonal_map_is_identity():
    cmap = ofdma_map(5)
    assert np.array_equal(cmap.q, np.eye(5, dtype=cmap.q.dtype))
    assert cmap.degree == 1


def test_reuse_count_against_loop_reference():
    rng = np.random.default_rng(3)
    cmap = build_codebook_map(8, 8, 2)
    for _ in range(20):
        rho = (rng.random((3, 8, 6)) < 0.3).astype(np.int8)
        got = reuse_count(rho, cmap.q)
        ref = oracles.ref_reuse_count(rho, cmap.q)
        assert np.array_equal(got, ref)


def test_reuse_limit_violation_detected_in_assignment():
    # seven users stacked on codebooks sharing one subcarrier beats K_T=6
    cmap = build_codebook_map(8, 8, 2)
    n_star = 0
    sharing = [c for c in range(8) if cmap.q[n_star, c]]
    assert sharing
    rho = np.zeros((1, 8, 7), dtype=np.int8)
    for k in range(7):
        rho[0, sharing[k % len(sharing)], k] = 1
    counts = reuse_count(rho, cmap.q)
    assert counts[n_star] == 7
    from conftest import small_config

    cfg = small_config(
        num_rrh=1, num_users=7, num_slices=1, slice_sizes=(7,),
        num_subcarriers=8, num_codebooks=8, reuse_limit=6,
        power_caps_w=(10.0,), fronthaul_caps_bps_hz=(20.0,),
        slice_min_rates_bps_hz=(0.0,),
    )
    problems = Assignment(rho=rho).validate(cfg, cmap)
    assert any("reuse" in p for p in problems)
