import numpy as np
import pytest

from scmaran import (
    Assignment,
    BeamformerSet,
    build_assignment_problem,
    init_beamformers,
    sinr_tables,
    solve_bnb,
    solve_exhaustive,
)
from scmaran.asm import constraint_counts
from scmaran.assign import (
    AssignInfeasible,
    AssignmentProblem,
    frozen_rate_tables,
)
from scmaran.rate import rate_of
from scmaran.scma import ofdma_map

import oracles
from conftest import make_instance, small_config


def _toy_problem(r_hat, q, reuse_limit, single_codebook=True, **kw):
    r_hat = np.asarray(r_hat, dtype=float)
    B, C, K = r_hat.shape
    defaults = dict(
        r_bar=r_hat,
        power_cost=np.zeros((B, C, K)),
        power_caps=np.full(B, 1e9),
        fronthaul_caps=np.full(B, 1e9),
        slice_min=np.zeros(1),
        slice_of_user=np.zeros(K, dtype=np.int64),
        allowed=np.ones((B, C, K), dtype=bool),
    )
    defaults.update(kw)
    return AssignmentProblem(
        r_hat=r_hat,
        q=np.asarray(q, dtype=np.int8),
        reuse_limit=reuse_limit,
        single_codebook=single_codebook,
        **defaults,
    )


def test_two_user_hand_instance():
    # best split is k0 -> codebook 0, k1 -> codebook 1 for value 5
    prob = _toy_problem([[[2.0, 1.0], [1.0, 3.0]]], np.eye(2), reuse_limit=2)
    for solver in (solve_bnb, solve_exhaustive):
        asg, value, info = solver(prob)
        assert value == pytest.approx(5.0)
        assert sorted(asg.triples()) == [(0, 0, 0), (0, 1, 1)]


def test_reuse_limit_allows_single_user():
    # both codebooks live on the only subcarrier and K_T = 1
    prob = _toy_problem([[[1.0], [2.0]]], [[1, 1]], reuse_limit=1)
    asg, value, _ = solve_bnb(prob)
    assert value == pytest.approx(2.0)
    assert asg.rho.sum() == 1


def test_single_user_lands_on_one_rrh():
    r = np.zeros((2, 2, 1))
    r[0, 0, 0], r[0, 1, 0], r[1, 0, 0], r[1, 1, 0] = 1.0, 2.0, 3.0, 2.5
    prob = _toy_problem(r, np.eye(2), reuse_limit=2)
    asg, value, _ = solve_bnb(prob)
    assert value == pytest.approx(3.0)
    assert asg.triples() == [(1, 0, 0)]


def test_empty_problem_yields_empty_schedule():
    prob = _toy_problem(
        np.zeros((1, 2, 0)),
        np.eye(2),
        reuse_limit=2,
        slice_of_user=np.zeros(0, dtype=np.int64),
    )
    for solver in (solve_bnb, solve_exhaustive):
        asg, value, _ = solver(prob)
        assert value == 0.0
        assert asg.rho.size == 0 or asg.rho.sum() == 0


def test_tie_break_is_lexicographic():
    prob = _toy_problem(np.ones((1, 2, 2)), np.eye(2), reuse_limit=1)
    asg, value, _ = solve_bnb(prob)
    asg2, value2, _ = solve_exhaustive(prob)
    assert value == value2 == pytest.approx(2.0)
    assert sorted(asg.triples()) == [(0, 0, 0), (0, 1, 1)]
    assert sorted(asg2.triples()) == [(0, 0, 0), (0, 1, 1)]


def test_candidate_mask_respected():
    prob = _toy_problem([[[2.0, 1.0], [1.0, 3.0]]], np.eye(2), reuse_limit=2)
    prob.allowed[0, 1, 1] = False
    asg, value, _ = solve_bnb(prob)
    assert value == pytest.approx(3.0)  # 2 + 1 on the remaining choices
    assert (0, 1, 1) not in asg.triples()


def test_infeasible_slice_reported_by_both_solvers():
    prob = _toy_problem(
        [[[0.5, 0.4], [0.3, 0.2]]],
        np.eye(2),
        reuse_limit=2,
        slice_min=np.array([10.0]),
    )
    for solver in (solve_bnb, solve_exhaustive):
        with pytest.raises(AssignInfeasible) as err:
            solver(prob)
        assert err.value.family == "slice_min_rate"
        assert err.value.shortfall[0]["required"] == 10.0
        assert err.value.shortfall[0]["achievable"] == pytest.approx(0.9)


def _random_problem(rng):
    B, C, K, N = 2, 2, 3, 2
    q = np.eye(N, dtype=np.int8)
    r_hat = rng.uniform(0.0, 2.0, size=(B, C, K))
    r_hat[rng.uniform(size=r_hat.shape) < 0.2] = 0.0
    r_bar = r_hat + rng.uniform(0.0, 1.0, size=r_hat.shape)
    power = rng.uniform(0.1, 1.0, size=(B, C, K))
    slice_of_user = np.array([0, 0, 1])
    return AssignmentProblem(
        r_hat=r_hat,
        r_bar=r_bar,
        power_cost=power,
        q=q,
        reuse_limit=int(rng.integers(1, 4)),
        power_caps=rng.uniform(0.5, 3.0, size=B),
        fronthaul_caps=rng.uniform(1.0, 6.0, size=B),
        slice_min=rng.uniform(0.0, 0.6, size=2),
        slice_of_user=slice_of_user,
        single_codebook=bool(rng.integers(2)),
        allowed=rng.uniform(size=(B, C, K)) > 0.1,
    )


def test_solvers_and_oracle_agree_on_random_instances(rng):
    states = {"optimal": 0, "infeasible": 0}
    for _ in range(40):
        prob = _random_problem(rng)
        want = oracles.brute_force_assignment(
            prob.r_hat,
            prob.r_bar,
            prob.power_cost,
            prob.q,
            prob.reuse_limit,
            prob.power_caps,
            prob.fronthaul_caps,
            prob.slice_min,
            prob.slice_of_user,
            prob.single_codebook,
            allowed=prob.allowed,
        )
        if want is None:
            states["infeasible"] += 1
            with pytest.raises(AssignInfeasible):
                solve_bnb(prob)
            with pytest.raises(AssignInfeasible):
                solve_exhaustive(prob)
            continue
        states["optimal"] += 1
        asg_b, val_b, _ = solve_bnb(prob)
        asg_e, val_e, _ = solve_exhaustive(prob)
        assert val_b == val_e  # canonical sums, exact equality
        assert val_b == pytest.approx(want[1], rel=1e-12)
        assert sorted(asg_b.triples()) == sorted(asg_e.triples())
        assert prob.is_feasible(asg_b)
    assert states["optimal"] > 0 and states["infeasible"] > 0


def test_incumbent_never_worsens_result(rng):
    for _ in range(10):
        prob = _random_problem(rng)
        try:
            base, base_val, _ = solve_bnb(prob)
        except AssignInfeasible:
            continue
        seeded, seeded_val, _ = solve_bnb(prob, incumbent=base)
        assert seeded_val >= base_val - 1e-12
        assert sorted(seeded.triples()) == sorted(base.triples())


def test_frozen_tables_exact_at_previous_schedule():
    cfg, topo, ch, cmap = make_instance(0)
    asg = Assignment.from_triples(
        (cfg.num_rrh, cfg.num_codebooks, cfg.num_users),
        [(0, 0, 0), (1, 1, 1), (0, 2, 2)],
    )
    W = init_beamformers(ch, asg, cmap, cfg)
    r_hat, r_bar = frozen_rate_tables(W, asg, cmap, ch, cfg.noise_power)
    t = sinr_tables(W, asg, cmap, ch, cfg.noise_power)
    for b, c, k in asg.triples():
        assert r_hat[b, c, k] == pytest.approx(
            float(rate_of(t["lower"][b, c, k])), rel=1e-12
        )
        assert r_bar[b, c, k] == pytest.approx(
            float(rate_of(t["upper"][b, c, k])), rel=1e-12
        )


def test_frozen_tables_with_empty_schedule_are_interference_free():
    cfg, topo, ch, cmap = make_instance(1)
    B, C, K = cfg.num_rrh, cfg.num_codebooks, cfg.num_users
    empty = Assignment(rho=np.zeros((B, C, K), dtype=np.int8))
    W = BeamformerSet(
        w=0.3
        * (
            np.random.default_rng(7).normal(size=ch.h.shape)
            + 1j * np.random.default_rng(8).normal(size=ch.h.shape)
        )
    )
    r_hat, _ = frozen_rate_tables(W, empty, cmap, ch, cfg.noise_power)
    sigma = cfg.noise_power
    for b in range(B):
        for c in range(C):
            for k in range(K):
                num = 0.0
                for n in cmap.support(c):
                    own = abs(np.dot(W.w[b, n, k], ch.h[b, n, k])) ** 2
                    prot = ch.theta[b, n, k] * np.sum(np.abs(W.w[b, n, k]) ** 2)
                    num += max(0.0, own - prot)
                assert r_hat[b, c, k] == pytest.approx(
                    np.log2(1.0 + num / sigma), rel=1e-10
                )


def test_single_triple_coefficient_matches_rate_module():
    cfg, topo, ch, cmap = make_instance(2)
    asg = Assignment.from_triples(
        (cfg.num_rrh, cfg.num_codebooks, cfg.num_users), [(0, 0, 0)]
    )
    W = init_beamformers(ch, asg, cmap, cfg)
    prob = build_assignment_problem(W, asg, cmap, ch, cfg, topo.slice_of_user)
    t = sinr_tables(W, asg, cmap, ch, cfg.noise_power)
    assert prob.r_hat[0, 0, 0] == pytest.approx(
        float(rate_of(t["lower"][0, 0, 0])), rel=1e-12
    )


def test_problem_tally_matches_formula():
    cfg, topo, ch, cmap = make_instance(0)
    asg = Assignment.from_triples(
        (cfg.num_rrh, cfg.num_codebooks, cfg.num_users), [(0, 0, 0)]
    )
    W = init_beamformers(ch, asg, cmap, cfg)
    prob = build_assignment_problem(W, asg, cmap, ch, cfg, topo.slice_of_user)
    want = constraint_counts(
        cfg.num_rrh,
        cfg.num_codebooks,
        cfg.num_users,
        cfg.num_slices,
        cfg.num_subcarriers,
    )["assignment"]
    assert prob.tally_total() == want


def test_power_costs_frozen_from_beams():
    cfg, topo, ch, cmap = make_instance(3)
    asg = Assignment.from_triples(
        (cfg.num_rrh, cfg.num_codebooks, cfg.num_users), [(1, 0, 0)]
    )
    W = init_beamformers(ch, asg, cmap, cfg)
    prob = build_assignment_problem(W, asg, cmap, ch, cfg, topo.slice_of_user)
    for b in range(cfg.num_rrh):
        for c in range(cfg.num_codebooks):
            for k in range(cfg.num_users):
                want = sum(
                    float(np.sum(np.abs(W.w[b, n, k]) ** 2))
                    for n in cmap.support(c)
                )
                assert prob.power_cost[b, c, k] == pytest.approx(want, rel=1e-12)


def test_exhaustive_pattern_cap_enforced():
    # 24 candidates would need 2^24 patterns
    r = np.ones((2, 3, 4))
    prob = _toy_problem(
        r,
        np.eye(3),
        reuse_limit=3,
        slice_of_user=np.zeros(4, dtype=np.int64),
    )
    with pytest.raises(ValueError, match="exceed"):
        solve_exhaustive(prob, pattern_cap=2**10)
