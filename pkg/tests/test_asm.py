import dataclasses

import numpy as np
import pytest

from scmaran import (
    Assignment,
    ChannelSet,
    run_asm,
)
from scmaran.asm import (
    AsmOptions,
    ScenarioInfeasible,
    check_feasibility,
    constraint_counts,
    initial_point,
)
from scmaran.scma import ofdma_map

import oracles
from conftest import make_instance, small_config


def test_constraint_count_formulas():
    got = constraint_counts(4, 8, 10, 3, 8)
    assert got["beamforming"] == 1291
    assert got["assignment"] == 2643
    unit = constraint_counts(1, 1, 1, 1, 1)
    assert unit["beamforming"] == 7
    assert unit["assignment"] == 10


def test_constraint_counts_random_tuples(rng):
    for _ in range(20):
        B, C, K, V, N = (int(rng.integers(1, 9)) for _ in range(5))
        got = constraint_counts(B, C, K, V, N)
        assert got["beamforming"] == 4 * B * C * K + 2 * B + V
        assert got["assignment"] == 5 * B * C * K + C * C * B * B + N + 2 * B + V


def test_options_validation():
    with pytest.raises(ValueError, match="association"):
        AsmOptions(association="closest")
    assert AsmOptions(association="nearest").association == "nearest"


def _small_run(seed=0, **opt_overrides):
    cfg, topo, ch, cmap = make_instance(seed)
    opts = AsmOptions(**opt_overrides) if opt_overrides else AsmOptions()
    sol = run_asm(ch, cmap, cfg, topo.slice_of_user, options=opts)
    return cfg, topo, ch, cmap, sol


def test_small_instance_trace_is_monotone_and_feasible():
    cfg, topo, ch, cmap, sol = _small_run(0)
    objs = [entry["objective"] for entry in sol.trace]
    assert all(b >= a - 1e-8 for a, b in zip(objs, objs[1:]))
    assert sol.iterations <= 50
    assert sol.converged
    assert sol.objective == pytest.approx(objs[-1])
    assert (
        check_feasibility(
            sol.beams, sol.assignment, cmap, ch, cfg, topo.slice_of_user
        )
        == []
    )


def test_trace_rows_carry_power_and_slice_entries():
    cfg, topo, ch, cmap, sol = _small_run(1)
    for entry in sol.trace:
        assert len(entry["per_rrh_power_w"]) == cfg.num_rrh
        assert len(entry["per_slice_bps_hz"]) == cfg.num_slices
        assert entry["wall_time_s"] >= 0.0
    blob = sol.to_json_dict()
    assert blob["iterations"] == sol.iterations
    assert len(blob["trace"]) == len(sol.trace)
    assert blob["scheduled_triples"] == [
        list(map(int, t)) for t in sol.assignment.triples()
    ]


def test_huge_epsilon_stops_after_one_iteration():
    cfg, topo, ch, cmap, sol = _small_run(0, epsilon_rel=1e6)
    assert sol.iterations == 1
    assert sol.converged


def test_warm_start_at_fixed_point_is_idempotent():
    cfg, topo, ch, cmap, sol = _small_run(2)
    again = run_asm(
        ch,
        cmap,
        cfg,
        topo.slice_of_user,
        warm_start=(sol.assignment, sol.beams),
    )
    assert again.objective >= sol.objective - 1e-9
    assert again.objective == pytest.approx(sol.objective, rel=1e-4)


def test_infeasible_warm_start_rejected():
    cfg, topo, ch, cmap, sol = _small_run(0)
    bad = sol.assignment.copy()
    free_k = sol.assignment.rho.sum(axis=(0, 1)).argmin()
    bad.rho[0, 0, free_k] = 1
    bad.rho[1, 1, free_k] = 1
    with pytest.raises(ValueError, match="warm start"):
        run_asm(
            ch, cmap, cfg, topo.slice_of_user, warm_start=(bad, sol.beams)
        )


def test_single_link_run_hits_closed_form():
    # kappa=0, single RRH/user/antenna: full-power matched filter is optimal
    cfg = small_config(
        num_rrh=1,
        num_users=1,
        num_slices=1,
        slice_sizes=(1,),
        num_subcarriers=1,
        num_codebooks=1,
        num_antennas=1,
        reuse_limit=1,
        codeword_degree=1,
        power_caps_w=(5.0,),
        fronthaul_caps_bps_hz=(1e6,),
        slice_min_rates_bps_hz=(0.0,),
        error_bound=0.0,
        noise_power_w=1.0,
    )
    h0 = 1.2 - 0.7j
    ch = ChannelSet(
        h=np.array([[[[h0]]]], dtype=complex),
        theta=np.zeros((1, 1, 1)),
        kappa=0.0,
    )
    cmap = ofdma_map(1)
    sol = run_asm(ch, cmap, cfg, np.zeros(1, dtype=int))
    assert sol.iterations <= 2
    want = oracles.single_link_optimum(np.array([h0]), 0.0, 5.0, 1.0)
    assert sol.objective == pytest.approx(want, rel=1e-4)
    assert float(np.sum(np.abs(sol.beams.w[0, 0, 0]) ** 2)) == pytest.approx(
        5.0, rel=1e-4
    )


def test_injected_association_fault_detected():
    cfg, topo, ch, cmap = make_instance(0)
    asg, W = initial_point(ch, cmap, cfg, topo.slice_of_user)
    k = asg.triples()[0][2]
    bad = asg.copy()
    other_b = 1 - asg.triples()[0][0]
    bad.rho[other_b, 0, k] = 1
    found = check_feasibility(W, bad, cmap, ch, cfg, topo.slice_of_user)
    assert any(v["family"] == "association" for v in found)


def test_injected_reuse_fault_detected():
    cfg, topo, ch, cmap = make_instance(0)
    asg, W = initial_point(ch, cmap, cfg, topo.slice_of_user)
    bad = asg.copy()
    # overload one codebook column far past the reuse limit
    for k in range(cfg.num_users):
        bad.rho[:, :, k] = 0
        bad.rho[0, 0, k] = 1
    found = check_feasibility(W, bad, cmap, ch, cfg, topo.slice_of_user)
    assert any(v["family"] == "reuse" for v in found)


def test_injected_binary_fault_detected():
    cfg, topo, ch, cmap = make_instance(0)
    asg, W = initial_point(ch, cmap, cfg, topo.slice_of_user)
    bad = Assignment(rho=asg.rho.astype(float))
    b, c, k = bad_triple = tuple(asg.triples()[0])
    bad.rho[b, c, k] = 0.5
    found = check_feasibility(W, bad, cmap, ch, cfg, topo.slice_of_user)
    assert any(v["family"] == "binary" for v in found)


def test_nearest_association_pins_users():
    cfg, topo, ch, cmap = make_instance(3)
    opts = AsmOptions(association="nearest")
    sol = run_asm(
        ch,
        cmap,
        cfg,
        topo.slice_of_user,
        options=opts,
        rrh_user_distances=topo.distances(),
    )
    nearest = topo.distances().argmin(axis=0)
    for b, c, k in sol.assignment.triples():
        assert b == nearest[k]


def test_nearest_association_requires_distances():
    cfg, topo, ch, cmap = make_instance(0)
    with pytest.raises(ValueError, match="distances"):
        run_asm(
            ch,
            cmap,
            cfg,
            topo.slice_of_user,
            options=AsmOptions(association="nearest"),
        )


def test_unreachable_slice_minimum_raises():
    cfg, topo, ch, cmap = make_instance(0)
    greedy = dataclasses.replace(
        cfg, slice_min_rates_bps_hz=(1e6, 1e6)
    )
    with pytest.raises(ScenarioInfeasible) as err:
        run_asm(ch, cmap, greedy, topo.slice_of_user)
    assert "slice" in str(err.value)


def test_runs_are_deterministic():
    cfg, topo, ch, cmap = make_instance(4)
    a = run_asm(ch, cmap, cfg, topo.slice_of_user)
    b = run_asm(ch, cmap, cfg, topo.slice_of_user)
    assert a.objective == b.objective
    assert sorted(a.assignment.triples()) == sorted(b.assignment.triples())
    assert np.array_equal(a.beams.w, b.beams.w)
