import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yigcat.core import CONSTANTS
from yigcat.feasibility import (
    DesignCandidate,
    DesignConstraints,
    SearchSpec,
    evaluate,
    gravity_test_check,
    optimize,
    rank_candidates,
)
from yigcat.materials import ParticleSpec, get_material, get_shell, radius_for_spin

YIG = get_material("yig")
SILICA = get_shell("silica")
CORE = ParticleSpec(YIG, 10e-9)
REFERENCE = DesignCandidate(CORE, 500, 1e-5, 1e6)


@pytest.fixture(scope="module")
def reference():
    return evaluate(REFERENCE)


@pytest.fixture(scope="module")
def delta_z_search():
    return optimize(YIG)


def test_reference_design_feasible(reference):
    assert reference.feasible
    assert reference.score == pytest.approx(5.535e-6, rel=1e-3)
    assert reference.metrics["mu_m"] == pytest.approx(15.72, abs=0.01)
    # gradient and time sit exactly on their caps (margin 1); ties break by name
    assert reference.binding_constraint == "grad_B"
    dE = next(c for c in reference.constraint_report if c.name == "dE_over_kT")
    assert dE.value == pytest.approx(1.078, rel=1e-3)


def test_large_spin_fails_on_splitting():
    particle = ParticleSpec(YIG, radius_for_spin(5000, YIG, "anchored"))
    cand = evaluate(DesignCandidate(particle, 5000, 1e-5, 1e6))
    assert not cand.feasible
    failing = {c.name for c in cand.constraint_report if not c.satisfied}
    assert "dE_over_kT" in failing


def test_zero_time_gives_zero_separation():
    cand = evaluate(replace(REFERENCE, t0=0.0))
    assert cand.metrics["delta_z_m"] == 0.0
    assert cand.feasible


def test_invalid_spin_recorded_not_raised():
    cand = evaluate(replace(REFERENCE, S=0))
    assert not cand.feasible
    assert cand.score == -math.inf
    assert "error" in cand.metrics


def test_blocking_temperature_constraint():
    warm = DesignConstraints(T_exp=100.0)
    cand = evaluate(REFERENCE, warm)
    assert not next(c for c in cand.constraint_report if c.name == "T_blocking").satisfied
    relaxed = evaluate(REFERENCE, replace(warm, require_T_below_blocking=False))
    assert "T_blocking" not in {c.name for c in relaxed.constraint_report}


def test_optimize_delta_z(delta_z_search):
    best = delta_z_search.best
    assert best.feasible
    assert best.score >= 5e-6
    assert 300 <= best.S <= 1000
    assert best.t0 <= 1e-5 and best.grad_B <= 1e6
    scores = [c.score for c in delta_z_search.ranked]
    assert scores == sorted(scores, reverse=True)
    assert delta_z_search.binding_histogram


def test_top_candidate_reevaluates_to_same_score(delta_z_search):
    best = delta_z_search.best
    fresh = evaluate(DesignCandidate(best.particle, best.S, best.t0, best.grad_B))
    assert fresh.score == best.score
    assert fresh.feasible


def test_zero_gradient_cap():
    result = optimize(YIG, DesignConstraints(max_grad_B=0.0), search=SearchSpec(S_range=(100, 1000)))
    assert result.max_score_any == 0.0
    assert all(c.score == 0.0 for c in result.ranked)


def test_shell_raises_macroscopicity():
    search = SearchSpec(
        S_range=(400, 600),
        t0_range=(1e-6, 1e-5),
        grad_B_range=(1e5, 1e6),
        shell=SILICA,
        shell_outer_range=(1e-7, 1e-6),
        stage2_steps=2,
    )
    shelled = optimize(YIG, objective="macroscopicity", search=search)
    bare = optimize(YIG, objective="macroscopicity", search=replace(search, shell=None, shell_outer_range=None))
    assert shelled.best.particle.shell_material is SILICA
    assert shelled.best.score > bare.best.score


@settings(max_examples=20)
@given(st.floats(0.1, 0.99))
def test_loosening_a_constraint_keeps_feasibility(factor):
    strict = DesignConstraints()
    loose = replace(strict, min_dE_over_kT=strict.min_dE_over_kT * factor, min_dU_over_kT=strict.min_dU_over_kT * factor)
    for S in (300, 500, 700):
        particle = ParticleSpec(YIG, radius_for_spin(S, YIG, "anchored"))
        cand = DesignCandidate(particle, S, 1e-5, 1e6)
        if evaluate(cand, strict).feasible:
            assert evaluate(cand, loose).feasible


@settings(max_examples=20)
@given(st.permutations(list(range(6))))
def test_ranking_independent_of_grid_order(order):
    cands = [
        evaluate(DesignCandidate(ParticleSpec(YIG, radius_for_spin(S, YIG, "anchored")), S, t0, 1e6))
        for S in (400, 500)
        for t0 in (1e-6, 5e-6, 1e-5)
    ]
    shuffled = [cands[i] for i in order]
    assert rank_candidates(shuffled) == rank_candidates(cands)


# -- gravity precondition ------------------------------------------------------------


def test_gravity_ratio_reference():
    pair = ParticleSpec(YIG, 10e-9, SILICA, 2e-6)
    check = gravity_test_check(pair, pair, 5e-4)
    assert check.spins == (500, 500)
    assert check.ratio == pytest.approx(1757.4, rel=1e-3)
    assert 6e2 <= check.ratio <= 6e3


def test_gravity_ratio_scalings():
    pair = ParticleSpec(YIG, 10e-9, SILICA, 2e-6)
    base = gravity_test_check(pair, pair, 5e-4).ratio
    assert gravity_test_check(pair, pair, 1e-3).ratio == pytest.approx(4 * base, rel=1e-12)
    assert gravity_test_check(pair, pair, 5e-4, spins=(0, 500)).ratio == math.inf
    with pytest.raises(ValueError):
        gravity_test_check(pair, pair, 0.0)


@given(st.floats(1e-5, 1e-2), st.integers(2, 5000))
def test_gravity_ratio_closed_form(d, S):
    pair = ParticleSpec(YIG, 10e-9, SILICA, 2e-6)
    check = gravity_test_check(pair, pair, d, spins=(S, S))
    m = check.masses[0]
    mu = 2 * CONSTANTS.mu_B * S
    expected = CONSTANTS.G * m**2 * 4 * math.pi * d**2 / (6 * CONSTANTS.mu_0 * mu**2)
    assert check.ratio == pytest.approx(expected, rel=1e-12)
