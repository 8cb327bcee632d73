import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgplab.complexity import (
    check_lipschitz,
    concentration_slacks,
    contraction_check,
    empirical_structural_rademacher,
    expected_structural_norm,
    rademacher_concentration_check,
    structural_rademacher,
)
from rgplab.hypotheses import SequenceClass, TimestampClass
from rgplab.process import ProcessSpec, TemporalGraph, TemporalSample, build_temporal_graph, simulate_rgp

from oracles import exact_rademacher_entry


def _sample(features):
    T = len(features)
    g = TemporalGraph(tuple(tuple(range(len(x))) for x in features), ((),) * T)
    return TemporalSample(g, tuple(features), tuple([1] * len(x) for x in features))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(2, 6))
def test_matches_exhaustive_sign_enumeration(seed, T, n):
    rng = np.random.default_rng(seed)
    cls = TimestampClass.random_table(8, int(rng.integers(1, 6)), rng, binary=bool(seed % 2))
    feats = [rng.integers(0, 8, n) for _ in range(T)]
    est = empirical_structural_rademacher(_sample(feats), SequenceClass.repeat(cls, T), mc_draws=4000, seed=seed)
    for t, x in enumerate(feats):
        exact = exact_rademacher_entry(cls.table, x, T)
        assert abs(est.per_timestamp[t] - exact) <= 4 * est.mc_std_error[t] + 1e-12


def test_complete_sign_class_gives_one_over_t():
    T = 3
    feats = [np.arange(8)[:5], np.arange(8)[2:8], np.arange(8)[:3]]
    est = empirical_structural_rademacher(_sample(feats), SequenceClass.repeat(TimestampClass.all_signs(8), T), 500, seed=1)
    assert np.allclose(est.per_timestamp, 1 / T, atol=1e-15)
    assert est.one_norm == pytest.approx(1.0, abs=1e-14)
    assert np.allclose(est.mc_std_error, 0.0)


def test_singleton_class_is_zero_up_to_noise():
    feats = [np.arange(6), np.arange(6)]
    est = empirical_structural_rademacher(_sample(feats), SequenceClass.repeat(TimestampClass.constant(8, 1.0), 2), 4000, seed=2)
    for m, se in zip(est.per_timestamp, est.mc_std_error):
        assert abs(m) <= 3.5 * se


def test_superset_dominates_on_shared_field():
    rng = np.random.default_rng(0)
    big = TimestampClass.random_table(8, 10, rng)
    small = TimestampClass.finite_table(big.table[:4])
    feats = [rng.integers(0, 8, 7) for _ in range(2)]
    s = _sample(feats)
    a = empirical_structural_rademacher(s, SequenceClass.repeat(small, 2), 1000, seed=5)
    b = empirical_structural_rademacher(s, SequenceClass.repeat(big, 2), 1000, seed=5)
    assert all(x <= y + 1e-15 for x, y in zip(a.per_timestamp, b.per_timestamp))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 3.0))
def test_scale_equivariance(seed, c):
    rng = np.random.default_rng(seed)
    cls = TimestampClass.random_table(8, 5, rng, binary=False)
    s = _sample([rng.integers(0, 8, 6)])
    a = empirical_structural_rademacher(s, SequenceClass((cls,)), 300, seed=seed)
    b = empirical_structural_rademacher(s, SequenceClass((cls.scaled(c),)), 300, seed=seed)
    assert b.per_timestamp[0] == pytest.approx(c * a.per_timestamp[0], rel=1e-12, abs=1e-15)


def test_structural_with_observed_only_equals_empirical():
    spec = ProcessSpec(build_temporal_graph("fixed_path", 3, 5), regime="uniform_ergodic")
    s = simulate_rgp(spec, 3)
    classes = SequenceClass.repeat(TimestampClass.threshold_1d(8), 3)
    e = empirical_structural_rademacher(s, classes, 400, seed=9)
    st_ = structural_rademacher(spec, s, classes, 1, 400, seed=9, include_observed=True)
    assert st_.per_timestamp == e.per_timestamp


def test_structural_independent_regime_agrees_with_fresh_average():
    spec = ProcessSpec(build_temporal_graph("fixed_complete", 2, 4))
    classes = SequenceClass.repeat(TimestampClass.interval_1d(8), 2)
    s = simulate_rgp(spec, 0)
    st_ = structural_rademacher(spec, s, classes, 200, 400, seed=4)
    mean, se = expected_structural_norm(spec, classes, 200, 400, seed=6)
    assert abs(st_.one_norm - mean) <= 4 * np.hypot(st_.one_norm_std_error, se)


def test_contraction_identity_and_halving():
    rng = np.random.default_rng(1)
    s = _sample([rng.integers(0, 8, 6), rng.integers(0, 8, 6)])
    classes = SequenceClass.repeat(TimestampClass.random_table(8, 6, rng, binary=False), 2)
    out = contraction_check(s, classes, 1.0, lambda v: v, 500, seed=3)
    assert out["holds"] and np.allclose(out["lhs"], out["rhs"], atol=1e-15)
    half = contraction_check(s, classes, 0.5, lambda v: 0.5 * v, 500, seed=3)
    assert half["holds"] and np.allclose(half["lhs"], half["rhs"], atol=1e-15)


def test_contraction_with_clipping_and_abs():
    rng = np.random.default_rng(2)
    s = _sample([rng.integers(0, 8, 8)])
    classes = SequenceClass((TimestampClass.clipped_linear(8),))
    for phi in (np.tanh, np.abs, lambda v: np.clip(v, -0.3, 0.3)):
        out = contraction_check(s, classes, 1.0, phi, 2000, seed=7)
        assert out["holds"]


def test_lipschitz_guard():
    assert check_lipschitz(np.sin, 1.0, 1.0) <= 1.0
    with pytest.raises(ValueError):
        check_lipschitz(lambda v: 2 * v, 1.0, 1.0)
    s = _sample([np.arange(4)])
    with pytest.raises(ValueError):
        contraction_check(s, SequenceClass((TimestampClass.threshold_1d(8),)), 1.0, lambda v: 3 * v, 10)


def test_concentration_slack_values():
    classes = SequenceClass.repeat(TimestampClass.threshold_1d(8), 2)
    sl = concentration_slacks(classes, [8, 8], 0.1)
    want = 0.5 * np.sqrt(np.log(10) / 16)
    assert np.allclose(sl["per_timestamp"], want, atol=1e-15)
    assert sl["one_norm"] == pytest.approx(0.5 * np.sqrt(np.log(20) / 2) * 2 / np.sqrt(8), abs=1e-15)
    assert sl["independent_expectation"] == pytest.approx(0.5 * np.sqrt(2 * np.log(10) / 16), abs=1e-15)


def test_concentration_check_rates_and_guards():
    spec = ProcessSpec(build_temporal_graph("fixed_complete", 2, 5))
    classes = SequenceClass.repeat(TimestampClass.threshold_1d(8), 2)
    out = rademacher_concentration_check(spec, classes, 100, 0.2, seed=1, mc_draws=200, oracle_rollouts=50)
    assert max(out["per_timestamp_violation_rate"]) <= 0.2 + 0.1
    assert out["one_norm_violation_rate"] <= 0.2 + 0.1
    assert "independent_violation_rate" in out
    with pytest.raises(ValueError):
        rademacher_concentration_check(spec, classes, 50, 0.2)
    with pytest.raises(ValueError):
        rademacher_concentration_check(spec, classes, 100, 1.0)


def test_draw_guard():
    with pytest.raises(ValueError):
        empirical_structural_rademacher(_sample([np.arange(3)]), SequenceClass((TimestampClass.threshold_1d(8),)), 1)
