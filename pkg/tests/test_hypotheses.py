import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgplab.hypotheses import (
    SequenceClass,
    TimestampClass,
    empirical_risk,
    erm_train,
    expected_risk,
    loss,
    member_empirical_risks,
    member_expected_risks,
    regret,
    stationary_risk,
)
from rgplab.process import ProcessSpec, TemporalGraph, TemporalSample, build_temporal_graph, simulate_rgp

from oracles import threshold_erm_scan


def test_loss_values():
    assert loss(1, 1) == 0.0
    assert loss(-1, 1) == 1.0
    assert loss(0, -1) == 0.5
    with pytest.raises(ValueError):
        loss(1.5, 1)
    with pytest.raises(ValueError):
        loss(0.0, 0)


def _sample(features, labels):
    T = len(features)
    g = TemporalGraph(tuple(tuple(range(len(x))) for x in features), ((),) * T)
    return TemporalSample(g, tuple(features), tuple(labels))


def test_empirical_risk_constant_hypothesis():
    s = _sample([[0, 1, 2], [3, 4, 5]], [[1, 1, 1], [1, 1, 1]])
    plus = TimestampClass.constant(8, 1.0).member(0)
    assert empirical_risk(s, [plus, plus]).value == 0.0
    s2 = _sample([[0, 1, 2], [3, 4, 5]], [[-1, -1, -1], [-1, -1, -1]])
    assert empirical_risk(s2, [plus, plus]).value == 1.0
    with pytest.raises(ValueError):
        empirical_risk(s, [plus])


def test_empirical_risk_hand_value():
    # losses (0, 1 | 1, 1) -> (1/2)(1/2) + (1/2)(1)
    s = _sample([[0, 1], [0, 1]], [[1, -1], [-1, -1]])
    plus = TimestampClass.constant(2, 1.0).member(0)
    assert empirical_risk(s, [plus, plus]).value == pytest.approx(0.75, abs=1e-15)


def test_expected_risk_constant_hypothesis():
    spec = ProcessSpec(build_temporal_graph("fixed_complete", 2, 6))
    plus = TimestampClass.constant(8, 1.0).member(0)
    p = float(spec.label_rule.positive_probability(8) @ spec.pi)
    est = expected_risk(spec, [plus, plus], 400, seed=3)
    assert abs(est.value - (1 - p)) <= 3 * est.mc_std_error
    assert stationary_risk(spec, [plus, plus]).value == pytest.approx(1 - p, abs=1e-15)


def test_expected_risk_single_rollout_is_empirical():
    from rgplab.rng import derive_seed

    spec = ProcessSpec(build_temporal_graph("fixed_path", 2, 4))
    plus = TimestampClass.constant(8, 1.0).member(0)
    est = expected_risk(spec, [plus, plus], 1, seed=5)
    s = simulate_rgp(spec, derive_seed(5, "risk", 0))
    assert est.value == empirical_risk(s, [plus, plus]).value
    assert est.mc_std_error is None


def test_zero_loss_hypothesis_has_zero_expected_risk():
    from rgplab.process import LabelRule

    spec = ProcessSpec(build_temporal_graph("fixed_path", 2, 4), label_rule=LabelRule((-1.0, 0.0), 0.0))
    perfect = np.where(spec.label_rule.scores(8) >= 0, 1.0, -1.0)
    h = [TimestampClass.finite_table([perfect]).member(0)] * 2
    est = expected_risk(spec, h, 50, seed=1)
    assert est.value == 0.0 and est.mc_std_error == 0.0


def test_stationary_risk_matches_monte_carlo_under_mixing():
    spec = ProcessSpec(build_temporal_graph("fixed_path", 3, 4), regime="uniform_ergodic", mixing_k0=4.0, mixing_rho=0.9)
    cls = TimestampClass.threshold_1d(8)
    h = [cls.member(3), cls.member(5), cls.member(1)]
    est = expected_risk(spec, h, 3000, seed=9)
    assert abs(est.value - stationary_risk(spec, h).value) <= 3.5 * est.mc_std_error


def test_erm_majority_on_plus_minus():
    cls = TimestampClass.finite_table([[1.0] * 8, [-1.0] * 8])
    s = _sample([[0, 1, 2, 3], [4, 5, 6, 7]], [[1, 1, -1, 1], [1, -1, 1, 1]])
    h, r = erm_train(s, SequenceClass.repeat(cls, 2))
    assert [m.index for m in h] == [0, 0]
    assert r.value == pytest.approx(0.25)


def test_threshold_erm_realisable_and_flip():
    cls = TimestampClass.threshold_1d(8)
    s = _sample([[1, 3, 4, 6]], [[1, 1, -1, -1]])
    _, r = erm_train(s, SequenceClass((cls,)))
    assert r.value == 0.0
    s2 = _sample([[1, 3, 4, 6]], [[1, -1, -1, -1]])
    s3 = _sample([[1, 3, 4, 6]], [[1, 1, 1, -1]])
    s4 = _sample([[1, 3, 4, 6]], [[-1, 1, -1, -1]])
    for smp in (s2, s3):
        assert erm_train(smp, SequenceClass((cls,)))[1].value == 0.0
    assert erm_train(s4, SequenceClass((cls,)))[1].value == pytest.approx(1 / 4)


def test_threshold_erm_with_t_two():
    cls = TimestampClass.threshold_1d(8)
    s = _sample([[1, 3, 4, 6], [0, 2, 5, 7]], [[1, 1, -1, -1], [1, -1, -1, 1]])
    _, r = erm_train(s, SequenceClass.repeat(cls, 2))
    assert r.value == pytest.approx(1 / (4 * 2))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(2, 7))
def test_erm_beats_every_member(seed, T, n):
    rng = np.random.default_rng(seed)
    cls = TimestampClass.random_table(8, int(rng.integers(1, 12)), rng, binary=bool(seed % 2))
    classes = SequenceClass.repeat(cls, T)
    feats = [rng.integers(0, 8, n) for _ in range(T)]
    labs = [rng.choice([-1, 1], n) for _ in range(T)]
    s = _sample(feats, labs)
    h, r = erm_train(s, classes)
    assert r.value == pytest.approx(empirical_risk(s, h).value, abs=1e-12)
    for idx in np.ndindex(*(c.size for c in classes)):
        assert r.value <= empirical_risk(s, classes.members(idx)).value + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 9))
def test_threshold_erm_matches_scan(seed, n):
    rng = np.random.default_rng(seed)
    x = rng.choice(8, size=min(n, 8), replace=False)
    y = rng.choice([-1, 1], size=x.size)
    s = _sample([x], [y])
    _, r = erm_train(s, SequenceClass((TimestampClass.threshold_1d(8),)))
    assert r.value == pytest.approx(threshold_erm_scan(x, y, 1), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["below", "above"]))
def test_threshold_prefix_sums_match_table(seed, orientation):
    rng = np.random.default_rng(seed)
    cls = TimestampClass.threshold_1d(8, orientation=orientation)
    x = rng.integers(0, 8, 9)
    w = rng.normal(size=(5, 9))
    assert np.allclose(cls.signed_sums(x, w), w @ cls.table[:, x].T, atol=1e-12)


def test_class_sizes_and_flags():
    assert TimestampClass.threshold_1d(8).size == 9
    assert TimestampClass.interval_1d(8).size == 36
    lin = TimestampClass.clipped_linear(8)
    assert lin.size == 41 and lin.lipschitz_constant == 1.0 and lin.output_bound == 1.0
    assert TimestampClass.threshold_1d(8).lipschitz_constant is None
    assert TimestampClass.all_signs(3).size == 8
    with pytest.raises(ValueError):
        TimestampClass("finite_table", [[2.0, 0.0]], output_bound=1.0)
    with pytest.raises(ValueError):
        TimestampClass.finite_table([[1.0]]).evaluate([0.5])


def test_regret_is_nonnegative_and_zero_at_best():
    spec = ProcessSpec(build_temporal_graph("fixed_path", 2, 4))
    classes = SequenceClass.repeat(TimestampClass.threshold_1d(8), 2)
    er = member_expected_risks(spec, classes)
    best = [int(np.argmin(r)) for r in er]
    assert regret(spec, classes, best).value == pytest.approx(0.0, abs=1e-15)
    assert regret(spec, classes, [0, 0]).value >= 0.0


def test_member_risks_sum_to_sequence_risk():
    spec = ProcessSpec(build_temporal_graph("fixed_path", 3, 5))
    classes = SequenceClass.repeat(TimestampClass.interval_1d(8), 3)
    s = simulate_rgp(spec, 2)
    emp = member_empirical_risks(s, classes)
    idx = (4, 10, 20)
    assert sum(e[i] for e, i in zip(emp, idx)) == pytest.approx(empirical_risk(s, classes.members(idx)).value, abs=1e-14)
