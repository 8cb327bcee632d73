"""Acceptance suite: one test per criterion, summarised as PASS/FAIL lines by conftest.py."""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from rgplab.bounds import ergodic_bound_rhs, refined_bound_rhs, verify_bound
from rgplab.cli import SUBCOMMANDS, main
from rgplab.combinatorics import (
    Metric,
    entropy_profile,
    growth_function,
    metric_ordering_check,
    sauer_bound,
    vc_dimension_search,
)
from rgplab.complexity import contraction_check, empirical_structural_rademacher
from rgplab.config import build_classes, build_spec, load_config, suite_entries
from rgplab.hypotheses import SequenceClass, TimestampClass
from rgplab.mixing import mixing_certificate, mixing_matrix_analytic, reachable_sets, refined_deviation_term
from rgplab.process import LabelRule, ProcessSpec, TemporalGraph, TemporalSample, build_temporal_graph, simulate_rgp
from rgplab.rng import derive_seed

from oracles import exact_rademacher_entry

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
DELTA = 0.1
SLACK = 0.07


def _sample(features):
    T = len(features)
    g = TemporalGraph(tuple(tuple(range(len(x))) for x in features), ((),) * T)
    return TemporalSample(g, tuple(np.asarray(x) for x in features), tuple([1] * len(x) for x in features))


@pytest.mark.criterion(1, "mixing certificate on a 10-vertex path, gaps 1-3, 1e4 rollouts")
def test_mixing_certificate():
    cfg = load_config(CONFIGS / "mixing_path.json")
    spec = build_spec(cfg.process)
    assert spec.graph.sizes[0] == 10 and spec.mixing_k0 == 1.0 and spec.mixing_rho == 0.5
    start = time.perf_counter()
    rows = mixing_certificate(spec, 1, [1, 2, 3], 10_000, derive_seed(cfg.seed, "certificate"), histories=2)
    elapsed = time.perf_counter() - start
    for r in rows:
        assert r["bound"] == pytest.approx(0.1 * 0.5 ** r["gap"], abs=1e-15)
        assert r["empirical_tv"] <= r["bound"] + 3.0 * r["std_error"], r
    assert elapsed < 60.0


@pytest.mark.criterion(2, "MC Rademacher estimator within 3 SE of exhaustive enumeration, 50 instances")
def test_rademacher_oracle_equivalence():
    rng = np.random.default_rng(20240)
    start = time.perf_counter()
    misses = []
    for i in range(50):
        T = int(rng.integers(1, 4))
        cls = TimestampClass.random_table(8, int(rng.integers(1, 10)), rng, binary=bool(i % 2))
        feats = [rng.integers(0, 8, int(rng.integers(2, 13))) for _ in range(T)]
        est = empirical_structural_rademacher(_sample(feats), SequenceClass.repeat(cls, T), 2000, seed=i)
        exact = sum(exact_rademacher_entry(cls.table, x, T) for x in feats)
        if abs(est.one_norm - exact) > 3.0 * est.one_norm_std_error + 1e-12:
            misses.append((i, est.one_norm, exact, est.one_norm_std_error))
    assert not misses
    assert time.perf_counter() - start < 120.0


@pytest.mark.criterion(3, "complete sign class gives 1/T with zero variance; singleton gives 0 within MC error")
def test_exact_constants():
    rng = np.random.default_rng(3)
    for T in (1, 2, 4, 7):
        feats = [rng.permutation(8)[: int(rng.integers(1, 9))] for _ in range(T)]
        s = _sample(feats)
        full = empirical_structural_rademacher(s, SequenceClass.repeat(TimestampClass.all_signs(8), T), 500, seed=T)
        assert all(v == pytest.approx(1.0 / T, abs=1e-15) for v in full.per_timestamp)
        assert all(se == 0.0 for se in full.mc_std_error)
        single = empirical_structural_rademacher(s, SequenceClass.repeat(TimestampClass.constant(8, 1.0), T), 2000, seed=T)
        for v, se in zip(single.per_timestamp, single.mc_std_error):
            assert abs(v) <= 3.0 * se + 1e-15


def _random_map(rng, lip):
    kind = int(rng.integers(0, 6))
    c = float(rng.uniform(-0.5, 0.5))
    if kind == 0:
        return lambda v: lip * v
    if kind == 1:
        return lambda v: lip * np.tanh(v)
    if kind == 2:
        return lambda v: lip * np.abs(v)
    if kind == 3:
        lo = float(rng.uniform(-1.0, 0.0))
        return lambda v: lip * np.clip(v, lo, lo + 0.8)
    if kind == 4:
        return lambda v: lip * np.sin(v) + c
    return lambda v: -lip * v + c


@pytest.mark.criterion(4, "contraction: 200 random (class, phi, l) triples, zero violations beyond 3 SE")
def test_contraction_suite():
    rng = np.random.default_rng(404)
    failures = []
    for i in range(200):
        T = int(rng.integers(1, 3))
        if i % 2:
            cls = TimestampClass.random_table(8, int(rng.integers(2, 10)), rng, binary=bool(i % 4 == 1))
        else:
            cls = TimestampClass.clipped_linear(8, grid_step=float(rng.choice([0.25, 0.5])))
        lip = float(rng.uniform(0.2, 2.0))
        feats = [rng.integers(0, 8, int(rng.integers(3, 12))) for _ in range(T)]
        out = contraction_check(_sample(feats), SequenceClass.repeat(cls, T), lip, _random_map(rng, lip), 1000, seed=i)
        if not out["holds"]:
            failures.append((i, out))
    assert not failures


@pytest.mark.criterion(5, "Sauer bound on 1000 random instances, tight on the thresholds fixture")
def test_generalized_sauer():
    rng = np.random.default_rng(505)
    violations = 0
    for i in range(1000):
        T = int(rng.integers(1, 4))
        per_t = []
        for _ in range(T):
            k = int(rng.integers(0, 3))
            if k == 0:
                per_t.append(TimestampClass.threshold_1d(8, orientation=str(rng.choice(["below", "above"]))))
            elif k == 1:
                per_t.append(TimestampClass.interval_1d(8))
            else:
                per_t.append(TimestampClass.random_table(8, int(rng.integers(1, 30)), rng))
        classes = SequenceClass(tuple(per_t))
        feats = [rng.integers(0, 8, int(rng.integers(1, 10))) for _ in range(T)]
        vc = [vc_dimension_search(c, range(8))["certified_upper"] for c in classes]
        violations += growth_function(_sample(feats), classes) > sauer_bound(vc, [f.size for f in feats]).binomial
    assert violations == 0
    thr = TimestampClass.threshold_1d(8)
    assert growth_function(_sample([[1, 4, 6]]), SequenceClass((thr,))) == sauer_bound([1], [3]).binomial == 4
    cfg = load_config(CONFIGS / "thresholds_fixture.json")
    spec = build_spec(cfg.process)
    sample = simulate_rgp(spec, derive_seed(cfg.seed, "sample"))
    classes = build_classes(cfg.classes, spec)
    assert growth_function(sample, classes) == sauer_bound([1] * spec.horizon, spec.graph.sizes).binomial


@pytest.mark.criterion(6, "VC certificates: thresholds (1,1), intervals (2,2) on a 6-point grid")
def test_vc_certificates():
    start = time.perf_counter()
    grid = np.arange(6)
    thr = vc_dimension_search(TimestampClass.threshold_1d(8), grid)
    itv = vc_dimension_search(TimestampClass.interval_1d(8), grid)
    assert (thr["lower"], thr["certified_upper"]) == (1, 1)
    assert (itv["lower"], itv["certified_upper"]) == (2, 2)
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion(7, "packing/covering sandwich and metric ordering: 50 classes of size <= 12, 32 radii")
def test_sandwich_and_metric_ordering():
    rng = np.random.default_rng(707)
    bad = 0
    for i in range(50):
        if i % 2:
            T, sizes = 1, [int(rng.integers(2, 13))]
        else:
            T, sizes = 2, [int(rng.integers(2, 5)), int(rng.integers(1, 4))]
        classes = SequenceClass(tuple(TimestampClass.random_table(8, m, rng, binary=bool(i % 3 == 0)) for m in sizes))
        assert classes.product_size <= 12
        s = _sample([rng.integers(0, 8, int(rng.integers(2, 9))) for _ in range(T)])
        for kind in ("empirical_L2", "empirical_Linf", "sup_metric"):
            prof = entropy_profile(classes, Metric(kind, s if kind != "sup_metric" else None))
            assert len(prof.radii) == 32 and None not in prof.covering_exact
            bad += prof.sandwich_violations() + prof.monotonicity_violations() + prof.bracket_violations()
        order = metric_ordering_check(classes, s, pairs=50, seed=i)
        assert order["radii_checked"] == 32
        bad += order["violations"]
    assert bad == 0


def _suite(theorems):
    cfg = load_config(CONFIGS / "default_suite.json")
    return cfg, [(th, spec, cls) for th, spec, cls in suite_entries(cfg) if th in theorems]


@pytest.mark.criterion(8, "bound verification at delta=0.1, 200 trials: th_gen, ergodic, refine, ERM (independent, ergodic)")
def test_bound_verification():
    theorems = ("th_gen", "ergodic", "refine", "erm_independent", "erm_ergodic")
    cfg, entries = _suite(theorems)
    assert sorted(th for th, _, _ in entries) == sorted(theorems)
    start = time.perf_counter()
    rates = {}
    for th, spec, classes in entries:
        if th == "th_gen":
            assert spec.horizon == 4 and set(spec.graph.sizes) == {8} and classes[0].size == 8
        if th in ("ergodic", "refine"):
            assert spec.horizon == 6 and set(spec.graph.sizes) == {12} and classes[0].kind == "clipped_linear"
        rep = verify_bound(th, spec, classes, 200, DELTA, derive_seed(cfg.seed, "acceptance", th), mc_draws=cfg.budgets.mc_draws, norm_samples=cfg.budgets.norm_samples)
        rates[th] = rep.violation_rate
    assert all(r <= DELTA + SLACK for r in rates.values()), rates
    assert time.perf_counter() - start < 15 * 60


@pytest.mark.criterion(9, "refined rhs below unrefined on every sparse-graph trial; equal on complete graphs to 1e-12")
def test_refinement_dominance():
    _, entries = _suite(("ergodic",))
    _, spec, classes = entries[0]
    a = verify_bound("ergodic", spec, classes, 200, DELTA, seed=99, mc_draws=500)
    b = verify_bound("refine", spec, classes, 200, DELTA, seed=99, mc_draws=500)
    assert a.rhs_terms["rademacher"] == b.rhs_terms["rademacher"]
    assert all(rb < ra for ra, rb in zip(a.rhs, b.rhs))
    for T, n, k0, rho in [(6, 12, 1.0, 0.5), (3, 4, 2.0, 0.8), (5, 7, 0.5, 0.3)]:
        g = build_temporal_graph("fixed_complete", T, n)
        refined = refined_deviation_term(g, reachable_sets(g), k0, rho)
        gamma = mixing_matrix_analytic(T, k0, rho)
        for norm in (0.0, 0.37):
            assert abs(refined_bound_rhs(norm, refined, DELTA) - ergodic_bound_rhs(norm, gamma, g.sizes, T, DELTA, off_diagonal=True)) <= 1e-12


@pytest.mark.criterion(10, "averaged ERM expected regret below estimated E||N||_1, 20 independent finite-class configs")
def test_expected_regret_form():
    rng = np.random.default_rng(1010)
    kinds = ("fixed_complete", "fixed_path", "erdos_renyi_per_step")
    failures = []
    for i in range(20):
        T, n = int(rng.integers(2, 5)), int(rng.integers(4, 11))
        graph = build_temporal_graph(kinds[i % 3], T, n, p=0.3, seed=i)
        spec = ProcessSpec(graph, label_rule=LabelRule((-1.0, 0.0), float(rng.uniform(0.2, 0.8))))
        tables = [TimestampClass.random_table(8, int(rng.integers(2, 13)), rng, binary=bool(i % 2)) for _ in range(T)]
        rep = verify_bound("lemma_26_expectation", spec, SequenceClass(tuple(tables)), 200, DELTA, seed=i, mc_draws=500, norm_samples=200)
        # both sides are expectations: no allowance for estimation error here
        if not rep.details["lhs_mean"] <= rep.rhs[0]:
            failures.append((i, rep.details["lhs_mean"], rep.rhs[0]))
    assert not failures


def _tree(d):
    return {n: (Path(d) / n).read_bytes() for n in sorted(os.listdir(d))}


@pytest.mark.criterion(11, "every CLI subcommand reruns byte-identically")
def test_cli_determinism(tmp_path, capsys):
    cfg = str(CONFIGS / "quick.json")
    for d in ("a", "b"):
        for sub in SUBCOMMANDS:
            code = main([sub, "--config", cfg, "--out", str(tmp_path / d)])
            assert code == 0, (sub, code)
    a, b = _tree(tmp_path / "a"), _tree(tmp_path / "b")
    assert a == b
    assert {f"summary_{s}.csv" for s in SUBCOMMANDS} <= set(a)
