"""Right-hand sides of the generalisation and regret bounds, and the multi-trial verifier.

Left-hand sides are exact: every vertex of the generator has the stationary
marginal, so expected risks are finite sums over the alphabet, and the
supremum over an enumerated class decomposes over timestamps.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .complexity import (
    DEFAULT_MC_DRAWS,
    empirical_structural_rademacher,
    expected_structural_norm,
    rademacher_concentration_check,
)
from .hypotheses import SequenceClass, erm_indices, member_empirical_risks, member_expected_risks
from .mixing import ergodic_deviation_term, mixing_matrix_analytic, reachable_sets, refined_deviation_term
from .process import ProcessSpec, simulate_rgp
from .rng import derive_seed

THEOREMS = (
    "th_gen",
    "ergodic",
    "refine",
    "erm_independent",
    "erm_ergodic",
    "lemma_26_expectation",
    "lemma_7_concentration",
)
INDEPENDENT_THEOREMS = ("th_gen", "erm_independent")
ERGODIC_THEOREMS = ("ergodic", "refine", "erm_ergodic")
CONFIDENCE = 0.99


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")


def _hoeffding_sum(n_per_t, delta) -> float:
    n = np.asarray(n_per_t, dtype=float)
    return float(np.sqrt(np.sum(np.log(2.0 / delta) / (2.0 * n))))


def independent_bound_rhs(rademacher_one_norm: float, n_per_t, t_horizon: int, delta: float) -> float:
    """Gap ``||N_hat||_1 + (3/T) sqrt(sum_t log(2/delta) / (2 N_t))``."""
    _check_delta(delta)
    return float(rademacher_one_norm + 3.0 / t_horizon * _hoeffding_sum(n_per_t, delta))


def ergodic_bound_rhs(rademacher_one_norm: float, gamma, n_per_t, t_horizon: int, delta: float, off_diagonal: bool = False) -> float:
    """Gap ``||N_hat||_1 + (3/T) ||N^{1/2} Gamma c||_2 sqrt(2 log(2/delta))``."""
    _check_delta(delta)
    term = ergodic_deviation_term(gamma, n_per_t, off_diagonal)
    return float(rademacher_one_norm + 3.0 / t_horizon * term * math.sqrt(2.0 * math.log(2.0 / delta)))


def refined_bound_rhs(rademacher_one_norm: float, refined_term: float, delta: float) -> float:
    """Gap ``||N_hat||_1 + 3 * refined_term * sqrt(2 log(2/delta))``."""
    _check_delta(delta)
    return float(rademacher_one_norm + 3.0 * refined_term * math.sqrt(2.0 * math.log(2.0 / delta)))


def erm_regret_bound_rhs(regime: str, rademacher_one_norm: float = None, deviation_inputs: dict = None, delta: float = None) -> float:
    """Regret bounds for ERM.

    ``regime="independent"``: ``2 ||N_hat||_1 + (6/T) sqrt(sum log(2/delta) / (2 N_t))``
    with ``deviation_inputs = {"n_per_t": ..., "t_horizon": ...}``.
    ``regime="ergodic"``: ``2 E||N||_1 + 2 * refined * sqrt(2 log(2/delta))`` with
    ``deviation_inputs = {"refined_term": ...}``, ``rademacher_one_norm`` the expectation.
    ``regime="expectation"``: the expected regret bound ``E||N||_1`` alone.
    """
    if rademacher_one_norm is None:
        raise ValueError("missing Rademacher term")
    if regime == "expectation":
        return float(rademacher_one_norm)
    deviation_inputs = deviation_inputs or {}
    _check_delta(delta)
    if regime == "independent":
        try:
            n, T = deviation_inputs["n_per_t"], deviation_inputs["t_horizon"]
        except KeyError as e:
            raise ValueError(f"independent regret bound needs {e.args[0]!r}") from None
        return float(2.0 * rademacher_one_norm + 6.0 / T * _hoeffding_sum(n, delta))
    if regime == "ergodic":
        if "refined_term" not in deviation_inputs:
            raise ValueError("ergodic regret bound needs 'refined_term'")
        return float(2.0 * rademacher_one_norm + 2.0 * deviation_inputs["refined_term"] * math.sqrt(2.0 * math.log(2.0 / delta)))
    raise ValueError(f"unknown regime {regime!r}")


def binomial_slack(trials: int, delta: float, confidence: float = CONFIDENCE) -> float:
    """Exact one-sided slack: ``q / n - delta`` with ``q`` the ``confidence`` quantile of Bin(n, delta)."""
    return float(stats.binom.ppf(confidence, trials, delta) / trials - delta)


def clopper_pearson(k: int, n: int, confidence: float = CONFIDENCE) -> tuple:
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="exact")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class BoundReport:
    theorem_id: str
    delta: float
    trials: int
    rhs_terms: dict
    rhs: tuple
    lhs_samples: tuple
    violations: int
    violation_rate: float
    binomial_slack: float
    confidence_interval: tuple
    holds: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0

    def to_dict(self) -> dict:
        # runtime stays out of the serialised form so reports are reproducible byte for byte
        return {
            "theorem_id": self.theorem_id,
            "delta": self.delta,
            "trials": self.trials,
            "rhs_terms": {k: list(v) for k, v in self.rhs_terms.items()},
            "rhs": list(self.rhs),
            "lhs_samples": list(self.lhs_samples),
            "violations": self.violations,
            "violation_rate": self.violation_rate,
            "binomial_slack": self.binomial_slack,
            "confidence_interval": list(self.confidence_interval),
            "holds": self.holds,
            "details": self.details,
        }


# -- trials ----------------------------------------------------------------------------


def uniform_deviation(spec: ProcessSpec, sample, classes: SequenceClass) -> float:
    """``sup_h R(h) - R_hat(h)``, exact; the sup splits over timestamps."""
    er = member_expected_risks(spec, classes)
    emp = member_empirical_risks(sample, classes)
    return float(sum(np.max(e - m) for e, m in zip(er, emp)))


def erm_regret(spec: ProcessSpec, sample, classes: SequenceClass) -> float:
    """``R(h_ERM) - min_h R(h)``, exact."""
    er = member_expected_risks(spec, classes)
    idx = erm_indices(sample, classes)
    return float(sum(r[i] - r.min() for r, i in zip(er, idx)))


def _trial(theorem_id, spec, classes, seed, i, mc_draws):
    sample = simulate_rgp(spec, derive_seed(seed, "trial", i))
    if theorem_id in ("erm_independent", "erm_ergodic", "lemma_26_expectation"):
        lhs = erm_regret(spec, sample, classes)
    else:
        lhs = uniform_deviation(spec, sample, classes)
    norm = None
    if theorem_id in ("th_gen", "ergodic", "refine", "erm_independent"):
        norm = empirical_structural_rademacher(sample, classes, mc_draws, derive_seed(seed, "trial_sigma", i)).one_norm
    return lhs, norm


def check_theorem_inputs(theorem_id: str, spec: ProcessSpec, classes: SequenceClass):
    if theorem_id not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem_id!r}; expected one of {THEOREMS}")
    classes.check_horizon(spec.horizon)
    if theorem_id in INDEPENDENT_THEOREMS and spec.regime != "independent":
        raise ValueError(f"{theorem_id} needs an independent process, got {spec.regime}")
    if theorem_id in ERGODIC_THEOREMS:
        if spec.regime != "uniform_ergodic":
            raise ValueError(f"{theorem_id} needs a uniform ergodic process, got {spec.regime}")
        lips = [c.lipschitz_constant for c in classes]
        if any(v is None or v > 1.0 + 1e-12 for v in lips):
            raise ValueError(f"{theorem_id} needs every class to declare a Lipschitz constant of at most 1, got {lips}")
    if theorem_id == "lemma_26_expectation" and spec.regime != "independent":
        raise ValueError("the expectation check runs on independent processes")


def _deviation(theorem_id, spec, delta):
    n = spec.graph.sizes
    T = spec.horizon
    if theorem_id == "th_gen":
        return 3.0 / T * _hoeffding_sum(n, delta)
    if theorem_id == "erm_independent":
        return 6.0 / T * _hoeffding_sum(n, delta)
    if theorem_id == "ergodic":
        gamma = mixing_matrix_analytic(T, spec.mixing_k0, spec.mixing_rho)
        return ergodic_bound_rhs(0.0, gamma, n, T, delta)
    term = refined_deviation_term(spec.graph, reachable_sets(spec.graph), spec.mixing_k0, spec.mixing_rho)
    if theorem_id == "refine":
        return refined_bound_rhs(0.0, term, delta)
    return erm_regret_bound_rhs("ergodic", 0.0, {"refined_term": term}, delta)


def verify_bound_ladder(
    theorem_id: str,
    spec: ProcessSpec,
    classes: SequenceClass,
    trials: int,
    deltas,
    seed: int = 0,
    mc_draws: int = DEFAULT_MC_DRAWS,
    norm_samples: int = 200,
    workers: int = 1,
) -> list:
    """Run ``trials`` independent samples once and score them at every ``delta``."""
    check_theorem_inputs(theorem_id, spec, classes)
    deltas = [float(d) for d in deltas]
    for d in deltas:
        _check_delta(d)
    if trials < 1:
        raise ValueError("need at least one trial")
    start = time.perf_counter()

    if theorem_id == "lemma_7_concentration":
        reports = []
        for d in deltas:
            r = rademacher_concentration_check(spec, classes, trials, d, seed, mc_draws)
            rates = list(r["per_timestamp_violation_rate"]) + [r["one_norm_violation_rate"]]
            rates += [r["independent_violation_rate"]] if "independent_violation_rate" in r else []
            worst = max(rates)
            slack = binomial_slack(trials, d)
            k = int(round(worst * trials))
            reports.append(
                BoundReport(theorem_id, d, trials, {}, (), (), k, worst, slack, clopper_pearson(k, trials), worst <= d + slack, r)
            )
        return reports

    def run(i):
        return _trial(theorem_id, spec, classes, seed, i, mc_draws)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(trials)))
    else:
        results = [run(i) for i in range(trials)]
    lhs = np.array([r[0] for r in results])
    norms = None if results[0][1] is None else np.array([r[1] for r in results])

    expected_norm = norm_se = None
    if theorem_id in ("erm_ergodic", "lemma_26_expectation"):
        expected_norm, norm_se = expected_structural_norm(spec, classes, norm_samples, mc_draws, derive_seed(seed, "expected_norm"))

    reports = []
    for d in deltas:
        details = {"members": [c.size for c in classes], "regime": spec.regime}
        if theorem_id == "lemma_26_expectation":
            mean = float(lhs.mean())
            lhs_se = float(lhs.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
            combined = math.sqrt(lhs_se**2 + norm_se**2)
            ok = mean <= expected_norm + 3.0 * combined
            details.update({"lhs_mean": mean, "lhs_std_error": lhs_se, "rhs_std_error": norm_se})
            k = int(not ok)
            reports.append(
                BoundReport(
                    theorem_id, d, trials, {"expected_rademacher": (expected_norm,)}, (expected_norm,), tuple(lhs.tolist()),
                    k, float(k), 0.0, (float(k), float(k)), ok, details,
                )
            )
            continue
        dev = _deviation(theorem_id, spec, d)
        if theorem_id == "erm_ergodic":
            rad = np.full(trials, 2.0 * expected_norm)
            details["expected_rademacher"] = expected_norm
            details["expected_rademacher_std_error"] = norm_se
        elif theorem_id == "erm_independent":
            rad = 2.0 * norms
        else:
            rad = norms
        rhs = rad + dev
        k = int(np.sum(lhs > rhs))
        slack = binomial_slack(trials, d)
        rate = k / trials
        reports.append(
            BoundReport(
                theorem_id, d, trials,
                {"rademacher": tuple(rad.tolist()), "deviation": tuple([dev] * trials)},
                tuple(rhs.tolist()), tuple(lhs.tolist()), k, rate, slack, clopper_pearson(k, trials),
                bool(rate <= d + slack), details,
            )
        )
    elapsed = time.perf_counter() - start
    return [replace(r, runtime=elapsed) for r in reports]


def verify_bound(theorem_id: str, spec: ProcessSpec, classes: SequenceClass, trials: int, delta: float, seed: int = 0, **kw) -> BoundReport:
    return verify_bound_ladder(theorem_id, spec, classes, trials, [delta], seed, **kw)[0]
