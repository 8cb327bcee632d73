"""Structural Rademacher complexity and the checks built on it.

The empirical entry for timestamp ``t`` is

    E_sigma sup_{h in H_t} sum_j sigma_j h(X_tj) / (T N_t)

estimated by Monte Carlo over Rademacher fields with the inner sup computed
exactly over the enumerated class. The structural entry additionally averages
over redraws of layer ``t`` given the observed prefix.
"""

from dataclasses import dataclass

import numpy as np

from .hypotheses import SequenceClass, TimestampClass
from .process import ProcessSpec, TemporalSample, redraw_layer, simulate_rgp
from .rng import derive_rng, derive_seed

DEFAULT_MC_DRAWS = 2000
_CHUNK = 4096


@dataclass(frozen=True)
class RademacherEstimate:
    per_timestamp: tuple
    one_norm: float
    mc_draws: int
    mc_std_error: tuple

    @property
    def one_norm_std_error(self) -> float:
        # timestamps use independent sigma streams
        return float(np.sqrt(np.sum(np.square(self.mc_std_error))))

    def to_dict(self) -> dict:
        return {
            "per_timestamp": list(self.per_timestamp),
            "one_norm": self.one_norm,
            "mc_draws": self.mc_draws,
            "mc_std_error": list(self.mc_std_error),
        }


def _estimate(means, ses, draws) -> RademacherEstimate:
    means = [float(m) for m in means]
    return RademacherEstimate(tuple(means), float(np.sum(means)), int(draws), tuple(float(s) for s in ses))


def rademacher_field(seed, t: int, rollout: int, draws: int, n: int) -> np.ndarray:
    """The ``(draws, n)`` sign field used for timestamp ``t`` (1-based) and continuation ``rollout``."""
    rng = derive_rng(seed, "sigma", t, rollout)
    return rng.integers(0, 2, size=(draws, n)).astype(float) * 2.0 - 1.0


def sup_draws(cls_t: TimestampClass, x, sigma, scale: float) -> np.ndarray:
    """Per-draw values ``sup_h sum_j sigma_j h(x_j) * scale``."""
    x = np.asarray(x, dtype=np.int64)
    out = np.empty(sigma.shape[0])
    for lo in range(0, sigma.shape[0], _CHUNK):
        out[lo : lo + _CHUNK] = cls_t.signed_sums(x, sigma[lo : lo + _CHUNK]).max(axis=1)
    return out * scale


def _mean_se(v: np.ndarray):
    """Mean and standard error, centred on the first value so constant draws give exactly zero spread."""
    d = v - v[0]
    return float(v[0] + d.mean()), float(d.std(ddof=1) / np.sqrt(v.size))


def _check_draws(mc_draws):
    if mc_draws < 2:
        raise ValueError("need at least two Rademacher draws for a standard error")


def empirical_structural_rademacher(
    sample: TemporalSample, classes: SequenceClass, mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0
) -> RademacherEstimate:
    _check_draws(mc_draws)
    classes.check_horizon(sample.horizon)
    T = sample.horizon
    means, ses = [], []
    for t, (c, x) in enumerate(zip(classes, sample.features), start=1):
        v = sup_draws(c, x, rademacher_field(seed, t, 0, mc_draws, x.size), 1.0 / (T * x.size))
        m, se = _mean_se(v)
        means.append(m)
        ses.append(se)
    return _estimate(means, ses, mc_draws)


def structural_rademacher(
    spec: ProcessSpec,
    sample: TemporalSample,
    classes: SequenceClass,
    continuation_rollouts: int,
    mc_draws: int = DEFAULT_MC_DRAWS,
    seed: int = 0,
    include_observed: bool = False,
) -> RademacherEstimate:
    """Average of the empirical entry over redraws of layer ``t`` given the observed layers before it.

    With ``include_observed`` the first continuation is the observed layer itself
    (and it uses the same sign field as :func:`empirical_structural_rademacher`).
    """
    _check_draws(mc_draws)
    if continuation_rollouts < 1:
        raise ValueError("need at least one continuation rollout")
    classes.check_horizon(sample.horizon)
    T = sample.horizon
    means, ses = [], []
    for t, c in enumerate(classes, start=1):
        n = sample.sizes[t - 1]
        fresh = continuation_rollouts - int(include_observed)
        layers = []
        if include_observed:
            layers.append(sample.features[t - 1])
        if fresh > 0:
            prev = sample.features[t - 2] if t > 1 else None
            xs, _ = redraw_layer(spec, prev, t, fresh, derive_seed(seed, "structural", t))
            layers.extend(xs)
        vals = np.concatenate(
            [sup_draws(c, x, rademacher_field(seed, t, r, mc_draws, n), 1.0 / (T * n)) for r, x in enumerate(layers)]
        )
        # sigma draws within a rollout are independent given the layer; rollout means are i.i.d.
        roll_means = vals.reshape(len(layers), mc_draws).mean(axis=1)
        means.append(_mean_se(vals)[0])
        ses.append(_mean_se(roll_means if len(layers) > 1 else vals)[1])
    return _estimate(means, ses, mc_draws)


def expected_structural_norm(spec: ProcessSpec, classes: SequenceClass, samples: int, mc_draws: int, seed: int):
    """Estimate ``E ||N||_1`` as the mean of ``||N_hat||_1`` over fresh samples (tower property).

    Returns ``(mean, standard_error)``; the error covers both sampling and sign-field noise.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    norms = np.array(
        [
            empirical_structural_rademacher(
                simulate_rgp(spec, derive_seed(seed, "norm_sample", i)), classes, mc_draws, derive_seed(seed, "norm_sigma", i)
            ).one_norm
            for i in range(samples)
        ]
    )
    return _mean_se(norms)


# -- contraction --------------------------------------------------------------------


def check_lipschitz(phi, lipschitz_l: float, bound: float, grid: int = 4001) -> float:
    """Largest difference quotient of ``phi`` on a uniform grid of ``[-bound, bound]``; raises if above ``l``."""
    xs = np.linspace(-bound, bound, grid)
    ys = np.asarray(phi(xs), dtype=float)
    q = float(np.max(np.abs(np.diff(ys)) / np.diff(xs))) if grid > 1 else 0.0
    if q > lipschitz_l * (1 + 1e-9) + 1e-12:
        raise ValueError(f"map is not {lipschitz_l}-Lipschitz on [-{bound}, {bound}] (slope {q:.6g})")
    return q


def contraction_check(
    sample: TemporalSample, classes: SequenceClass, lipschitz_l: float, phi, mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0
) -> dict:
    """Compare the entries of ``phi_t o H_t`` with ``l`` times those of ``H_t`` on a shared sign field.

    ``phi`` is one vectorised map or a sequence with one map per timestamp.
    A timestamp holds when the paired mean difference is at most three of its
    standard errors.
    """
    _check_draws(mc_draws)
    classes.check_horizon(sample.horizon)
    T = sample.horizon
    maps = list(phi) if isinstance(phi, (list, tuple)) else [phi] * T
    if len(maps) != T:
        raise ValueError("need one map per timestamp")
    lhs, rhs, diff_se, holds = [], [], [], []
    for t, (c, f, x) in enumerate(zip(classes, maps, sample.features), start=1):
        check_lipschitz(f, lipschitz_l, c.output_bound)
        sigma = rademacher_field(seed, t, 0, mc_draws, x.size)
        scale = 1.0 / (T * x.size)
        a = sup_draws(c.mapped(f), x, sigma, scale)
        b = lipschitz_l * sup_draws(c, x, sigma, scale)
        d = a - b
        se = float(d.std(ddof=1) / np.sqrt(mc_draws))
        lhs.append(float(a.mean()))
        rhs.append(float(b.mean()))
        diff_se.append(se)
        holds.append(bool(d.mean() <= 3.0 * se + 1e-12))
    return {"lhs": lhs, "rhs": rhs, "diff_std_error": diff_se, "holds_per_t": holds, "holds": all(holds)}


# -- empirical vs structural concentration -------------------------------------------


def concentration_slacks(classes: SequenceClass, sizes, delta: float) -> dict:
    """Additive terms of the three concentration inequalities for values in ``[-M, M]``."""
    T = len(sizes)
    M = classes.output_bound
    n = np.asarray(sizes, dtype=float)
    return {
        "per_timestamp": (M / T) * np.sqrt(np.log(1.0 / delta) / (2.0 * n)),
        "one_norm": (M / T) * np.sqrt(np.log(T / delta) / 2.0) * float(np.sum(1.0 / np.sqrt(n))),
        "independent_expectation": (M / T) * float(np.sqrt(np.sum(np.log(1.0 / delta) / (2.0 * n)))),
    }


def rademacher_concentration_check(
    spec: ProcessSpec,
    classes: SequenceClass,
    trials: int,
    delta: float,
    seed: int = 0,
    mc_draws: int = DEFAULT_MC_DRAWS,
    oracle_rollouts: int = 200,
) -> dict:
    """Fraction of fresh samples on which the structural entries exceed the empirical ones plus slack.

    The structural side is an oracle from heavy averaging: under the
    independent regime one pool of ``oracle_rollouts`` fresh layers serves all
    trials; otherwise each trial gets its own prefix-pinned continuations.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    classes.check_horizon(spec.horizon)
    T = spec.horizon
    slack = concentration_slacks(classes, spec.graph.sizes, delta)
    shared = None
    if spec.regime == "independent":
        pool = simulate_rgp(spec, derive_seed(seed, "oracle_sample"))
        shared = structural_rademacher(spec, pool, classes, oracle_rollouts, mc_draws, derive_seed(seed, "oracle"))
    per_t = np.zeros(T)
    one = 0
    ind = 0
    for i in range(trials):
        sample = simulate_rgp(spec, derive_seed(seed, "trial", i))
        emp = empirical_structural_rademacher(sample, classes, mc_draws, derive_seed(seed, "trial_sigma", i))
        orc = shared
        if orc is None:
            orc = structural_rademacher(spec, sample, classes, oracle_rollouts, mc_draws, derive_seed(seed, "oracle", i))
        e = np.asarray(emp.per_timestamp)
        o = np.asarray(orc.per_timestamp)
        per_t += o > e + slack["per_timestamp"]
        one += orc.one_norm > emp.one_norm + slack["one_norm"]
        ind += orc.one_norm > emp.one_norm + slack["independent_expectation"]
    out = {
        "trials": trials,
        "delta": delta,
        "per_timestamp_violation_rate": (per_t / trials).tolist(),
        "one_norm_violation_rate": one / trials,
    }
    if spec.regime == "independent":
        out["independent_violation_rate"] = ind / trials
    return out
