"""Shattering, growth functions, VC search, Sauer bounds and metric entropy.

Covers are internal: centres are members of the class. Distances between
members of the product class ``H_1 x ... x H_T`` are built from per-timestamp
distance matrices, so a product class is enumerated only by index tuples.
"""

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import networkx as nx
import numpy as np

from .hypotheses import SequenceClass, TimestampClass
from .process import TemporalSample
from .rng import derive_rng

METRIC_KINDS = ("empirical_L2", "empirical_Linf", "sup_metric")
ENUMERATION_GUARD = 22
DEFAULT_EXACT_BUDGET = 20
MAX_PRODUCT = 4096
LADDER_STEPS = 32
LADDER_DEPTH = 10


# -- shattering and growth -------------------------------------------------------


def _require_binary(cls_t: TimestampClass):
    if not cls_t.is_binary:
        raise ValueError("shattering needs a class with outputs in {-1, +1}")


def _pattern_count(outputs: np.ndarray) -> int:
    return np.unique(outputs > 0, axis=0).shape[0]


def pattern_count(cls_t: TimestampClass, points) -> int:
    """Number of distinct labellings the class realises on ``points``."""
    _require_binary(cls_t)
    points = np.asarray(points)
    if points.size > ENUMERATION_GUARD:
        raise ValueError(f"enumeration guard: at most {ENUMERATION_GUARD} points")
    if points.size == 0:
        return 1
    return _pattern_count(cls_t.evaluate(points))


def is_shattered(cls_t: TimestampClass, points) -> bool:
    """Direct test: every one of the ``2^n`` sign vectors is realised by some member."""
    _require_binary(cls_t)
    points = np.asarray(points)
    if points.size > ENUMERATION_GUARD:
        raise ValueError(f"enumeration guard: at most {ENUMERATION_GUARD} points")
    out = cls_t.evaluate(points) > 0
    codes = set((out.astype(np.int64) << np.arange(points.size)).sum(axis=1).tolist())
    return len(codes) == 2**points.size


def restriction_count(sample: TemporalSample, cls_t: TimestampClass, t: int) -> int:
    """``|C_t cap X_t|`` for timestamp ``t`` (1-based)."""
    if not 1 <= t <= sample.horizon:
        raise ValueError(f"timestamp {t} outside [1, {sample.horizon}]")
    return pattern_count(cls_t, sample.features[t - 1])


def growth_function(sample: TemporalSample, classes: SequenceClass) -> int:
    classes.check_horizon(sample.horizon)
    return math.prod(restriction_count(sample, c, t) for t, c in enumerate(classes, start=1))


def vc_dimension_search(cls_t: TimestampClass, domain_grid, max_size: int = None, budget: int = 2_000_000) -> dict:
    """Largest shattered subset of a finite grid, by exhaustive search over subset sizes.

    Shattering is inherited by subsets, so once no subset of size ``k`` is
    shattered the grid-relative VC dimension is certified to be ``k - 1``.
    ``certified_upper`` is ``None`` if ``max_size`` or the subset budget stops
    the search first.
    """
    _require_binary(cls_t)
    grid = np.unique(np.asarray(domain_grid))
    limit = grid.size if max_size is None else min(int(max_size), grid.size)
    out = cls_t.evaluate(grid) > 0
    lower, checked = 0, 0
    for k in range(1, grid.size + 1):
        if k > limit:
            return {"lower": lower, "certified_upper": None, "subsets_checked": checked}
        if k > ENUMERATION_GUARD:
            return {"lower": lower, "certified_upper": None, "subsets_checked": checked}
        hit = False
        weights = np.left_shift(1, np.arange(k, dtype=np.int64))
        for sub in itertools.combinations(range(grid.size), k):
            checked += 1
            if checked > budget:
                return {"lower": lower, "certified_upper": None, "subsets_checked": checked - 1}
            codes = out[:, sub].astype(np.int64) @ weights
            if np.unique(codes).size == 2**k:
                hit = True
                break
        if not hit:
            return {"lower": lower, "certified_upper": lower, "subsets_checked": checked}
        lower = k
    return {"lower": lower, "certified_upper": lower, "subsets_checked": checked}


def sequence_vc_dimension(classes: SequenceClass, grids, **kw) -> dict:
    """Per-timestamp VC searches and their sum, the VC dimension of the product under independence."""
    # a flat grid is shared; a nested one gives one grid per timestamp
    nested = isinstance(grids, (list, tuple)) and len(grids) > 0 and np.ndim(grids[0]) > 0
    grids = list(grids) if nested else [grids] * classes.horizon
    if len(grids) != classes.horizon:
        raise ValueError("need one grid per timestamp")
    per = [vc_dimension_search(c, g, **kw) for c, g in zip(classes, grids)]
    uppers = [p["certified_upper"] for p in per]
    return {
        "per_timestamp": per,
        "lower": sum(p["lower"] for p in per),
        "certified_upper": None if any(u is None for u in uppers) else sum(uppers),
    }


@dataclass(frozen=True)
class SauerBound:
    binomial: int
    relaxation: float
    log_relaxation: float

    def to_dict(self) -> dict:
        return {"binomial": str(self.binomial), "relaxation": self.relaxation, "log_relaxation": self.log_relaxation}


def sauer_bound(vc_per_t, n_per_t) -> SauerBound:
    """``prod_t sum_{k <= min(vc_t, N_t)} C(N_t, k)`` and its ``(e N_t / d_t)^{d_t}`` relaxation."""
    if len(vc_per_t) != len(n_per_t):
        raise ValueError("need one VC dimension per timestamp")
    if any(v < 0 for v in vc_per_t) or any(n < 0 for n in n_per_t):
        raise ValueError("counts must be non-negative")
    binom, log_rel = 1, 0.0
    for v, n in zip(vc_per_t, n_per_t):
        d = min(int(v), int(n))
        binom *= sum(math.comb(int(n), k) for k in range(d + 1))
        if d > 0:
            log_rel += d * (1.0 + math.log(n / d))
    rel = math.exp(log_rel) if log_rel < 700 else math.inf
    return SauerBound(binom, rel, log_rel)


# -- metrics ------------------------------------------------------------------------


@dataclass(frozen=True)
class Metric:
    """One of the three metrics on the product class; the empirical ones read a sample."""

    kind: str
    sample: TemporalSample = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric {self.kind!r}; expected one of {METRIC_KINDS}")
        if self.kind != "sup_metric" and self.sample is None:
            raise ValueError(f"{self.kind} needs an attached sample")


def _per_t_matrices(classes: SequenceClass, metric: Metric) -> list:
    T = classes.horizon
    if metric.sample is not None:
        classes.check_horizon(metric.sample.horizon)
    mats = []
    for t, c in enumerate(classes):
        if metric.kind == "sup_metric":
            vals = c.table
        else:
            vals = c.table[:, metric.sample.features[t]]
        diff = vals[:, None, :] - vals[None, :, :]
        if metric.kind == "empirical_L2":
            mats.append(np.sum(diff**2, axis=2) / (T * vals.shape[1]))
        else:
            mats.append(np.max(np.abs(diff), axis=2))
    return mats


def product_indices(classes: SequenceClass, max_members: int = MAX_PRODUCT) -> np.ndarray:
    size = classes.product_size
    if size > max_members:
        raise ValueError(f"product class has {size} members, above the enumeration limit {max_members}")
    return np.array(list(itertools.product(*[range(c.size) for c in classes])), dtype=np.int64).reshape(size, -1)


def distance_matrix(classes: SequenceClass, metric: Metric, max_members: int = MAX_PRODUCT) -> np.ndarray:
    """Pairwise distances over the enumerated product class (rows in ``itertools.product`` order)."""
    idx = product_indices(classes, max_members)
    mats = _per_t_matrices(classes, metric)
    if metric.kind == "empirical_L2":
        sq = sum(m[np.ix_(idx[:, t], idx[:, t])] for t, m in enumerate(mats))
        return np.sqrt(np.maximum(sq, 0.0))
    return reduce(np.maximum, [m[np.ix_(idx[:, t], idx[:, t])] for t, m in enumerate(mats)])


def pair_distance(classes: SequenceClass, metric: Metric, a, b) -> float:
    """Distance between the members with index tuples ``a`` and ``b``."""
    mats = _per_t_matrices(classes, metric)
    vals = [m[i, j] for m, i, j in zip(mats, a, b)]
    return float(np.sqrt(sum(vals))) if metric.kind == "empirical_L2" else float(max(vals))


# -- covers and packings on a distance matrix --------------------------------------------


def greedy_cover(dist: np.ndarray, epsilon: float) -> int:
    """Greedy set cover with balls ``d <= epsilon`` centred at members."""
    ball = dist <= epsilon
    uncovered = np.ones(dist.shape[0], dtype=bool)
    size = 0
    while uncovered.any():
        c = int(np.argmax((ball & uncovered[None, :]).sum(axis=1)))
        uncovered &= ~ball[c]
        size += 1
    return size


def exact_cover(dist: np.ndarray, epsilon: float, budget: int = DEFAULT_EXACT_BUDGET):
    """Minimum number of member-centred ``epsilon``-balls covering the class; ``None`` above the budget."""
    m = dist.shape[0]
    if m > budget:
        return None
    ball = dist <= epsilon
    masks = (ball.astype(np.int64) << np.arange(m, dtype=np.int64)).sum(axis=1)
    full = (1 << m) - 1
    for k in range(1, m + 1):
        combos = np.array(list(itertools.combinations(range(m), k)), dtype=np.int64)
        for lo in range(0, combos.shape[0], 65536):
            hit = np.bitwise_or.reduce(masks[combos[lo : lo + 65536]], axis=1)
            if np.any(hit == full):
                return k
    return m


def greedy_packing(dist: np.ndarray, epsilon: float) -> int:
    """Size of a maximal packing with pairwise ``d >= epsilon``, taken in enumeration order."""
    # same as scanning in order: take the first candidate, drop everything closer than epsilon
    alive = np.ones(dist.shape[0], dtype=bool)
    size = 0
    while alive.any():
        i = int(np.argmax(alive))
        alive &= dist[i] >= epsilon
        size += 1
    return size


def exact_packing(dist: np.ndarray, epsilon: float, budget: int = DEFAULT_EXACT_BUDGET):
    """Largest packing (maximum clique of the ``d >= epsilon`` graph); ``None`` above the budget."""
    m = dist.shape[0]
    if m > budget:
        return None
    g = nx.Graph()
    g.add_nodes_from(range(m))
    iu, ju = np.triu_indices(m, k=1)
    keep = dist[iu, ju] >= epsilon
    g.add_edges_from(zip(iu[keep].tolist(), ju[keep].tolist()))
    _, weight = nx.max_weight_clique(g, weight=None)
    return int(weight)


def _dist(classes, metric, dist):
    return distance_matrix(classes, metric) if dist is None else np.asarray(dist)


def covering_number(classes: SequenceClass, metric: Metric, epsilon: float, exact_budget: int = DEFAULT_EXACT_BUDGET, dist=None) -> dict:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = _dist(classes, metric, dist)
    return {"upper": greedy_cover(d, epsilon), "exact": exact_cover(d, epsilon, exact_budget)}


def packing_number(classes: SequenceClass, metric: Metric, epsilon: float, exact_budget: int = DEFAULT_EXACT_BUDGET, dist=None) -> dict:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = _dist(classes, metric, dist)
    return {"lower": greedy_packing(d, epsilon), "exact": exact_packing(d, epsilon, exact_budget)}


def radius_ladder(diameter: float, steps: int = LADDER_STEPS, depth: int = LADDER_DEPTH) -> np.ndarray:
    """Geometric radii from ``diameter`` down to ``diameter / 2^depth``."""
    base = diameter if diameter > 0 else 1.0
    return base * 2.0 ** (-depth * np.arange(steps) / (steps - 1))


def distinct_members(dist: np.ndarray) -> int:
    """Number of members up to zero distance (the pseudometric identifies them)."""
    alive = np.ones(dist.shape[0], dtype=bool)
    size = 0
    while alive.any():
        alive &= dist[int(np.argmax(alive))] > 0
        size += 1
    return size


@dataclass(frozen=True)
class EntropyProfile:
    radii: tuple
    covering_upper: tuple
    covering_exact: tuple
    packing_lower: tuple
    packing_exact: tuple
    packing_exact_double: tuple
    diameter: float
    class_size: int
    distinct: int

    def best_covering(self) -> list:
        """Exact covering numbers where known, greedy upper values elsewhere."""
        return [u if e is None else e for u, e in zip(self.covering_upper, self.covering_exact)]

    def sandwich_violations(self) -> int:
        """Count of radii where ``D(2e) <= N(e) <= D(e)`` fails among exact values."""
        bad = 0
        for n, d, d2 in zip(self.covering_exact, self.packing_exact, self.packing_exact_double):
            if n is None:
                continue
            if d is not None and n > d:
                bad += 1
            if d2 is not None and d2 > n:
                bad += 1
        return bad

    def bracket_violations(self) -> int:
        """Greedy values must bracket the exact cover: a maximal packing is itself a net."""
        bad = 0
        for u, e, pl in zip(self.covering_upper, self.covering_exact, self.packing_lower):
            if e is not None and (u < e or pl < e):
                bad += 1
        return bad

    def monotonicity_violations(self) -> int:
        bad = 0
        for seq in (self.covering_exact, self.packing_exact):
            vals = [v for v in seq if v is not None]
            bad += sum(1 for a, b in zip(vals, vals[1:]) if b < a)
        return bad

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "covering_upper": list(self.covering_upper),
            "covering_exact": list(self.covering_exact),
            "packing_lower": list(self.packing_lower),
            "packing_exact": list(self.packing_exact),
            "packing_exact_double": list(self.packing_exact_double),
            "diameter": self.diameter,
            "class_size": self.class_size,
            "distinct": self.distinct,
        }


def entropy_profile(
    classes: SequenceClass, metric: Metric, radii=None, exact_budget: int = DEFAULT_EXACT_BUDGET, dist=None
) -> EntropyProfile:
    d = _dist(classes, metric, dist)
    diam = float(d.max()) if d.size else 0.0
    radii = radius_ladder(diam) if radii is None else np.sort(np.asarray(radii, dtype=float))[::-1]
    cu, ce, pl, pe, pe2 = [], [], [], [], []
    for r in radii:
        cu.append(greedy_cover(d, r))
        ce.append(exact_cover(d, r, exact_budget))
        pl.append(greedy_packing(d, r))
        pe.append(exact_packing(d, r, exact_budget))
        pe2.append(exact_packing(d, 2 * r, exact_budget))
    return EntropyProfile(
        tuple(float(r) for r in radii), tuple(cu), tuple(ce), tuple(pl), tuple(pe), tuple(pe2), diam, d.shape[0], distinct_members(d)
    )


def metric_ordering_check(classes: SequenceClass, sample: TemporalSample, pairs: int = 50, seed: int = 0, exact_budget: int = DEFAULT_EXACT_BUDGET) -> dict:
    """Check ``d_L2 <= d_Linf(sample) <= d_sup`` on random member pairs and the induced covering-number chain."""
    classes.check_horizon(sample.horizon)
    rng = derive_rng(seed, "metric_pairs")
    metrics = [Metric("empirical_L2", sample), Metric("empirical_Linf", sample), Metric("sup_metric")]
    pair_bad = 0
    for _ in range(pairs):
        a = [int(rng.integers(c.size)) for c in classes]
        b = [int(rng.integers(c.size)) for c in classes]
        d2, dl, ds = (pair_distance(classes, m, a, b) for m in metrics)
        pair_bad += int(d2 > dl + 1e-12) + int(dl > ds + 1e-12)
    cover_bad, checked = 0, 0
    if classes.product_size <= exact_budget:
        dists = [distance_matrix(classes, m) for m in metrics]
        for r in radius_ladder(float(dists[2].max())):
            n2, nl, ns = (exact_cover(d, r, exact_budget) for d in dists)
            cover_bad += int(n2 > nl) + int(nl > ns)
            checked += 1
    return {"pair_violations": pair_bad, "covering_violations": cover_bad, "radii_checked": checked, "violations": pair_bad + cover_bad}


# -- chaining and measure-free covering bounds --------------------------------------------


@dataclass(frozen=True)
class DudleyResult:
    integral: float
    prefactor: float

    @property
    def bound(self) -> float:
        return self.prefactor * self.integral

    def ratio(self, one_norm: float) -> float:
        """``||N_hat||_1 / (prefactor * integral)``; an estimate of the constant the bound needs."""
        return 0.0 if one_norm <= 0 else (math.inf if self.bound == 0 else one_norm / self.bound)

    def to_dict(self) -> dict:
        return {"integral": self.integral, "prefactor": self.prefactor, "bound": self.bound}


def dudley_integral(profile: EntropyProfile, t_horizon: int, inf_nt: int) -> DudleyResult:
    """Step-function quadrature of ``int_0^inf sqrt(log N(e)) de`` from the profile.

    On ``[r_{i+1}, r_i)`` the covering number is bounded by its value at
    ``r_{i+1}``, below the smallest radius by the number of distinct members,
    and it equals 1 from the diameter on, so the sum is an upper bound that is
    exact when the cover sizes are constant between radii.
    """
    if not profile.radii:
        raise ValueError("empty entropy profile")
    if t_horizon < 1 or inf_nt < 1:
        raise ValueError("horizon and layer size must be positive")
    r = list(profile.radii)
    n = profile.best_covering()
    total = 0.0
    if profile.diameter > r[0]:
        total += (profile.diameter - r[0]) * math.sqrt(math.log(n[0]))
    for i in range(len(r) - 1):
        total += (r[i] - r[i + 1]) * math.sqrt(math.log(n[i + 1]))
    total += r[-1] * math.sqrt(math.log(max(profile.distinct, 1)))
    if profile.diameter == 0:
        total = 0.0
    return DudleyResult(total, math.sqrt(1.0 / (t_horizon * inf_nt)))


@dataclass(frozen=True)
class CoveringEnvelope:
    """The printed product for the covering bound, kept in log form to avoid overflow.

    Under independence the product bounds ``log N``; under the ergodic form it bounds ``N``.
    """

    regime: str
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 700 else math.inf

    @property
    def bounds(self) -> str:
        return "log_covering" if self.regime == "independent" else "covering"

    def admits(self, covering: int) -> bool:
        if self.regime == "independent":
            return math.log(covering) <= self.value * (1 + 1e-12)
        return math.log(covering) <= self.log_value + 1e-12

    def to_dict(self) -> dict:
        return {"regime": self.regime, "bounds": self.bounds, "log_value": self.log_value, "value": self.value}


def vc_covering_bound(vc_per_t, t_horizon: int, epsilon: float, regime: str, gamma_norm: float = None) -> CoveringEnvelope:
    """``prod_t (32 e g / (9 T eps^4))^{2 vc_t}`` with ``g = 1`` independent or ``||Gamma||_2`` ergodic."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if regime not in ("independent", "ergodic"):
        raise ValueError("regime must be 'independent' or 'ergodic'")
    g = 1.0
    if regime == "ergodic":
        if gamma_norm is None:
            raise ValueError("the ergodic bound needs the mixing-matrix norm")
        g = float(gamma_norm)
    if len(vc_per_t) != t_horizon:
        raise ValueError("need one VC dimension per timestamp")
    log_base = math.log(32.0 * math.e * g / (9.0 * t_horizon * epsilon**4))
    return CoveringEnvelope(regime, float(sum(2 * int(v) * log_base for v in vc_per_t)))
