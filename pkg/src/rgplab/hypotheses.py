"""Per-timestamp hypothesis classes, the binary loss, risks and ERM.

Every class is finite over the alphabet, so each one is materialised as a
table of member outputs with shape (members, A). Threshold and interval classes
also evaluate on arbitrary reals (used by the VC search on a declared grid);
over the alphabet the scalar value of letter ``x`` is ``x`` itself.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .process import ProcessSpec, TemporalSample, feature_embedding, simulate_rgp
from .rng import derive_seed

CLASS_KINDS = ("finite_table", "threshold_1d", "interval_1d", "clipped_linear")
RISK_KINDS = ("empirical", "expected_mc", "expected_exact", "regret")


def _ro(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Hypothesis:
    """One concrete member ``h_t``: its outputs on every letter of the alphabet."""

    kind: str
    index: int
    table: np.ndarray

    def __call__(self, x):
        return self.table[np.asarray(x, dtype=np.int64)]


@dataclass(frozen=True, eq=False)
class TimestampClass:
    kind: str
    table: np.ndarray
    output_bound: float = None
    lipschitz_constant: float = None
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CLASS_KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        table = np.atleast_2d(np.asarray(self.table, dtype=float))
        if table.shape[0] < 1 or table.shape[1] < 1:
            raise ValueError("a class needs at least one member and one letter")
        bound = float(np.max(np.abs(table))) if self.output_bound is None else float(self.output_bound)
        if np.max(np.abs(table)) > bound + 1e-12:
            raise ValueError("member outputs exceed the declared output range")
        object.__setattr__(self, "table", _ro(table))
        object.__setattr__(self, "output_bound", bound)

    # -- constructors -------------------------------------------------------------
    @classmethod
    def finite_table(cls, table, output_bound=None):
        return cls("finite_table", table, output_bound)

    @classmethod
    def constant(cls, alphabet_size: int, value: float = 1.0):
        return cls("finite_table", np.full((1, alphabet_size), float(value)))

    @classmethod
    def all_signs(cls, alphabet_size: int):
        """Every ``{-1, +1}`` labelling of the alphabet (``2^A`` members)."""
        if alphabet_size > 16:
            raise ValueError("all-signs class limited to 16 letters")
        bits = (np.arange(2**alphabet_size)[:, None] >> np.arange(alphabet_size)[None, :]) & 1
        return cls("finite_table", 2.0 * bits - 1.0, 1.0)

    @classmethod
    def random_table(cls, alphabet_size: int, members: int, rng, binary: bool = True):
        if binary:
            table = rng.choice([-1.0, 1.0], size=(members, alphabet_size))
        else:
            table = rng.uniform(-1.0, 1.0, size=(members, alphabet_size))
        return cls("finite_table", table, 1.0)

    @classmethod
    def threshold_1d(cls, alphabet_size: int, thresholds=None, orientation: str = "below"):
        """``h_theta(x) = +1`` if ``x < theta`` (``below``) or ``x > theta`` (``above``), else ``-1``."""
        if orientation not in ("below", "above"):
            raise ValueError("orientation must be 'below' or 'above'")
        th = np.arange(alphabet_size + 1) - 0.5 if thresholds is None else np.asarray(thresholds, dtype=float)
        params = {"thresholds": tuple(float(v) for v in th), "orientation": orientation}
        return cls("threshold_1d", _threshold_outputs(params, np.arange(alphabet_size)), 1.0, None, params)

    @classmethod
    def interval_1d(cls, alphabet_size: int, endpoints=None):
        """``h_{a,b}(x) = +1`` if ``a < x < b`` else ``-1``, over pairs ``a < b`` of the endpoint grid."""
        ep = np.arange(alphabet_size + 1) - 0.5 if endpoints is None else np.sort(np.asarray(endpoints, dtype=float))
        pairs = tuple((float(a), float(b)) for a, b in itertools.combinations(ep, 2))
        params = {"intervals": pairs}
        return cls("interval_1d", _interval_outputs(params, np.arange(alphabet_size)), 1.0, None, params)

    @classmethod
    def clipped_linear(cls, alphabet_size: int, weights=None, grid_step: float = 0.25, radius: float = 1.0, clip: float = 1.0):
        """``h_w(x) = clip(w . phi(x), -clip, clip)`` over a grid of weights of 1-norm at most ``radius``."""
        emb = feature_embedding(alphabet_size)
        if weights is None:
            k = int(round(radius / grid_step))
            axis = np.arange(-k, k + 1) * grid_step
            w = np.array([(a, b) for a in axis for b in axis if abs(a) + abs(b) <= radius + 1e-12])
        else:
            w = np.atleast_2d(np.asarray(weights, dtype=float))
        table = np.clip(w @ emb.T, -clip, clip)
        lip = None
        if np.max(np.abs(emb)) <= 1.0 + 1e-12:
            lip = float(np.max(np.abs(w).sum(axis=1)))
        params = {"weights": tuple(map(tuple, w.tolist())), "clip": float(clip)}
        return cls("clipped_linear", table, float(clip), lip, params)

    # -- queries --------------------------------------------------------------------
    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.table.shape[1]

    @property
    def is_binary(self) -> bool:
        return bool(np.all(np.isin(self.table, (-1.0, 1.0))))

    def member(self, i: int) -> Hypothesis:
        return Hypothesis(self.kind, int(i), self.table[int(i)])

    def evaluate(self, x) -> np.ndarray:
        """Outputs (members, len(x)); reals allowed for thresholds and intervals, letters otherwise."""
        x = np.asarray(x)
        if self.kind == "threshold_1d":
            return _threshold_outputs(self.parameters, x.astype(float))
        if self.kind == "interval_1d":
            return _interval_outputs(self.parameters, x.astype(float))
        idx = x.astype(np.int64)
        if np.any(idx != x) or np.any(idx < 0) or np.any(idx >= self.alphabet_size):
            raise ValueError(f"{self.kind} classes are only defined on alphabet letters")
        return self.table[:, idx]

    def signed_sums(self, x, weights) -> np.ndarray:
        """``S[d, m] = sum_j weights[d, j] * h_m(x_j)`` for every member; shape (D, members)."""
        x = np.asarray(x, dtype=np.int64)
        weights = np.atleast_2d(np.asarray(weights, dtype=float))
        if self.kind == "threshold_1d":
            return _threshold_signed_sums(self.parameters, x, weights)
        return weights @ self.table[:, x].T

    def scaled(self, c: float) -> "TimestampClass":
        lip = None if self.lipschitz_constant is None else self.lipschitz_constant * abs(c)
        return TimestampClass("finite_table", self.table * c, self.output_bound * abs(c), lip)

    def mapped(self, phi) -> "TimestampClass":
        return TimestampClass("finite_table", phi(self.table))


def _threshold_outputs(params, x):
    th = np.asarray(params["thresholds"])[:, None]
    if params["orientation"] == "below":
        return np.where(x[None, :] < th, 1.0, -1.0)
    return np.where(x[None, :] > th, 1.0, -1.0)


def _interval_outputs(params, x):
    iv = np.asarray(params["intervals"], dtype=float).reshape(-1, 2)
    inside = (x[None, :] > iv[:, :1]) & (x[None, :] < iv[:, 1:])
    return np.where(inside, 1.0, -1.0)


def _threshold_signed_sums(params, x, weights):
    # sorted-prefix scan: sum_j w_j h(x_j) = 2 * (weight on the + side) - total
    order = np.argsort(x, kind="stable")
    xs = x[order].astype(float)
    cums = np.concatenate([np.zeros((weights.shape[0], 1)), np.cumsum(weights[:, order], axis=1)], axis=1)
    total = cums[:, -1:]
    th = np.asarray(params["thresholds"])
    if params["orientation"] == "below":
        return 2.0 * cums[:, np.searchsorted(xs, th, side="left")] - total
    return total - 2.0 * cums[:, np.searchsorted(xs, th, side="right")]


@dataclass(frozen=True)
class SequenceClass:
    """Product class ``H_1 x ... x H_T``."""

    per_timestamp: tuple

    def __post_init__(self):
        object.__setattr__(self, "per_timestamp", tuple(self.per_timestamp))
        if not self.per_timestamp:
            raise ValueError("a sequence class needs at least one timestamp")

    @classmethod
    def repeat(cls, cls_t: TimestampClass, horizon: int) -> "SequenceClass":
        return cls((cls_t,) * horizon)

    @property
    def horizon(self) -> int:
        return len(self.per_timestamp)

    @property
    def output_bound(self) -> float:
        return max(c.output_bound for c in self.per_timestamp)

    @property
    def lipschitz_constant(self):
        lips = [c.lipschitz_constant for c in self.per_timestamp]
        return None if any(v is None for v in lips) else max(lips)

    @property
    def product_size(self) -> int:
        return int(np.prod([c.size for c in self.per_timestamp], dtype=object))

    def __getitem__(self, t):
        return self.per_timestamp[t]

    def __iter__(self):
        return iter(self.per_timestamp)

    def __len__(self):
        return self.horizon

    def check_horizon(self, horizon: int):
        if horizon != self.horizon:
            raise ValueError(f"class has {self.horizon} timestamps, sample has {horizon}")

    def members(self, indices) -> tuple:
        return tuple(c.member(i) for c, i in zip(self.per_timestamp, indices))


@dataclass(frozen=True)
class RiskValue:
    value: float
    kind: str
    mc_std_error: float = None

    def __post_init__(self):
        if self.kind not in RISK_KINDS:
            raise ValueError(f"unknown risk kind {self.kind!r}")
        if not -1e-12 <= self.value <= 1 + 1e-12:
            raise ValueError(f"risk {self.value} outside [0, 1]")


def loss(prediction, label):
    """Binary loss ``(1 - y * yhat) / 2`` for predictions in [-1, 1] and labels in {-1, +1}."""
    p = np.asarray(prediction, dtype=float)
    y = np.asarray(label)
    if np.any(np.abs(p) > 1 + 1e-12):
        raise ValueError("predictions must lie in [-1, 1]")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    out = (1.0 - y * p) / 2.0
    return float(out) if out.ndim == 0 else out


def _tables(h):
    return [np.asarray(getattr(m, "table", m), dtype=float) for m in h]


def empirical_risk(sample: TemporalSample, h) -> RiskValue:
    """``sum_t sum_j L(h_t(X_tj), Y_tj) / (T N_t)``."""
    tables = _tables(h)
    if len(tables) != sample.horizon:
        raise ValueError(f"need {sample.horizon} hypotheses, got {len(tables)}")
    T = sample.horizon
    total = sum(float(np.mean(loss(tab[x], y))) for tab, x, y in zip(tables, sample.features, sample.labels)) / T
    return RiskValue(min(max(total, 0.0), 1.0), "empirical")


def member_empirical_risks(sample: TemporalSample, classes: SequenceClass) -> list:
    """Per timestamp, the contribution ``sum_j L / (T N_t)`` of every member; list of (members,) arrays."""
    classes.check_horizon(sample.horizon)
    T = sample.horizon
    out = []
    for c, x, y in zip(classes, sample.features, sample.labels):
        agree = c.signed_sums(x, y[None, :].astype(float))[0]
        out.append((0.5 - agree / (2.0 * x.size)) / T)
    return out


def member_expected_risks(spec: ProcessSpec, classes: SequenceClass) -> list:
    """Exact per-timestamp expected risk contributions of every member.

    Every vertex of the generator has marginal law ``pi`` and labels depend on
    the vertex's own feature only, so ``E L(h_t(X_tj), Y_tj)`` is the same for
    all ``j`` and equals ``sum_x pi(x) (1 - h_t(x) (2 p(x) - 1)) / 2``.
    """
    classes.check_horizon(spec.horizon)
    T = spec.horizon
    margin = 2.0 * spec.label_rule.positive_probability(spec.alphabet_size) - 1.0
    return [((1.0 - c.table * margin[None, :]) / 2.0) @ spec.pi / T for c in classes]


def stationary_risk(spec: ProcessSpec, h) -> RiskValue:
    """Exact ``R(h) = E R_hat(h)`` via the stationary marginals."""
    tables = _tables(h)
    if len(tables) != spec.horizon:
        raise ValueError(f"need {spec.horizon} hypotheses, got {len(tables)}")
    margin = 2.0 * spec.label_rule.positive_probability(spec.alphabet_size) - 1.0
    r = sum(float(((1.0 - tab * margin) / 2.0) @ spec.pi) for tab in tables) / spec.horizon
    return RiskValue(min(max(r, 0.0), 1.0), "expected_exact")


def expected_risk(spec: ProcessSpec, h, rollouts: int, seed: int) -> RiskValue:
    """Monte-Carlo mean of the empirical risk over fresh draws, with its standard error."""
    if rollouts < 1:
        raise ValueError("rollouts must be at least 1")
    vals = np.array([empirical_risk(simulate_rgp(spec, derive_seed(seed, "risk", r)), h).value for r in range(rollouts)])
    se = float(vals.std(ddof=1) / np.sqrt(rollouts)) if rollouts > 1 else None
    return RiskValue(float(vals.mean()), "expected_mc", se)


def erm_train(sample: TemporalSample, classes: SequenceClass):
    """Exact per-timestamp empirical risk minimiser; ties go to the lowest member index."""
    risks = member_empirical_risks(sample, classes)
    idx = [int(np.argmin(r + 0.0)) for r in risks]
    h = classes.members(idx)
    return h, empirical_risk(sample, h)


def erm_indices(sample: TemporalSample, classes: SequenceClass) -> tuple:
    return tuple(int(np.argmin(r)) for r in member_empirical_risks(sample, classes))


def regret(spec: ProcessSpec, classes: SequenceClass, indices) -> RiskValue:
    """Expected regret ``R(h) - min_{g in H} R(g)`` of the member sequence ``indices`` (exact)."""
    er = member_expected_risks(spec, classes)
    v = sum(float(r[i] - r.min()) for r, i in zip(er, indices))
    return RiskValue(min(max(v, 0.0), 1.0), "regret")
