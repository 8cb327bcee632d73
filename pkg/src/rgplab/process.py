"""Random graph processes: temporal graphs, the generative kernel and sampling.

Features live on a finite alphabet ``{0, ..., A-1}``. Layer 1 is drawn i.i.d.
from the stationary law ``pi``. A vertex ``i`` active at time ``t+1`` has as
parents the closed neighbourhood of ``i`` in ``G_t`` (``i`` itself plus its
``E_t`` neighbours, restricted to ``V_t``). Its feature is drawn from the Doeblin
mixture

    (1 - eps_t) * pi  +  eps_t * [beta * delta_{X_{t,p}} + (1 - beta) * pi]

with ``p`` a uniformly chosen parent, ``eps_t = k0 * rho / N_t`` and ``beta``
the neighbour bias. The kernel is affine in the parent indicators, so every
vertex keeps marginal law ``pi`` and conditional laws given any history are
exactly computable by linear propagation (see :func:`conditional_marginals`).

Timestamps passed as arguments (``from_time``, ``t``) are 1-based; per-layer
sequences (``active_sets[0]`` is time 1) are 0-based.
"""

from dataclasses import dataclass, field

import numpy as np

from . import jsonio
from .rng import derive_rng

GRAPH_KINDS = ("fixed_complete", "fixed_path", "erdos_renyi_per_step", "growing")
REGIMES = ("independent", "uniform_ergodic")
DEFAULT_ALPHABET = 8


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    active_sets: tuple
    edges: tuple
    universal_vertices: int = None

    def __post_init__(self):
        active = tuple(tuple(sorted(int(v) for v in set(vs))) for vs in self.active_sets)
        if not active:
            raise ValueError("horizon must be at least 1")
        if len(self.edges) != len(active):
            raise ValueError("need one edge set per timestamp")
        edges = []
        for t, (vs, es) in enumerate(zip(active, self.edges)):
            if not vs:
                raise ValueError(f"timestamp {t + 1} has no active vertices")
            if vs[0] < 0:
                raise ValueError("vertex indices must be non-negative")
            members = set(vs)
            norm = set()
            for e in es:
                i, j = (int(x) for x in e)
                if i == j:
                    raise ValueError(f"self-loop on vertex {i} at timestamp {t + 1}")
                if i not in members or j not in members:
                    raise ValueError(f"edge ({i}, {j}) at timestamp {t + 1} leaves the active set")
                norm.add((min(i, j), max(i, j)))
            edges.append(tuple(sorted(norm)))
        n_univ = max(vs[-1] for vs in active) + 1
        if self.universal_vertices is not None and int(self.universal_vertices) < n_univ:
            raise ValueError("universal_vertices smaller than the largest active index")
        object.__setattr__(self, "active_sets", active)
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(
            self, "universal_vertices", n_univ if self.universal_vertices is None else int(self.universal_vertices)
        )

    @property
    def horizon(self) -> int:
        return len(self.active_sets)

    @property
    def sizes(self) -> tuple:
        return tuple(len(vs) for vs in self.active_sets)

    def neighbors(self, k: int) -> dict:
        """Adjacency of layer index ``k`` (0-based) as vertex -> set of vertices."""
        adj = {v: set() for v in self.active_sets[k]}
        for i, j in self.edges[k]:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def parents(self, k: int) -> list:
        """For each vertex of layer ``k`` (in sorted order), positions in layer ``k-1`` of its closed neighbourhood."""
        if k == 0:
            return [[] for _ in self.active_sets[0]]
        prev = self.active_sets[k - 1]
        pos = {v: p for p, v in enumerate(prev)}
        adj = self.neighbors(k - 1)
        out = []
        for v in self.active_sets[k]:
            if v not in pos:
                out.append([])
                continue
            out.append(sorted(pos[u] for u in adj[v] | {v}))
        return out

    def with_edge(self, k: int, edge) -> "TemporalGraph":
        edges = list(self.edges)
        edges[k] = tuple(edges[k]) + (tuple(edge),)
        return TemporalGraph(self.active_sets, tuple(edges), self.universal_vertices)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "active_sets": [list(vs) for vs in self.active_sets],
            "edges": [[list(e) for e in es] for es in self.edges],
            "universal_vertices": self.universal_vertices,
        }

    def __eq__(self, other):
        if not isinstance(other, TemporalGraph):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.active_sets, self.edges, self.universal_vertices))


def build_temporal_graph(kind: str, horizon: int, n: int, *, p: float = 0.0, growth: int = 1, seed: int = 0) -> TemporalGraph:
    """Construct a graph schedule.

    ``fixed_complete`` / ``fixed_path`` keep ``V_t = {0..n-1}`` with the same
    edges at every step; ``erdos_renyi_per_step`` redraws ``G(n, p)`` edges at
    each step; ``growing`` starts from a path on ``n`` vertices and adds
    ``growth`` vertices per step, each attached to one uniformly chosen earlier
    vertex, plus ``G(., p)`` extra edges redrawn at each step.
    """
    if kind not in GRAPH_KINDS:
        raise ValueError(f"unknown graph kind {kind!r}; expected one of {GRAPH_KINDS}")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if n < 1:
        raise ValueError("timestamps need at least one vertex")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    if growth < 0:
        raise ValueError("growth must be non-negative")

    vs = tuple(range(n))
    path = tuple((i, i + 1) for i in range(n - 1))
    if kind == "fixed_complete":
        es = tuple((i, j) for i in range(n) for j in range(i + 1, n))
        return TemporalGraph((vs,) * horizon, (es,) * horizon)
    if kind == "fixed_path":
        return TemporalGraph((vs,) * horizon, (path,) * horizon)
    if kind == "erdos_renyi_per_step":
        active, edges = [], []
        for t in range(horizon):
            rng = derive_rng(seed, "graph", t + 1)
            iu, ju = np.triu_indices(n, k=1)
            keep = rng.random(iu.size) < p
            active.append(vs)
            edges.append(tuple(zip(iu[keep].tolist(), ju[keep].tolist())))
        return TemporalGraph(tuple(active), tuple(edges))

    active, edges = [], []
    tree = set(path)
    size = n
    for t in range(horizon):
        rng = derive_rng(seed, "graph", t + 1)
        if t > 0:
            for v in range(size, size + growth):
                tree.add((int(rng.integers(0, v)), v))
            size += growth
        iu, ju = np.triu_indices(size, k=1)
        keep = rng.random(iu.size) < p
        extra = set(zip(iu[keep].tolist(), ju[keep].tolist()))
        active.append(tuple(range(size)))
        edges.append(tuple(sorted(tree | extra)))
    return TemporalGraph(tuple(active), tuple(edges))


def feature_embedding(alphabet_size: int) -> np.ndarray:
    """Fixed unit-scaled embedding of the alphabet into R^2: ``(u, 2u^2 - 1)`` with ``u`` in [-1, 1]."""
    if alphabet_size == 1:
        u = np.zeros(1)
    else:
        u = 2.0 * np.arange(alphabet_size) / (alphabet_size - 1) - 1.0
    return np.stack([u, 2.0 * u**2 - 1.0], axis=1)


@dataclass(frozen=True)
class LabelRule:
    """``Y = sign(w . phi(X) + eta)`` with ``eta ~ U[-noise, noise]`` and ``sign(0) = +1``."""

    weights: tuple = (-1.0, 0.0)
    noise: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != 2:
            raise ValueError("label weights must have the embedding dimension 2")
        if self.noise < 0:
            raise ValueError("label noise amplitude must be non-negative")

    def scores(self, alphabet_size: int) -> np.ndarray:
        return feature_embedding(alphabet_size) @ np.asarray(self.weights)

    def positive_probability(self, alphabet_size: int) -> np.ndarray:
        """``P(Y = +1 | X = x)`` for every letter ``x``."""
        s = self.scores(alphabet_size)
        if self.noise == 0:
            return (s >= 0).astype(float)
        return np.clip((self.noise + s) / (2.0 * self.noise), 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "noise": self.noise}


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    graph: TemporalGraph
    alphabet_size: int = DEFAULT_ALPHABET
    stationary: tuple = None
    mixing_k0: float = 1.0
    mixing_rho: float = 0.5
    label_rule: LabelRule = field(default_factory=LabelRule)
    regime: str = "independent"
    neighbor_bias: float = 1.0

    def __post_init__(self):
        a = int(self.alphabet_size)
        if a < 1:
            raise ValueError("alphabet needs at least one letter")
        pi = np.full(a, 1.0 / a) if self.stationary is None else np.asarray(self.stationary, dtype=float)
        if pi.shape != (a,):
            raise ValueError("stationary law must have one entry per letter")
        if np.any(pi < 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("stationary law must be a probability vector (sum within 1e-12)")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not 0.0 < self.mixing_rho < 1.0:
            raise ValueError("mixing rho must lie in (0, 1)")
        if self.mixing_k0 <= 0:
            raise ValueError("mixing k0 must be positive")
        if not 0.0 <= self.neighbor_bias <= 1.0:
            raise ValueError("neighbour bias must lie in [0, 1]")
        if self.regime == "uniform_ergodic":
            for t, n in enumerate(self.graph.sizes):
                eps = self.mixing_k0 * self.mixing_rho / n
                if eps > 1.0:
                    raise ValueError(f"mixing weight k0*rho/N_t = {eps:.4g} exceeds 1 at timestamp {t + 1}")
                if self.mixing_k0 > n:
                    # multi-step decay (k0 rho / N)^g <= (k0 / N) rho^g needs k0 <= N
                    raise ValueError(f"k0 = {self.mixing_k0} exceeds N_t = {n} at timestamp {t + 1}")
        object.__setattr__(self, "alphabet_size", a)
        object.__setattr__(self, "stationary", tuple(float(x) for x in pi))

    @property
    def pi(self) -> np.ndarray:
        return np.asarray(self.stationary)

    @property
    def horizon(self) -> int:
        return self.graph.horizon

    @property
    def doeblin_weights(self) -> np.ndarray:
        """Per-layer probability ``eps_t`` of consulting a parent."""
        if self.regime == "independent":
            return np.zeros(self.horizon)
        return np.array([self.mixing_k0 * self.mixing_rho / n for n in self.graph.sizes])

    def to_dict(self) -> dict:
        return {
            "graph": self.graph.to_dict(),
            "alphabet_size": self.alphabet_size,
            "stationary": list(self.stationary),
            "mixing_k0": self.mixing_k0,
            "mixing_rho": self.mixing_rho,
            "label_rule": self.label_rule.to_dict(),
            "regime": self.regime,
            "neighbor_bias": self.neighbor_bias,
        }

    def digest(self) -> str:
        return jsonio.digest(self.to_dict())


@dataclass(frozen=True, eq=False)
class TemporalSample:
    graph: TemporalGraph
    features: tuple
    labels: tuple
    seed: int = 0
    spec_digest: str = ""

    def __post_init__(self):
        if len(self.features) != self.graph.horizon or len(self.labels) != self.graph.horizon:
            raise ValueError("features and labels need one array per timestamp")
        feats, labs = [], []
        for t, (x, y, n) in enumerate(zip(self.features, self.labels, self.graph.sizes)):
            x = np.asarray(x, dtype=np.int64).reshape(-1)
            y = np.asarray(y, dtype=np.int64).reshape(-1)
            if x.size != n or y.size != n:
                raise ValueError(f"timestamp {t + 1}: expected {n} entries, got {x.size} features / {y.size} labels")
            if np.any(x < 0):
                raise ValueError("features must be alphabet indices")
            if not np.all(np.isin(y, (-1, 1))):
                raise ValueError("labels must be -1 or +1")
            feats.append(_frozen(x))
            labs.append(_frozen(y))
        object.__setattr__(self, "features", tuple(feats))
        object.__setattr__(self, "labels", tuple(labs))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def horizon(self) -> int:
        return self.graph.horizon

    @property
    def sizes(self) -> tuple:
        return self.graph.sizes

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "active_sets": [list(vs) for vs in self.graph.active_sets],
            "edges": [[list(e) for e in es] for es in self.graph.edges],
            "features": [x.tolist() for x in self.features],
            "labels": [y.tolist() for y in self.labels],
            "seed": self.seed,
            "spec_digest": self.spec_digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TemporalSample":
        graph = TemporalGraph(tuple(tuple(v) for v in d["active_sets"]), tuple(tuple(map(tuple, es)) for es in d["edges"]))
        if graph.horizon != d["horizon"]:
            raise ValueError("horizon does not match the active sets")
        return cls(graph, tuple(d["features"]), tuple(d["labels"]), d["seed"], d.get("spec_digest", ""))

    def __eq__(self, other):
        if not isinstance(other, TemporalSample):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.seed == other.seed
            and self.spec_digest == other.spec_digest
            and all(np.array_equal(a, b) for a, b in zip(self.features, other.features))
            and all(np.array_equal(a, b) for a, b in zip(self.labels, other.labels))
        )


def sample_to_json(sample: TemporalSample) -> str:
    return jsonio.dumps(sample.to_dict())


def sample_from_json(text: str) -> TemporalSample:
    import json

    return TemporalSample.from_dict(json.loads(text))


# -- layer sampler ----------------------------------------------------------------
# Each vertex consumes five uniforms: Doeblin coin, parent choice, bias coin,
# stationary draw, label noise. Sharing uniforms across two copies of the
# process gives the coupled continuations used for TV and mixing estimates.

N_UNIFORMS = 5


class _Layout:
    """Cached parent tables for a spec."""

    def __init__(self, spec: ProcessSpec):
        self.spec = spec
        self.cdf = np.cumsum(spec.pi)
        self.cdf[-1] = 1.0
        self.scores = spec.label_rule.scores(spec.alphabet_size)
        self.eps = spec.doeblin_weights
        self.parent_idx, self.parent_cnt = [], []
        for k in range(spec.horizon):
            ps = spec.graph.parents(k)
            width = max([len(p) for p in ps] + [1])
            idx = np.zeros((len(ps), width), dtype=np.int64)
            for i, p in enumerate(ps):
                idx[i, : len(p)] = p
            self.parent_idx.append(idx)
            self.parent_cnt.append(np.array([len(p) for p in ps], dtype=np.int64))


_LAYOUTS = {}


def _layout(spec: ProcessSpec) -> _Layout:
    key = id(spec)
    hit = _LAYOUTS.get(key)
    if hit is None or hit.spec is not spec:
        hit = _Layout(spec)
        if len(_LAYOUTS) > 64:
            _LAYOUTS.clear()
        _LAYOUTS[key] = hit
    return hit


def _layer_from_uniforms(lay: _Layout, k: int, prev, u: np.ndarray):
    """Features and labels of layer ``k`` (0-based) for ``R`` rollouts; ``u`` has shape (R, N_k, 5)."""
    spec = lay.spec
    a = spec.alphabet_size
    values = np.minimum(np.searchsorted(lay.cdf, u[..., 3], side="right"), a - 1)
    eps = lay.eps[k]
    if k > 0 and eps > 0 and prev is not None:
        cnt = lay.parent_cnt[k]
        pick = np.minimum((u[..., 1] * cnt).astype(np.int64), np.maximum(cnt - 1, 0))
        ppos = lay.parent_idx[k][np.arange(cnt.size), pick]
        copied = np.take_along_axis(prev, ppos, axis=1)
        use = (u[..., 0] < eps) & (u[..., 2] < spec.neighbor_bias) & (cnt > 0)
        values = np.where(use, copied, values)
    noise = spec.label_rule.noise * (2.0 * u[..., 4] - 1.0)
    labels = np.where(lay.scores[values] + noise >= 0, 1, -1)
    return values.astype(np.int64), labels.astype(np.int64)


def _uniforms(seed, k: int, rollouts: int, n: int, purpose: str = "layer") -> np.ndarray:
    return derive_rng(seed, purpose, k + 1).random((rollouts, n, N_UNIFORMS))


def simulate_rgp(spec: ProcessSpec, seed: int) -> TemporalSample:
    """One draw ``Z_T`` of the process; a pure function of ``(spec, seed)``."""
    lay = _layout(spec)
    feats, labs = [], []
    prev = None
    for k, n in enumerate(spec.graph.sizes):
        x, y = _layer_from_uniforms(lay, k, prev, _uniforms(seed, k, 1, n))
        feats.append(x[0])
        labs.append(y[0])
        prev = x
    return TemporalSample(spec.graph, tuple(feats), tuple(labs), seed, spec.digest())


def resample_continuation(spec: ProcessSpec, sample: TemporalSample, from_time: int, seed: int) -> TemporalSample:
    """Keep layers strictly before ``from_time`` (1-based) and redraw the rest.

    Redrawn layers use the same substreams as :func:`simulate_rgp`, so
    ``from_time=1`` reproduces ``simulate_rgp(spec, seed)``.
    """
    T = spec.horizon
    if sample.horizon != T:
        raise ValueError("sample horizon does not match the process")
    if not 1 <= from_time <= T:
        raise ValueError(f"from_time must lie in [1, {T}], got {from_time}")
    lay = _layout(spec)
    feats = list(sample.features[: from_time - 1])
    labs = list(sample.labels[: from_time - 1])
    prev = None if from_time == 1 else sample.features[from_time - 2][None, :]
    for k in range(from_time - 1, T):
        x, y = _layer_from_uniforms(lay, k, prev, _uniforms(seed, k, 1, spec.graph.sizes[k]))
        feats.append(x[0])
        labs.append(y[0])
        prev = x
    return TemporalSample(spec.graph, tuple(feats), tuple(labs), seed, spec.digest())


def simulate_batch(spec: ProcessSpec, rollouts: int, seed: int):
    """``rollouts`` independent draws at once: lists of (R, N_t) feature and label arrays."""
    lay = _layout(spec)
    feats, labs = [], []
    prev = None
    for k, n in enumerate(spec.graph.sizes):
        x, y = _layer_from_uniforms(lay, k, prev, _uniforms(seed, k, rollouts, n, "batch"))
        feats.append(x)
        labs.append(y)
        prev = x
    return feats, labs


def continue_batch(spec: ProcessSpec, layer, t: int, rollouts: int, seed: int, until: int = None):
    """Continuations of a pinned layer ``t`` (1-based) over layers ``t+1 .. until``.

    ``layer`` holds the features of time ``t``, either shape (N_t,) shared by
    all rollouts or (R, N_t). Returns lists of (R, N_k) arrays for k > t.
    """
    until = spec.horizon if until is None else until
    if not 1 <= t < until <= spec.horizon:
        raise ValueError("need 1 <= t < until <= horizon")
    lay = _layout(spec)
    prev = np.broadcast_to(np.asarray(layer, dtype=np.int64), (rollouts, spec.graph.sizes[t - 1]))
    feats, labs = [], []
    for k in range(t, until):
        x, y = _layer_from_uniforms(lay, k, prev, _uniforms(seed, k, rollouts, spec.graph.sizes[k], "continue"))
        feats.append(x)
        labs.append(y)
        prev = x
    return feats, labs


def redraw_layer(spec: ProcessSpec, prev_layer, t: int, rollouts: int, seed: int):
    """``rollouts`` draws of layer ``t`` (1-based) given layer ``t-1``; (R, N_t) features and labels."""
    lay = _layout(spec)
    prev = None
    if t > 1:
        prev = np.broadcast_to(np.asarray(prev_layer, dtype=np.int64), (rollouts, spec.graph.sizes[t - 2]))
    return _layer_from_uniforms(lay, t - 1, prev, _uniforms(seed, t - 1, rollouts, spec.graph.sizes[t - 1], "redraw"))


def coupled_continuations(spec: ProcessSpec, layer, t: int, position: int, pair, rollouts: int, seed: int):
    """Two continuations of layer ``t`` differing only in vertex ``position`` (pinned to ``pair[0]`` vs ``pair[1]``).

    Both copies consume identical uniforms, so they disagree downstream only
    where the pinned coordinate actually propagates. Returns two lists of
    (R, N_k) feature arrays for k > t.
    """
    lay = _layout(spec)
    base = np.asarray(layer, dtype=np.int64)
    a = np.broadcast_to(base, (rollouts, base.size)).copy()
    b = a.copy()
    a[:, position] = pair[0]
    b[:, position] = pair[1]
    out_a, out_b = [], []
    for k in range(t, spec.horizon):
        u = _uniforms(seed, k, rollouts, spec.graph.sizes[k], "coupled")
        a, _ = _layer_from_uniforms(lay, k, a, u)
        b, _ = _layer_from_uniforms(lay, k, b, u)
        out_a.append(a)
        out_b.append(b)
    return out_a, out_b


def transfer_matrix(spec: ProcessSpec, t: int, k: int) -> np.ndarray:
    """Linear map (N_k x N_t) carrying deviations ``mu - pi`` of layer ``t`` to layer ``k`` (1-based, k >= t)."""
    g = spec.graph
    lay = _layout(spec)
    m = np.eye(g.sizes[t - 1])
    for s in range(t, k):
        cnt = lay.parent_cnt[s]
        step = np.zeros((g.sizes[s], g.sizes[s - 1]))
        w = lay.eps[s] * spec.neighbor_bias
        for i in range(cnt.size):
            if cnt[i]:
                step[i, lay.parent_idx[s][i, : cnt[i]]] += w / cnt[i]
        m = step @ m
    return m


def conditional_marginals(spec: ProcessSpec, layer, t: int, k: int) -> np.ndarray:
    """Exact laws of ``Z_{k,j}`` for every ``j`` in ``V_k`` given layer ``t`` pinned to ``layer``; shape (N_k, A)."""
    layer = np.asarray(layer, dtype=np.int64)
    dev = np.eye(spec.alphabet_size)[layer] - spec.pi[None, :]
    return spec.pi[None, :] + transfer_matrix(spec, t, k) @ dev
