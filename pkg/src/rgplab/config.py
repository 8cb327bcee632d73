"""Experiment configuration: one JSON document per experiment, strictly validated.

Unknown keys are rejected and every error names the offending field and,
where it can be found, its line in the file.
"""

import json
from dataclasses import asdict, dataclass, field, fields

from . import jsonio
from .hypotheses import CLASS_KINDS, SequenceClass, TimestampClass
from .process import GRAPH_KINDS, REGIMES, LabelRule, ProcessSpec, build_temporal_graph
from .rng import derive_rng


class ConfigError(ValueError):
    def __init__(self, path: str, message: str, line: int = None):
        self.path, self.message, self.line = path, message, line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{path}: {message}")


@dataclass
class GraphConfig:
    kind: str = "fixed_path"
    horizon: int = 4
    n: int = 8
    p: float = 0.0
    growth: int = 1
    seed: int = 0


@dataclass
class ProcessConfig:
    graph: GraphConfig = field(default_factory=GraphConfig)
    alphabet_size: int = 8
    stationary: list = None
    mixing_k0: float = 1.0
    mixing_rho: float = 0.5
    label_weights: list = field(default_factory=lambda: [-1.0, 0.0])
    label_noise: float = 0.5
    regime: str = "independent"
    neighbor_bias: float = 1.0


@dataclass
class ClassConfig:
    kind: str = "finite_table"
    table: list = None
    preset: str = None
    members: int = 8
    table_seed: int = 0
    binary: bool = True
    thresholds: list = None
    orientation: str = "below"
    endpoints: list = None
    weights: list = None
    grid_step: float = 0.25
    radius: float = 1.0
    clip: float = 1.0


@dataclass
class Budgets:
    trials: int = 200
    mc_draws: int = 2000
    rollouts: int = 10000
    histories: int = 2
    continuation_rollouts: int = 50
    norm_samples: int = 200
    oracle_rollouts: int = 200
    exact_budget: int = 20
    pairs: int = 50
    risk_rollouts: int = 200


@dataclass
class MixingConfig:
    t: int = 1
    gaps: list = field(default_factory=lambda: [1, 2, 3])


@dataclass
class CombinatoricsConfig:
    grid: list = field(default_factory=lambda: [0, 1, 2, 3, 4, 5])
    epsilons: list = field(default_factory=lambda: [0.5, 1.0])


@dataclass
class SuiteEntry:
    theorem: str = "th_gen"
    process: ProcessConfig = None
    classes: object = None


@dataclass
class ExperimentConfig:
    seed: int = 0
    process: ProcessConfig = field(default_factory=ProcessConfig)
    classes: object = field(default_factory=ClassConfig)
    theorems: list = field(default_factory=lambda: ["th_gen"])
    suite: list = None
    deltas: list = field(default_factory=lambda: [0.1])
    budgets: Budgets = field(default_factory=Budgets)
    mixing: MixingConfig = field(default_factory=MixingConfig)
    combinatorics: CombinatoricsConfig = field(default_factory=CombinatoricsConfig)
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return jsonio.to_plain(asdict(self))

    def digest(self) -> str:
        return jsonio.digest(self.to_dict())


_NESTED = {
    ("ExperimentConfig", "process"): ProcessConfig,
    ("ExperimentConfig", "budgets"): Budgets,
    ("ExperimentConfig", "mixing"): MixingConfig,
    ("ExperimentConfig", "combinatorics"): CombinatoricsConfig,
    ("ProcessConfig", "graph"): GraphConfig,
    ("SuiteEntry", "process"): ProcessConfig,
}


def _line_of(text: str, key: str):
    if text is None:
        return None
    needle = json.dumps(key) + ":"
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line.replace('" :', '":'):
            return i
    return None


def _build(cls, data, path: str, text: str):
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", f"expected an object, got {type(data).__name__}", _line_of(text, path.split(".")[-1]))
    known = {f.name for f in fields(cls)}
    for k in data:
        if k not in known:
            raise ConfigError(f"{path}.{k}" if path else k, f"unknown key (allowed: {', '.join(sorted(known))})", _line_of(text, k))
    kwargs = {}
    for k, v in data.items():
        sub = _NESTED.get((cls.__name__, k))
        p = f"{path}.{k}" if path else k
        if sub is not None and v is not None:
            v = _build(sub, v, p, text)
        elif k == "classes":
            v = _classes(v, p, text)
        elif k == "suite" and v is not None:
            if not isinstance(v, list):
                raise ConfigError(p, "expected a list of entries", _line_of(text, k))
            v = [_build(SuiteEntry, e, f"{p}[{i}]", text) for i, e in enumerate(v)]
        kwargs[k] = v
    return cls(**kwargs)


def _classes(v, path, text):
    if isinstance(v, list):
        return [_build(ClassConfig, c, f"{path}[{i}]", text) for i, c in enumerate(v)]
    return _build(ClassConfig, v, path, text)


def _fail(path, msg, text):
    raise ConfigError(path, msg, _line_of(text, path.split(".")[-1].split("[")[0]))


def _positive_int(value, path, text, allow_zero=False):
    if isinstance(value, bool) or not isinstance(value, int) or value < (0 if allow_zero else 1):
        _fail(path, f"expected a {'non-negative' if allow_zero else 'positive'} integer, got {value!r}", text)


def _validate(cfg: ExperimentConfig, text: str):
    from .bounds import THEOREMS

    _positive_int(cfg.seed, "seed", text, allow_zero=True)
    for f in fields(Budgets):
        _positive_int(getattr(cfg.budgets, f.name), f"budgets.{f.name}", text)
    if not isinstance(cfg.deltas, list) or not cfg.deltas:
        _fail("deltas", "expected a non-empty list", text)
    for d in cfg.deltas:
        if isinstance(d, bool) or not isinstance(d, (int, float)) or not 0 < d < 1:
            _fail("deltas", f"every delta must lie in (0, 1), got {d!r}", text)
    theorems = cfg.theorems if cfg.suite is None else [e.theorem for e in cfg.suite]
    for th in theorems:
        if th not in THEOREMS:
            _fail("theorems" if cfg.suite is None else "theorem", f"unknown theorem {th!r}", text)
    for i, g in enumerate(cfg.mixing.gaps):
        _positive_int(g, f"mixing.gaps[{i}]", text)
    _positive_int(cfg.mixing.t, "mixing.t", text)
    procs = [("process", cfg.process)] + [(f"suite[{i}].process", e.process) for i, e in enumerate(cfg.suite or []) if e.process]
    for p, proc in procs:
        g = proc.graph
        if g.kind not in GRAPH_KINDS:
            _fail(f"{p}.graph.kind", f"unknown graph kind {g.kind!r}", text)
        if proc.regime not in REGIMES:
            _fail(f"{p}.regime", f"unknown regime {proc.regime!r}", text)
        _positive_int(g.horizon, f"{p}.graph.horizon", text)
        _positive_int(g.n, f"{p}.graph.n", text)
    all_classes = [("classes", cfg.classes)] + [(f"suite[{i}].classes", e.classes) for i, e in enumerate(cfg.suite or []) if e.classes]
    for p, cl in all_classes:
        for c in cl if isinstance(cl, list) else [cl]:
            if c.kind not in CLASS_KINDS:
                _fail(f"{p}.kind", f"unknown class kind {c.kind!r}", text)


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("<json>", e.msg, e.lineno) from None
    cfg = _build(ExperimentConfig, data, "", text)
    _validate(cfg, text)
    # surface process-level problems (probabilities, ranges) as field errors now
    try:
        build_spec(cfg.process)
        for e in cfg.suite or []:
            build_spec(e.process or cfg.process)
    except (ValueError, TypeError) as e:
        raise ConfigError("process", str(e), _line_of(text, "process")) from None
    return cfg


def load_config(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def build_spec(proc: ProcessConfig) -> ProcessSpec:
    g = proc.graph
    graph = build_temporal_graph(g.kind, g.horizon, g.n, p=g.p, growth=g.growth, seed=g.seed)
    return ProcessSpec(
        graph,
        alphabet_size=proc.alphabet_size,
        stationary=proc.stationary,
        mixing_k0=proc.mixing_k0,
        mixing_rho=proc.mixing_rho,
        label_rule=LabelRule(tuple(proc.label_weights), proc.label_noise),
        regime=proc.regime,
        neighbor_bias=proc.neighbor_bias,
    )


def build_class(c: ClassConfig, alphabet_size: int, t: int) -> TimestampClass:
    """One timestamp's class; random tables draw from the ``(table_seed, t)`` substream."""
    if c.kind == "threshold_1d":
        return TimestampClass.threshold_1d(alphabet_size, c.thresholds, c.orientation)
    if c.kind == "interval_1d":
        return TimestampClass.interval_1d(alphabet_size, c.endpoints)
    if c.kind == "clipped_linear":
        return TimestampClass.clipped_linear(alphabet_size, c.weights, c.grid_step, c.radius, c.clip)
    if c.table is not None:
        return TimestampClass.finite_table(c.table)
    if c.preset == "all_signs":
        return TimestampClass.all_signs(alphabet_size)
    if c.preset in ("constant", "constant_plus"):
        return TimestampClass.constant(alphabet_size, 1.0)
    if c.preset == "plus_minus":
        return TimestampClass.finite_table([[1.0] * alphabet_size, [-1.0] * alphabet_size])
    if c.preset is not None:
        raise ValueError(f"unknown preset {c.preset!r}")
    return TimestampClass.random_table(alphabet_size, c.members, derive_rng(c.table_seed, "table", t), c.binary)


def build_classes(cl, spec: ProcessSpec) -> SequenceClass:
    T = spec.horizon
    if isinstance(cl, list):
        if len(cl) != T:
            raise ValueError(f"need {T} class descriptors, got {len(cl)}")
        return SequenceClass(tuple(build_class(c, spec.alphabet_size, t) for t, c in enumerate(cl, start=1)))
    return SequenceClass(tuple(build_class(cl, spec.alphabet_size, t) for t in range(1, T + 1)))


def suite_entries(cfg: ExperimentConfig) -> list:
    """``(theorem, spec, classes)`` triples for verification."""
    if cfg.suite is None:
        spec = build_spec(cfg.process)
        classes = build_classes(cfg.classes, spec)
        return [(th, spec, classes) for th in cfg.theorems]
    out = []
    for e in cfg.suite:
        spec = build_spec(e.process or cfg.process)
        out.append((e.theorem, spec, build_classes(e.classes or cfg.classes, spec)))
    return out
