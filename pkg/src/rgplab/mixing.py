"""Mixing matrices, total variation, reachable sets and the deviation terms of the ergodic bounds."""

from dataclasses import dataclass

import numpy as np

from .process import (
    ProcessSpec,
    TemporalGraph,
    conditional_marginals,
    continue_batch,
    coupled_continuations,
    simulate_rgp,
    transfer_matrix,
)
from .rng import derive_rng, derive_seed

GAMMA_SOURCES = ("analytic", "empirical", "exact")


def tv_distance(p, q, tol: float = 1e-9) -> float:
    """Total variation between two laws on a finite alphabet, ``sum |p - q| / 2``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("laws must live on the same alphabet")
    for v in (p, q):
        if np.any(v < -tol) or abs(v.sum() - 1.0) > tol:
            raise ValueError("inputs must be probability vectors")
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    entries: np.ndarray
    source: str
    k0: float = None
    rho: float = None
    std_error: np.ndarray = None
    smoothing: float = None

    def __post_init__(self):
        g = np.array(self.entries, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("mixing matrix must be square")
        if self.source not in GAMMA_SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if np.any(np.tril(g, -1) != 0):
            raise ValueError("mixing matrix must be upper triangular")
        if not np.allclose(np.diag(g), 1.0, rtol=0, atol=1e-15):
            raise ValueError("mixing matrix diagonal must be 1")
        if np.any(g < 0):
            raise ValueError("mixing matrix entries must be non-negative")
        g.flags.writeable = False
        object.__setattr__(self, "entries", g)
        if self.std_error is not None:
            se = np.array(self.std_error, dtype=float)
            se.flags.writeable = False
            object.__setattr__(self, "std_error", se)

    @property
    def horizon(self) -> int:
        return self.entries.shape[0]

    @property
    def off_diagonal(self) -> np.ndarray:
        return self.entries - np.eye(self.horizon)

    def norm2(self) -> float:
        """Spectral norm."""
        return float(np.linalg.norm(self.entries, 2))

    def to_dict(self) -> dict:
        out = {"horizon": self.horizon, "source": self.source, "entries": self.entries.tolist()}
        if self.source == "analytic":
            out["k0"], out["rho"] = self.k0, self.rho
        if self.std_error is not None:
            out["std_error"] = self.std_error.tolist()
        if self.smoothing is not None:
            out["smoothing"] = self.smoothing
        return out


def mixing_matrix_analytic(T: int, k0: float, rho: float, regime: str = "uniform_ergodic") -> MixingMatrix:
    """``Gamma_{t,k} = k0 rho^{k-t}`` above the diagonal; the identity under independence."""
    if T < 1:
        raise ValueError("horizon must be at least 1")
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    if regime == "independent":
        return MixingMatrix(np.eye(T), "analytic", k0, rho)
    lag = np.arange(T)[None, :] - np.arange(T)[:, None]
    g = np.where(lag > 0, k0 * rho ** np.maximum(lag, 0), 0.0)
    np.fill_diagonal(g, 1.0)
    return MixingMatrix(g, "analytic", k0, rho)


def _positions(graph: TemporalGraph, k: int) -> dict:
    return {v: p for p, v in enumerate(graph.active_sets[k])}


def mixing_matrix_exact(spec: ProcessSpec) -> MixingMatrix:
    """Exact ``Gamma`` for the Doeblin generator.

    Pinning ``Z_{t,j}`` to two different letters moves the law of ``Z_{k,j}`` by
    ``M[j, j]`` times the TV between the two point masses, where ``M`` is the
    transfer matrix from layer ``t`` to ``k``. The value does not depend on the
    history, so the supremum is attained by any pair of distinct letters.
    """
    T = spec.horizon
    g = np.eye(T)
    if spec.regime == "uniform_ergodic" and spec.alphabet_size > 1:
        for t in range(1, T):
            pos_t = _positions(spec.graph, t - 1)
            for k in range(t + 1, T + 1):
                m = transfer_matrix(spec, t, k)
                pos_k = _positions(spec.graph, k - 1)
                g[t - 1, k - 1] = sum(m[pos_k[v], p] for v, p in pos_t.items() if v in pos_k)
    return MixingMatrix(g, "exact", spec.mixing_k0, spec.mixing_rho)


def mixing_matrix_empirical(spec: ProcessSpec, histories: int, rollouts: int, seed: int = 0) -> MixingMatrix:
    """Sampled-history estimate of ``Gamma`` from coupled continuations.

    For each timestamp ``t``, vertex ``j`` and sampled history, ``Z_{t,j}`` is
    pinned to a random pair of distinct letters and both copies are rolled
    forward on shared randomness. The conditional laws of ``Z_{k,j}`` are
    estimated by Laplace-smoothed frequencies (``1/A`` per letter), the TV is
    maximised over histories and summed over ``j``. Standard errors use the
    fraction of rollouts on which the two copies disagree.
    """
    if histories < 1 or rollouts < 1:
        raise ValueError("budgets must be at least 1")
    T, A = spec.horizon, spec.alphabet_size
    g = np.eye(T)
    var = np.zeros((T, T))
    smooth = 1.0 / A
    for t in range(1, T):
        pos_t = _positions(spec.graph, t - 1)
        best = np.zeros((len(pos_t), T))
        best_var = np.zeros((len(pos_t), T))
        for h in range(histories):
            layer = simulate_rgp(spec, derive_seed(seed, "history", t, h)).features[t - 1]
            rng = derive_rng(seed, "pairs", t, h)
            for jj, (v, p) in enumerate(pos_t.items()):
                pair = rng.choice(A, size=2, replace=False) if A > 1 else (0, 0)
                ca, cb = coupled_continuations(spec, layer, t, p, pair, rollouts, derive_seed(seed, "coupled", t, h, p))
                for k in range(t + 1, T + 1):
                    pos_k = _positions(spec.graph, k - 1)
                    if v not in pos_k:
                        continue
                    xa, xb = ca[k - t - 1][:, pos_k[v]], cb[k - t - 1][:, pos_k[v]]
                    fa = (np.bincount(xa, minlength=A) + smooth) / (rollouts + 1.0)
                    fb = (np.bincount(xb, minlength=A) + smooth) / (rollouts + 1.0)
                    tv = tv_distance(fa, fb)
                    if h == 0 or tv > best[jj, k - 1]:
                        q = float(np.mean(xa != xb))
                        best[jj, k - 1] = tv
                        best_var[jj, k - 1] = q * (1.0 - q) / rollouts
        g[t - 1, t:] = best.sum(axis=0)[t:]
        var[t - 1, t:] = best_var.sum(axis=0)[t:]
    return MixingMatrix(g, "empirical", spec.mixing_k0, spec.mixing_rho, np.sqrt(var), smooth)


# -- reachability --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReachabilityTable:
    """``counts[t-1][p, k-1]`` is the number of time-``k`` vertices reached from the ``p``-th vertex of layer ``t``."""

    counts: tuple

    @property
    def horizon(self) -> int:
        return len(self.counts)

    def count(self, t: int, position: int, k: int) -> int:
        if not 1 <= t < k <= self.horizon:
            raise ValueError("need 1 <= t < k <= T")
        return int(self.counts[t - 1][position, k - 1])

    def to_dict(self) -> dict:
        return {"counts": [c.tolist() for c in self.counts]}


def reachable_sets(graph: TemporalGraph) -> ReachabilityTable:
    """Temporal BFS: a message at ``(t, j)`` crosses one ``E_t`` edge (or stays) and moves to time ``t+1``.

    ``R_t = {j}`` and ``R_{k+1} = closed_neighbourhood_{E_k}(R_k) cap V_{k+1}``.
    """
    T = graph.horizon
    adj = [graph.neighbors(k) for k in range(T)]
    active = [set(vs) for vs in graph.active_sets]
    counts = []
    for t in range(T):
        c = np.zeros((graph.sizes[t], T), dtype=np.int64)
        for p, v in enumerate(graph.active_sets[t]):
            reach = {v}
            for k in range(t, T - 1):
                nxt = set(reach)
                for u in reach:
                    nxt |= adj[k][u]
                reach = nxt & active[k + 1]
                c[p, k + 1] = len(reach)
        c.flags.writeable = False
        counts.append(c)
    return ReachabilityTable(tuple(counts))


# -- deviation terms -----------------------------------------------------------------


def ergodic_deviation_term(gamma: MixingMatrix, n_per_t, off_diagonal: bool = False) -> float:
    """``|| N^{1/2} Gamma c ||_2`` with ``c = (1/N_1, ..., 1/N_T)``; ``off_diagonal`` drops the identity part."""
    n = np.asarray(n_per_t, dtype=float)
    if n.shape != (gamma.horizon,):
        raise ValueError("need one layer size per timestamp")
    g = gamma.off_diagonal if off_diagonal else gamma.entries
    return float(np.linalg.norm(np.sqrt(n) * (g @ (1.0 / n))))


def refined_deviation_term(graph: TemporalGraph, reach: ReachabilityTable, k0: float, rho: float, n_per_t=None) -> float:
    """``sqrt( sum_t sum_j ( sum_{k>t} R_{t,j}^k k0 rho^{k-t} / (N_k^2 T) )^2 )``."""
    n = np.asarray(graph.sizes if n_per_t is None else n_per_t, dtype=float)
    T = graph.horizon
    if reach.horizon != T or n.shape != (T,):
        raise ValueError("reachability table and sizes must match the graph")
    lag = np.arange(T)
    total = 0.0
    for t in range(T):
        c = reach.counts[t]
        if c.shape[0] != graph.sizes[t]:
            raise ValueError("reachability table does not match the graph")
        w = np.where(lag > t, k0 * rho ** np.maximum(lag - t, 0), 0.0) / (n**2 * T)
        total += float(np.sum((c @ w) ** 2))
    return float(np.sqrt(total))


# -- mixing certificate ----------------------------------------------------------------


def mixing_certificate(spec: ProcessSpec, t: int, gaps, rollouts: int, seed: int = 0, histories: int = 2) -> list:
    """Per gap ``g``: plug-in TV between the law of ``Z_{t+g,j}`` under pinned histories and ``pi``.

    Layer ``t`` is pinned to ``histories`` different draws; for each the
    maximum over vertices of the plug-in TV is compared with
    ``(k0 / N_{t+g}) rho^g`` plus three standard errors. The standard error is
    the delta-method value ``sqrt(Var(s(X)) / 4n)`` with ``s`` the sign pattern
    of ``p_hat - pi``. Exact TVs from the linear propagation are reported alongside.
    """
    if spec.regime != "uniform_ergodic":
        raise ValueError("the certificate concerns the uniform ergodic regime")
    gaps = [int(g) for g in gaps]
    if min(gaps) < 1 or t + max(gaps) > spec.horizon:
        raise ValueError("gaps must keep t + g within the horizon")
    A, pi = spec.alphabet_size, spec.pi
    layers = []
    for h in range(histories):
        layers.append(simulate_rgp(spec, derive_seed(seed, "cert_history", h)).features[t - 1])
    rows = []
    runs = [continue_batch(spec, layer, t, rollouts, derive_seed(seed, "cert_roll", h), until=t + max(gaps))[0] for h, layer in enumerate(layers)]
    for g in gaps:
        k = t + g
        bound = spec.mixing_k0 / spec.graph.sizes[k - 1] * spec.mixing_rho**g
        worst, worst_se, exact, pair_tv = 0.0, 0.0, 0.0, 0.0
        for layer, feats in zip(layers, runs):
            x = feats[g - 1]
            ex = conditional_marginals(spec, layer, t, k)
            for j in range(x.shape[1]):
                f = np.bincount(x[:, j], minlength=A) / rollouts
                tv = tv_distance(f, pi)
                s = np.sign(f - pi)[x[:, j]]
                se = float(0.5 * s.std() / np.sqrt(rollouts))
                if tv > worst:
                    worst, worst_se = tv, se
                exact = max(exact, tv_distance(ex[j], pi))
        if histories > 1:
            e0 = conditional_marginals(spec, layers[0], t, k)
            e1 = conditional_marginals(spec, layers[1], t, k)
            pair_tv = max(tv_distance(a, b) for a, b in zip(e0, e1))
        rows.append(
            {
                "gap": g,
                "bound": bound,
                "empirical_tv": worst,
                "std_error": worst_se,
                "exact_tv": exact,
                "exact_pair_tv": pair_tv,
                "holds": bool(worst <= bound + 3.0 * worst_se),
            }
        )
    return rows
