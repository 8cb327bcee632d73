"""Brute-force reference implementations used by the tests.

These are deliberately naive (explicit enumeration, plain python loops) and
share no code with the package beyond its data types.
"""

import itertools
import math

import numpy as np


def exact_rademacher_entry(table, x, T):
    """``E_sigma max_h sum_j sigma_j h(x_j) / (T N)`` by enumerating every sign vector."""
    table = np.asarray(table, dtype=float)
    n = len(x)
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    values = table[:, np.asarray(x)]
    return float((signs @ values.T).max(axis=1).mean()) / (T * n)


def labelings(outputs_fn, points):
    """Set of sign tuples realised on ``points``; ``outputs_fn(point) -> per-member outputs``."""
    cols = [tuple(outputs_fn(p)) for p in points]
    members = len(cols[0]) if cols else 0
    return {tuple(1 if cols[j][m] > 0 else -1 for j in range(len(points))) for m in range(members)}


def threshold_labelings(thetas, points, below=True):
    out = set()
    for th in thetas:
        out.add(tuple(1 if ((p < th) if below else (p > th)) else -1 for p in points))
    return out


def interval_labelings(endpoints, points):
    out = set()
    for a, b in itertools.combinations(sorted(endpoints), 2):
        out.add(tuple(1 if a < p < b else -1 for p in points))
    return out


def vc_brute(realise, grid):
    """Largest ``k`` such that some ``k``-subset of ``grid`` has all ``2^k`` labelings."""
    best = 0
    for k in range(1, len(grid) + 1):
        if any(len(realise(sub)) == 2**k for sub in itertools.combinations(grid, k)):
            best = k
        else:
            break
    return best


def min_cover_brute(dist, eps):
    m = len(dist)
    for k in range(1, m + 1):
        for centres in itertools.combinations(range(m), k):
            if all(any(dist[i][c] <= eps for c in centres) for i in range(m)):
                return k
    return m


def max_packing_brute(dist, eps):
    m = len(dist)
    for k in range(m, 0, -1):
        for pts in itertools.combinations(range(m), k):
            if all(dist[a][b] >= eps for a, b in itertools.combinations(pts, 2)):
                return k
    return 1


def kernel_law(prev_values, parents, eps, beta, pi):
    """Law of one vertex given its parents' values, written straight from the mixture definition."""
    pi = np.asarray(pi, dtype=float)
    law = (1 - eps) * pi
    if parents:
        copy = np.zeros_like(pi)
        for p in parents:
            copy[prev_values[p]] += 1.0 / len(parents)
        law = law + eps * (beta * copy + (1 - beta) * pi)
    else:
        law = law + eps * pi
    return law


def layer_law(prev_values, parent_lists, eps, beta, pi):
    """Joint law of a whole layer given the previous one: dict tuple -> prob (same-layer independence)."""
    laws = [kernel_law(prev_values, ps, eps, beta, pi) for ps in parent_lists]
    out = {}
    for vals in itertools.product(range(len(pi)), repeat=len(parent_lists)):
        out[vals] = float(np.prod([laws[i][v] for i, v in enumerate(vals)]))
    return out


def conditional_vertex_laws(pinned_layer, t, k, parents_by_layer, eps_by_layer, beta, pi):
    """Exact laws of every vertex of layer ``k`` given layer ``t`` (1-based) by full enumeration."""
    dist = {tuple(pinned_layer): 1.0}
    for s in range(t, k):
        nxt = {}
        for prev, w in dist.items():
            for vals, q in layer_law(prev, parents_by_layer[s], eps_by_layer[s], beta, pi).items():
                nxt[vals] = nxt.get(vals, 0.0) + w * q
        dist = nxt
    n = len(next(iter(dist)))
    laws = np.zeros((n, len(pi)))
    for vals, w in dist.items():
        for j, v in enumerate(vals):
            laws[j, v] += w
    return laws


def gamma_brute(t, k, layer_size, parents_by_layer, eps_by_layer, beta, pi):
    """``sum_j sup TV`` over every pinned layer ``t`` and pair of letters for vertex ``j``."""
    A = len(pi)
    total = 0.0
    for j in range(layer_size):
        best = 0.0
        for base in itertools.product(range(A), repeat=layer_size):
            for a, b in itertools.combinations(range(A), 2):
                za, zb = list(base), list(base)
                za[j], zb[j] = a, b
                la = conditional_vertex_laws(za, t, k, parents_by_layer, eps_by_layer, beta, pi)[j]
                lb = conditional_vertex_laws(zb, t, k, parents_by_layer, eps_by_layer, beta, pi)[j]
                best = max(best, 0.5 * float(np.abs(la - lb).sum()))
        total += best
    return total


def reach_brute(active_sets, edges, t, v, k):
    """Vertices of layer ``k`` reachable from ``(t, v)`` by enumerating explicit temporal walks."""
    T = len(active_sets)
    frontier = {v}
    for s in range(t - 1, k - 1):
        nxt = set()
        for u in frontier:
            nxt.add(u)
            for a, b in edges[s]:
                if a == u:
                    nxt.add(b)
                if b == u:
                    nxt.add(a)
        frontier = {u for u in nxt if u in set(active_sets[s + 1])}
    assert k <= T
    return frontier


def threshold_erm_scan(x, y, T):
    """Best per-timestamp risk of 'predict + below theta' over all N+1 splits of the sorted points."""
    order = np.argsort(x, kind="stable")
    ys = np.asarray(y)[order]
    n = len(ys)
    best = math.inf
    for split in range(n + 1):
        pred = np.array([1] * split + [-1] * (n - split))
        best = min(best, float(np.sum(pred != ys)) / (T * n))
    return best
