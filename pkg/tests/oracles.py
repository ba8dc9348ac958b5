"""Independent reference implementations used to pin expected values.

Everything here is deliberately written from scratch with different
algorithms and data layouts than the package: full-matrix left-to-right
boundary reduction without clearing, Prim's MST, exhaustive matching
enumeration, exhaustive subset enumeration for the rank-sum test, and a
Kruskal-based graph-filtration summary. Slow but obviously correct.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

INF = math.inf


# ----------------------------------------------------------------------
# naive Rips persistence: enumerate all subsets, reduce the full boundary
# matrix column by column with no optimizations
# ----------------------------------------------------------------------

def naive_rips_persistence(points: np.ndarray, max_dim: int,
                           threshold: float | None = None) -> list:
    """Diagrams for dims 0..max_dim, zero-persistence pairs removed."""
    n = len(points)
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    if threshold is None:
        threshold = min(max(dist[i]) for i in range(n))

    simplices = []
    for card in range(1, max_dim + 3):
        for combo in itertools.combinations(range(n), card):
            if card == 1:
                simplices.append((combo, 0.0))
                continue
            diam = max(dist[i, j] for i, j in itertools.combinations(combo, 2))
            if diam <= threshold:
                simplices.append((combo, diam))
    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    index = {tup: i for i, (tup, _) in enumerate(simplices)}

    columns = []
    for tup, _ in simplices:
        if len(tup) == 1:
            columns.append(set())
        else:
            columns.append({index[f] for f in itertools.combinations(tup, len(tup) - 1)})
    lows: dict = {}
    pair_of: dict = {}
    for j in range(len(columns)):
        col = columns[j]
        while col and max(col) in lows:
            col = col ^ columns[lows[max(col)]]
        columns[j] = col
        if col:
            lows[max(col)] = j
            pair_of[max(col)] = j

    diagrams: list = [[] for _ in range(max_dim + 1)]
    for i, (tup, value) in enumerate(simplices):
        dim = len(tup) - 1
        if i in pair_of:
            death = simplices[pair_of[i]][1]
            if dim <= max_dim and death > value:
                diagrams[dim].append((value, death))
        elif not columns[i] and dim <= max_dim:
            diagrams[dim].append((value, INF))
    return [sorted(d) for d in diagrams]


# ----------------------------------------------------------------------
# Euclidean MST via Prim
# ----------------------------------------------------------------------

def prim_mst_lengths(points: np.ndarray) -> list:
    n = len(points)
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    in_tree = [0]
    best = dist[0].copy()
    lengths = []
    for _ in range(n - 1):
        best[in_tree] = np.inf
        nxt = int(np.argmin(best))
        lengths.append(float(best[nxt]))
        in_tree.append(nxt)
        best = np.minimum(best, dist[nxt])
    return sorted(lengths)


# ----------------------------------------------------------------------
# GF(2) rank by plain Gaussian elimination (for Euler bookkeeping)
# ----------------------------------------------------------------------

def gf2_rank(rows: list) -> int:
    rows = [int(r) for r in rows if r]
    rank = 0
    while rows:
        pivot = rows.pop()
        if not pivot:
            continue
        rank += 1
        bit = 1 << (pivot.bit_length() - 1)
        rows = [r ^ pivot if r & bit else r for r in rows]
        rows = [r for r in rows if r]
    return rank


# ----------------------------------------------------------------------
# exhaustive diagram matching
# ----------------------------------------------------------------------

def _ground(x, y, q):
    db, dd = abs(x[0] - y[0]), abs(x[1] - y[1])
    return max(db, dd) if math.isinf(q) else (db ** q + dd ** q) ** (1 / q)


def _to_diag(x, q):
    half = (x[1] - x[0]) / 2
    return half if math.isinf(q) else half * 2 ** (1 / q)


def brute_wasserstein(a: list, b: list, p: float, q: float) -> float:
    best = INF
    m, n = len(a), len(b)
    for k in range(min(m, n) + 1):
        for sub_a in itertools.combinations(range(m), k):
            for sub_b in itertools.permutations(range(n), k):
                cost = 0.0
                for i, j in zip(sub_a, sub_b):
                    cost += _ground(a[i], b[j], q) ** p
                for i in set(range(m)) - set(sub_a):
                    cost += _to_diag(a[i], q) ** p
                for j in set(range(n)) - set(sub_b):
                    cost += _to_diag(b[j], q) ** p
                best = min(best, cost)
    return best ** (1 / p)


def brute_bottleneck(a: list, b: list, q: float) -> float:
    best = INF
    m, n = len(a), len(b)
    for k in range(min(m, n) + 1):
        for sub_a in itertools.combinations(range(m), k):
            for sub_b in itertools.permutations(range(n), k):
                cost = 0.0
                for i, j in zip(sub_a, sub_b):
                    cost = max(cost, _ground(a[i], b[j], q))
                for i in set(range(m)) - set(sub_a):
                    cost = max(cost, _to_diag(a[i], q))
                for j in set(range(n)) - set(sub_b):
                    cost = max(cost, _to_diag(b[j], q))
                best = min(best, cost)
    return best


# ----------------------------------------------------------------------
# exhaustive two-sided rank-sum p-value
# ----------------------------------------------------------------------

def brute_rank_sum_p(x: list, y: list) -> float:
    pooled = sorted(x + y)
    n1, n = len(x), len(x) + len(y)
    rank_of = {v: i + 1 for i, v in enumerate(pooled)}
    w_obs = sum(rank_of[v] for v in x)
    sums = [sum(c) for c in itertools.combinations(range(1, n + 1), n1)]
    le = sum(1 for w in sums if w <= w_obs)
    ge = sum(1 for w in sums if w >= w_obs)
    return min(1.0, 2 * min(le, ge) / len(sums))


def subset_with_sum(n: int, k: int, s: int) -> list:
    """A strictly increasing k-subset of 1..n with the given sum."""
    base = list(range(1, k + 1))
    extra = s - sum(base)
    for i in reversed(range(k)):
        room = (n - (k - 1 - i)) - base[i]
        take = min(room, extra)
        base[i] += take
        extra -= take
    if extra != 0:
        raise ValueError(f"sum {s} not achievable for {k}-subset of 1..{n}")
    return base


# ----------------------------------------------------------------------
# graph filtration summary via Kruskal (pairing-free invariants)
# ----------------------------------------------------------------------

def kruskal_summary(n_vertices: int, edges: list) -> dict:
    """Merge-edge values, cycle-edge values, and component count for a
    filtration given as (value, i, j) edges (vertices enter before their
    edges). Independent of any elder-rule pairing choices."""
    parent = list(range(n_vertices))

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    merges, cycles = [], []
    for value, i, j in sorted(edges):
        ri, rj = find(i), find(j)
        if ri == rj:
            cycles.append(value)
        else:
            parent[ri] = rj
            merges.append(value)
    components = len({find(v) for v in range(n_vertices)})
    return {"merge_values": sorted(merges), "cycle_values": sorted(cycles),
            "components": components}


# ----------------------------------------------------------------------
# plane + conic fit residuals (for the sinusoid embedding check)
# ----------------------------------------------------------------------

def plane_fit_residual(points: np.ndarray) -> float:
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return float(np.abs(centered @ normal).max())


def conic_fit_residual(points: np.ndarray) -> tuple:
    """Max algebraic residual of the best conic through the points after
    projecting to their principal plane, plus the conic discriminant
    (negative for an ellipse)."""
    centered = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    uv = centered @ vt[:2].T
    u, v = uv[:, 0], uv[:, 1]
    design = np.column_stack([u * u, u * v, v * v, u, v, np.ones_like(u)])
    _, _, wt = np.linalg.svd(design, full_matrices=False)
    coef = wt[-1]
    scale = np.abs(design).max() * np.linalg.norm(coef)
    residual = float(np.abs(design @ coef).max() / scale)
    a, b, c = coef[0], coef[1], coef[2]
    return residual, float(b * b - 4 * a * c)
