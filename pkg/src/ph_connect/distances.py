"""Wasserstein and bottleneck distances between persistence diagrams.

A partial matching may leave points unmatched; those pay the q-norm
distance to their orthogonal projection onto the diagonal, which is
(death - birth) / 2 * 2^(1/q) (so (d - b) / 2 for q = infinity). The
p-Wasserstein distance is the minimum over matchings of the l^p norm of
all pair costs; it is computed exactly by an optimal assignment over the
two diagrams augmented with each other's diagonal projections. The
bottleneck distance is the p -> infinity limit: the smallest candidate
cost for which a perfect matching using only cheaper-or-equal pairs
exists, found by binary search with bipartite feasibility checks.

Infinite-death pairs are dropped before matching by default; the "cap"
policy substitutes a finite death instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .diagrams import PersistenceDiagram
from .errors import ValidationError


@dataclass(frozen=True)
class WassersteinParams:
    p: float = 2.0           # matching-cost exponent, >= 1 or math.inf
    q: float = math.inf      # ground-norm exponent on the plane
    essential: str = "drop"  # "drop" | "cap"
    cap: float | None = None

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValidationError(f"p must be >= 1, got {self.p}")
        if not (self.q >= 1.0):
            raise ValidationError(f"q must be >= 1, got {self.q}")
        if self.essential not in ("drop", "cap"):
            raise ValidationError(f"unknown essential policy {self.essential!r}")
        if self.essential == "cap" and (self.cap is None or not self.cap > 0):
            raise ValidationError("cap policy requires a positive cap value")


def _plane_cost(x, y, q: float) -> float:
    db = abs(x[0] - y[0])
    dd = abs(x[1] - y[1])
    if math.isinf(q):
        return max(db, dd)
    return (db ** q + dd ** q) ** (1.0 / q)


def _cross_costs(a: np.ndarray, b: np.ndarray, q: float) -> np.ndarray:
    db = np.abs(a[:, 0, None] - b[None, :, 0])
    dd = np.abs(a[:, 1, None] - b[None, :, 1])
    if math.isinf(q):
        return np.maximum(db, dd)
    return (db ** q + dd ** q) ** (1.0 / q)


def _diagonal_cost(x, q: float) -> float:
    half = (x[1] - x[0]) / 2.0
    if math.isinf(q):
        return half
    return half * 2.0 ** (1.0 / q)


def _diagonal_costs(a: np.ndarray, q: float) -> np.ndarray:
    half = (a[:, 1] - a[:, 0]) / 2.0
    if math.isinf(q):
        return half
    return half * 2.0 ** (1.0 / q)


def _resolve_essential(diagram: PersistenceDiagram, essential: str,
                       cap: float | None):
    # zero-persistence pairs sit on the diagonal and never change any
    # matching cost, so they are filtered up front
    if essential == "drop":
        return [(b, d) for b, d in diagram.finite_pairs if d > b]
    out = []
    for b, d in diagram.pairs:
        if math.isinf(d):
            d = cap
        if d > cap or b > cap:
            raise ValidationError(
                f"pair ({b}, {d}) exceeds the essential cap {cap}"
            )
        if d > b:
            out.append((b, d))
    return out


def _check_dims(d1: PersistenceDiagram, d2: PersistenceDiagram) -> None:
    if d1.dimension != d2.dimension:
        raise ValidationError(
            f"dimension mismatch: {d1.dimension} vs {d2.dimension}"
        )


def wasserstein_distance(d1: PersistenceDiagram, d2: PersistenceDiagram,
                         params: WassersteinParams = WassersteinParams()) -> float:
    """Exact p-Wasserstein distance with ground q-norm between two diagrams."""
    _check_dims(d1, d2)
    a = _resolve_essential(d1, params.essential, params.cap)
    b = _resolve_essential(d2, params.essential, params.cap)
    if math.isinf(params.p):
        return _bottleneck_points(a, b, params.q)
    # evaluate both argument orders identically so the metric is exactly
    # symmetric down to floating-point rounding
    if sorted(b) < sorted(a):
        a, b = b, a
    m, n = len(a), len(b)
    if m == 0 and n == 0:
        return 0.0
    A = np.array(a, dtype=np.float64).reshape(m, 2)
    B = np.array(b, dtype=np.float64).reshape(n, 2)
    size = m + n
    cost = np.zeros((size, size))
    if m and n:
        cost[:m, :n] = _cross_costs(A, B, params.q)
    if m:
        cost[:m, n:] = np.inf
        cost[np.arange(m), n + np.arange(m)] = _diagonal_costs(A, params.q)
    if n:
        cost[m:, :n] = np.inf
        cost[m + np.arange(n), np.arange(n)] = _diagonal_costs(B, params.q)
    powered = cost ** params.p if params.p != 1.0 else cost
    rows, cols = linear_sum_assignment(powered)
    total = float(powered[rows, cols].sum())
    return total ** (1.0 / params.p) if params.p != 1.0 else total


def bottleneck_distance(d1: PersistenceDiagram, d2: PersistenceDiagram,
                        q: float = math.inf) -> float:
    """Min over matchings of the max single-pair cost (the p -> inf limit).

    Infinite-death pairs are dropped first, matching the default
    essential policy of the Wasserstein computation.
    """
    _check_dims(d1, d2)
    if not q >= 1.0:
        raise ValidationError(f"q must be >= 1, got {q}")
    a = [(b_, d_) for b_, d_ in d1.finite_pairs if d_ > b_]
    b = [(b_, d_) for b_, d_ in d2.finite_pairs if d_ > b_]
    return _bottleneck_points(a, b, q)


def _covering_matching_exists(adj_rows: dict, forced: np.ndarray,
                              n_right: int) -> bool:
    """Can a matching in the bipartite graph cover every forced left vertex?

    Augmenting paths only ever start or pass through forced vertices, so
    adjacency is needed for those alone.
    """
    match_right = [-1] * n_right

    def augment(u: int, seen: list) -> bool:
        for v in adj_rows[u]:
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] == -1 or augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in forced:
        u = int(u)
        if not augment(u, [False] * n_right):
            return False
    return True


def _bottleneck_points(a: list, b: list, q: float) -> float:
    if sorted(b) < sorted(a):
        a, b = b, a
    m, n = len(a), len(b)
    if m == 0 and n == 0:
        return 0.0
    A = np.array(a, dtype=np.float64).reshape(m, 2)
    B = np.array(b, dtype=np.float64).reshape(n, 2)
    cross = (_cross_costs(A, B, q) if m and n
             else np.zeros((m, n)))
    diag_a = _diagonal_costs(A, q)
    diag_b = _diagonal_costs(B, q)
    candidates = np.unique(np.concatenate(
        [cross.ravel(), diag_a, diag_b, [0.0]]
    ))

    def feasible(c: float) -> bool:
        # a point whose diagonal cost is within c may always retire to the
        # diagonal, so only the others are forced to find a real partner;
        # by the Mendelsohn-Dulmage theorem a matching covering both forced
        # sets exists iff one exists for each side separately
        ok = cross <= c
        forced_a = np.nonzero(diag_a > c)[0]
        forced_b = np.nonzero(diag_b > c)[0]
        if forced_a.size and (n == 0 or not ok[forced_a].any(axis=1).all()):
            return False
        if forced_b.size and (m == 0 or not ok[:, forced_b].any(axis=0).all()):
            return False
        rows = {int(u): np.nonzero(ok[u])[0] for u in forced_a}
        if not _covering_matching_exists(rows, forced_a, n):
            return False
        cols = {int(v): np.nonzero(ok[:, v])[0] for v in forced_b}
        return _covering_matching_exists(cols, forced_b, m)

    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])
