"""Vietoris-Rips filtration and persistent homology of a point cloud.

The complex is the flag (clique) complex of the thresholded distance graph:
a simplex enters the filtration at its diameter, the largest pairwise
distance among its vertices. Vertices enter at 0. To report homology up to
dimension k the complex carries simplices up to dimension k+1, since those
are what kill k-dimensional classes.

Persistence is computed over the two-element field by boundary-matrix
column reduction, processing dimensions top-down with the clearing
optimization: a column identified as a pivot row in the pass for dimension
d+1 is a positive simplex, so its own column is skipped in the pass for
dimension d. Columns are stored as Python ints used as bitmasks, with XOR
as column addition.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagrams import INF, PersistenceDiagram
from .embedding import PointCloud
from .errors import ResourceGuardError, ValidationError

DEFAULT_SIMPLEX_CAP = 5_000_000


@dataclass(frozen=True)
class DistanceSpec:
    metric: str = "euclidean"
    threshold: float | None = None  # None: resolve to the enclosing radius

    def __post_init__(self):
        if self.metric != "euclidean":
            raise ValidationError(f"unsupported metric {self.metric!r}")
        if self.threshold is not None and not self.threshold > 0:
            raise ValidationError(f"threshold must be > 0, got {self.threshold}")


@dataclass(frozen=True, eq=False)
class FilteredComplex:
    simplices: tuple   # of (vertex index tuple, filtration value), sorted
    max_dim: int       # maximum homology dimension reported downstream
    threshold: float
    n_vertices: int

    def counts_by_dim(self) -> dict:
        out: dict = {}
        for tup, _ in self.simplices:
            d = len(tup) - 1
            out[d] = out.get(d, 0) + 1
        return out


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def enclosing_radius(cloud: PointCloud) -> float:
    """min over points p of the max distance from p to any other point.

    Truncating the filtration here changes no finite persistence pair: at
    this scale some vertex is adjacent to every other, the flag complex
    becomes a cone over it, and everything above dimension 0 has died.
    """
    if len(cloud) == 0:
        raise ValidationError("empty point cloud")
    D = pairwise_distances(cloud.points)
    return float(D.max(axis=1).min())


def build_rips_filtration(cloud: PointCloud, spec: DistanceSpec = DistanceSpec(),
                          max_dim: int = 2,
                          simplex_cap: int = DEFAULT_SIMPLEX_CAP) -> FilteredComplex:
    """Enumerate all simplices of dimension <= max_dim + 1 with diameter
    <= threshold, each valued at its diameter; vertices valued 0.

    Aborts with a size estimate once the simplex count passes simplex_cap.
    """
    if not 0 <= max_dim <= 3:
        raise ValidationError(f"max_dim must be in 0..3, got {max_dim}")
    if len(cloud) == 0:
        raise ValidationError("empty point cloud")
    n = len(cloud)
    D = pairwise_distances(cloud.points)
    threshold = spec.threshold if spec.threshold is not None else float(
        D.max(axis=1).min()
    )

    adjacent = D <= threshold
    simplices = [((i,), 0.0) for i in range(n)]
    top_card = max_dim + 2  # simplex dimension max_dim+1 has this many vertices

    def expand(base: tuple, cands: np.ndarray, value: float) -> None:
        for v in cands:
            v = int(v)
            val = max(value, float(D[base, v].max()))
            simplices.append((base + (v,), val))
            if len(simplices) > simplex_cap:
                raise ResourceGuardError(
                    f"Rips complex for {n} points at threshold {threshold:.6g} "
                    f"needs more than {simplex_cap} simplices "
                    f"(at least {len(simplices)}); lower the threshold or "
                    f"max_dim, or raise the cap"
                )
            if len(base) + 1 < top_card:
                expand(base + (v,), cands[(cands > v) & adjacent[v, cands]], val)

    for i in range(n):
        expand((i,), np.nonzero(adjacent[i, i + 1:])[0] + i + 1, 0.0)

    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return FilteredComplex(
        simplices=tuple(simplices),
        max_dim=max_dim,
        threshold=threshold,
        n_vertices=n,
    )


def compute_persistence(complex: FilteredComplex) -> list:
    """Persistence diagrams for homology dimensions 0..max_dim.

    Zero-persistence pairs (birth == death) are retained here; serialization
    drops them by default. H0 carries one infinite pair per connected
    component at the threshold.
    """
    simplices = complex.simplices
    index_of = {tup: i for i, (tup, _) in enumerate(simplices)}
    values = [val for _, val in simplices]
    by_dim: dict = {}
    for i, (tup, _) in enumerate(simplices):
        by_dim.setdefault(len(tup) - 1, []).append(i)

    top_dim = max(by_dim)
    pairs: dict = {d: [] for d in range(complex.max_dim + 1)}
    pivot_col: dict = {}   # row index of the low entry -> reduced column bits
    cleared: set = set()

    for d in range(top_dim, 0, -1):
        for j in by_dim.get(d, []):
            if j in cleared:
                continue
            tup = simplices[j][0]
            col = 0
            for k in range(len(tup)):
                col |= 1 << index_of[tup[:k] + tup[k + 1:]]
            while col:
                low = col.bit_length() - 1
                other = pivot_col.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                low = col.bit_length() - 1
                pivot_col[low] = col
                cleared.add(low)
                pairs[d - 1].append((values[low], values[j]))
            elif d <= complex.max_dim:
                pairs[d].append((values[j], INF))

    for j in by_dim.get(0, []):
        if j not in cleared:
            pairs[0].append((values[j], INF))

    return [
        PersistenceDiagram(d, tuple(sorted(pairs[d])))
        for d in range(complex.max_dim + 1)
    ]


def rips_diagrams(cloud: PointCloud, max_dim: int = 2,
                  spec: DistanceSpec = DistanceSpec(),
                  simplex_cap: int = DEFAULT_SIMPLEX_CAP) -> list:
    """Filtration plus reduction in one call; the common entry point."""
    return compute_persistence(
        build_rips_filtration(cloud, spec=spec, max_dim=max_dim,
                              simplex_cap=simplex_cap)
    )
