"""Correlation networks and graph-filtration persistence.

Edges of the network are gated on positivity of both the marginal (Pearson)
and the partial correlation; the stored weight comes from one of the two,
selectable. The filter function puts each edge at its (transformed) weight
and each vertex at the minimum over its incident edges, and persistence is
read off the sublevel sequence of subgraphs. A graph is a 1-complex, so
only H0 and H1 exist, and H1 classes never die: each cycle-closing edge
contributes an infinite bar.

Superlevel filtrations are computed as sublevel filtrations of the negated
filter and reported on the negated axis, which keeps birth <= death; the
vertex rule dualizes to the maximum over incident edges, so endpoints are
always present when their edge enters.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diagrams import INF, PersistenceDiagram
from .errors import SchemaError, ValidationError
from .ingest import TimeSeriesTable

CONDITION_FALLBACK = 1e8
FALLBACK_SHRINKAGE = 0.1


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    vertices: tuple              # ordered channel names
    edges: tuple                 # of (i, j, weight) with i < j

    def __post_init__(self):
        n = len(self.vertices)
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < n):
                raise SchemaError(f"bad edge ({i}, {j}) for {n} vertices")
            if (i, j) in seen:
                raise SchemaError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
            if not (np.isfinite(w) and w > 0):
                raise SchemaError(f"edge ({i}, {j}) weight {w} not finite positive")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True, eq=False)
class GraphFiltration:
    graph: WeightedGraph
    vertex_values: tuple     # f(v), aligned with graph.vertices
    edge_values: tuple       # f(e), aligned with graph.edges
    direction: str           # "sublevel" | "superlevel"


def pearson_correlation_matrix(table: TimeSeriesTable) -> np.ndarray:
    """Sample Pearson correlation of the table's channels.

    Symmetric with unit diagonal, entries clipped into [-1, 1]; a channel
    with zero variance is an error.
    """
    X = table.samples
    if X.shape[0] < 3:
        raise ValidationError(
            f"{table.subject_id!r}: need T >= 3 for correlation, got {X.shape[0]}"
        )
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc * Xc).sum(axis=0))
    dead = np.nonzero(norms == 0.0)[0]
    if dead.size:
        names = [table.channel_names[i] for i in dead[:5]]
        raise ValidationError(
            f"{table.subject_id!r}: zero-variance channel(s) {names}"
        )
    R = (Xc.T @ Xc) / np.outer(norms, norms)
    R = (R + R.T) / 2.0
    R = np.clip(R, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def partial_correlation_matrix(corr: np.ndarray,
                               shrinkage: float | None = None) -> np.ndarray:
    """Partial correlations from the inverse of the (shrunk) correlation.

    rho_ij = -Omega_ij / sqrt(Omega_ii * Omega_jj) with
    Omega = inv((1 - lambda) * corr + lambda * I). shrinkage=None picks
    lambda = 0 but falls back to 0.1 with a warning when the condition
    number exceeds 1e8; an explicit shrinkage is used as given, and a
    singular matrix at lambda = 0 is an error suggesting shrinkage.
    """
    corr = np.asarray(corr, dtype=np.float64)
    n = corr.shape[0]
    if corr.ndim != 2 or corr.shape[1] != n:
        raise SchemaError(f"correlation matrix must be square, got {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12):
        raise SchemaError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
        raise SchemaError("correlation matrix must have a unit diagonal")
    if n <= 2:
        # empty conditioning set: partial and marginal coincide
        return corr.copy()

    lam = shrinkage
    if lam is None:
        lam = 0.0
        cond = np.linalg.cond(corr)
        if not np.isfinite(cond) or cond > CONDITION_FALLBACK:
            warnings.warn(
                f"correlation matrix condition number {cond:.3g} exceeds "
                f"{CONDITION_FALLBACK:.0e}; falling back to shrinkage "
                f"{FALLBACK_SHRINKAGE}", RuntimeWarning, stacklevel=2,
            )
            lam = FALLBACK_SHRINKAGE
    elif not 0.0 <= lam < 1.0:
        raise ValidationError(f"shrinkage must be in [0, 1), got {lam}")

    shrunk = (1.0 - lam) * corr + lam * np.eye(n) if lam else corr
    try:
        omega = np.linalg.inv(shrunk)
    except np.linalg.LinAlgError:
        raise ValidationError(
            "correlation matrix is singular; pass a shrinkage in (0, 1)"
        ) from None
    if lam == 0.0 and shrinkage is not None:
        cond = np.linalg.cond(shrunk)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValidationError(
                f"correlation matrix is numerically singular "
                f"(condition number {cond:.3g}); pass a shrinkage in (0, 1)"
            )
    d = np.diag(omega)
    rho = -omega / np.sqrt(np.outer(d, d))
    rho = (rho + rho.T) / 2.0
    np.fill_diagonal(rho, 1.0)
    return rho


def build_positive_graph(marginal: np.ndarray, partial: np.ndarray,
                         weight_source: str = "marginal",
                         vertex_names=None) -> WeightedGraph:
    """Keep edge (i, j) only when both correlations are positive there.

    The stored weight is the selected source's value; vertices that lose
    every edge stay in the graph as isolated vertices.
    """
    marginal = np.asarray(marginal, dtype=np.float64)
    partial = np.asarray(partial, dtype=np.float64)
    if marginal.shape != partial.shape or marginal.ndim != 2:
        raise SchemaError(
            f"matrix shapes differ: {marginal.shape} vs {partial.shape}"
        )
    if weight_source not in ("marginal", "partial"):
        raise ValidationError(f"unknown weight source {weight_source!r}")
    n = marginal.shape[0]
    if vertex_names is None:
        vertex_names = tuple(f"v{i}" for i in range(n))
    else:
        vertex_names = tuple(vertex_names)
        if len(vertex_names) != n:
            raise SchemaError(
                f"{len(vertex_names)} names for {n} vertices"
            )
    source = marginal if weight_source == "marginal" else partial
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if marginal[i, j] > 0.0 and partial[i, j] > 0.0:
                edges.append((i, j, float(source[i, j])))
    return WeightedGraph(vertices=vertex_names, edges=tuple(edges))


def graph_sublevel_filtration(graph: WeightedGraph,
                              transform: str = "one_minus_w",
                              direction: str = "sublevel") -> GraphFiltration:
    """Filter values for a graph: edges at (1 - w) or raw w, vertices at the
    min over incident edges, isolated vertices at 0.

    direction="superlevel" negates all values (and so the vertex rule
    becomes the max over incident edges on the original axis).
    """
    if transform not in ("one_minus_w", "raw"):
        raise ValidationError(f"unknown transform {transform!r}")
    if direction not in ("sublevel", "superlevel"):
        raise ValidationError(f"unknown direction {direction!r}")
    edge_values = []
    for i, j, w in graph.edges:
        if transform == "one_minus_w":
            if w > 1.0:
                raise ValidationError(
                    f"edge ({i}, {j}) weight {w} > 1 under one_minus_w"
                )
            val = 1.0 - w
        else:
            val = w
        edge_values.append(-val if direction == "superlevel" else val)
    vertex_values = [0.0] * graph.n_vertices
    incident: dict = {}
    for (i, j, _), val in zip(graph.edges, edge_values):
        incident.setdefault(i, []).append(val)
        incident.setdefault(j, []).append(val)
    for v, vals in incident.items():
        vertex_values[v] = min(vals)
    return GraphFiltration(
        graph=graph,
        vertex_values=tuple(vertex_values),
        edge_values=tuple(edge_values),
        direction=direction,
    )


def graph_persistence(filt: GraphFiltration):
    """H0 and H1 diagrams of a filtered graph.

    H0 runs union-find with the elder rule: on a merge the component with
    the older birth survives, ties broken by the smaller vertex index, and
    the younger birth is paired with the edge value. An edge inside one
    component closes an independent cycle and births an H1 class that never
    dies (infinite death; cap downstream if finite lifespans are needed).
    """
    n = filt.graph.n_vertices
    parent = list(range(n))
    birth = list(filt.vertex_values)            # birth value per root
    birth_vertex = list(range(n))               # tie-break index per root

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    order = sorted(
        range(len(filt.edge_values)),
        key=lambda e: (filt.edge_values[e], filt.graph.edges[e][:2]),
    )
    h0 = []
    h1 = []
    for e in order:
        i, j, _ = filt.graph.edges[e]
        val = filt.edge_values[e]
        ri, rj = find(i), find(j)
        if ri == rj:
            h1.append((val, INF))
            continue
        if (birth[ri], birth_vertex[ri]) <= (birth[rj], birth_vertex[rj]):
            keep, kill = ri, rj
        else:
            keep, kill = rj, ri
        h0.append((birth[kill], val))
        parent[kill] = keep
    for v in range(n):
        if find(v) == v:
            h0.append((birth[v], INF))
    return (
        PersistenceDiagram(0, tuple(sorted(h0))),
        PersistenceDiagram(1, tuple(sorted(h1))),
    )


def connectivity_graph(table: TimeSeriesTable, weight_source: str = "marginal",
                       shrinkage: float | None = None) -> WeightedGraph:
    """Positively-gated correlation graph straight from a table."""
    marginal = pearson_correlation_matrix(table)
    partial = partial_correlation_matrix(marginal, shrinkage=shrinkage)
    return build_positive_graph(marginal, partial, weight_source=weight_source,
                                vertex_names=table.channel_names)


def graph_to_dict(graph: WeightedGraph) -> dict:
    return {
        "vertices": list(graph.vertices),
        "edges": [[i, j, w] for i, j, w in graph.edges],
    }


def graph_from_dict(obj: dict) -> WeightedGraph:
    try:
        return WeightedGraph(
            vertices=tuple(obj["vertices"]),
            edges=tuple((int(i), int(j), float(w)) for i, j, w in obj["edges"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"not a graph object: {exc}") from exc
