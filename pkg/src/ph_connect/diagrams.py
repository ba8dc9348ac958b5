"""Persistence diagrams and their JSON form.

A diagram is a multiset of (birth, death) pairs for one homology dimension;
death may be math.inf for classes that never die inside the filtration.
Serialized form: {"dimension": k, "pairs": [[b, d], ...]} with infinite
deaths written as the string "inf".
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import SchemaError

INF = math.inf


@dataclass(frozen=True)
class PersistenceDiagram:
    dimension: int
    pairs: tuple = field(default_factory=tuple)  # tuple of (birth, death)

    def __post_init__(self):
        for b, d in self.pairs:
            if not (b <= d):
                raise SchemaError(f"diagram pair ({b}, {d}) has birth > death")

    @property
    def finite_pairs(self):
        return tuple((b, d) for b, d in self.pairs if math.isfinite(d))

    @property
    def infinite_pairs(self):
        return tuple((b, d) for b, d in self.pairs if math.isinf(d))

    def without_zero_pairs(self) -> "PersistenceDiagram":
        return PersistenceDiagram(
            self.dimension, tuple((b, d) for b, d in self.pairs if d > b)
        )

    def lifespans(self, cap: float | None = None):
        """Death minus birth per pair; infinite deaths replaced by cap.

        Raises if infinite pairs are present and no cap is given.
        """
        out = []
        for b, d in self.pairs:
            if math.isinf(d):
                if cap is None:
                    raise SchemaError(
                        "diagram has infinite deaths; a cap is required"
                    )
                d = cap
            out.append(d - b)
        return out


def diagram_to_dict(diagram: PersistenceDiagram, drop_zero: bool = True) -> dict:
    """JSON-ready dict; zero-persistence pairs are dropped by default."""
    src = diagram.without_zero_pairs() if drop_zero else diagram
    pairs = [[b, "inf" if math.isinf(d) else d] for b, d in src.pairs]
    return {"dimension": diagram.dimension, "pairs": pairs}


def diagram_from_dict(obj: dict) -> PersistenceDiagram:
    try:
        dim = int(obj["dimension"])
        raw = obj["pairs"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"not a diagram object: {exc}") from exc
    pairs = []
    for entry in raw:
        b, d = entry
        pairs.append((float(b), INF if d == "inf" else float(d)))
    return PersistenceDiagram(dim, tuple(pairs))


def save_diagram(diagram: PersistenceDiagram, path, drop_zero: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(diagram_to_dict(diagram, drop_zero=drop_zero), fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


def load_diagram(path) -> PersistenceDiagram:
    with open(path, encoding="utf-8") as fh:
        return diagram_from_dict(json.load(fh))
