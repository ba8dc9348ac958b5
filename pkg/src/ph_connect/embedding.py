"""Sliding-window (delay) embedding of a 1-D signal into (M+1)-space.

With the defaults M=2, tau=1, sample k maps to the 3-vector
(x[k], x[k+1], x[k+2]), so the window spans 3 samples and a length-T
signal yields exactly T - M*tau points.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ParseError, SchemaError, ValidationError


@dataclass(frozen=True)
class EmbeddingParams:
    m: int = 2    # embedding dimension; points live in R^(m+1)
    tau: int = 1  # time lag in samples

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError(f"embedding dimension must be >= 1, got {self.m}")
        if self.tau < 1:
            raise ValidationError(f"time lag must be >= 1, got {self.tau}")

    @property
    def window(self) -> int:
        return self.m * self.tau + 1


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray  # (n_points, m+1) float64
    source_channel: str
    m: int = 2
    tau: int = 1

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[1] != self.m + 1:
            raise SchemaError(
                f"point array shape {self.points.shape} does not match m={self.m}"
            )
        if not np.isfinite(self.points).all():
            raise ParseError(f"cloud {self.source_channel!r}: non-finite coordinates")
        self.points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]


def sliding_window_embed(signal, params: EmbeddingParams = EmbeddingParams(),
                         channel: str = "", normalize: bool = False) -> PointCloud:
    """Delay-embed a signal; point k is (x[k], x[k+tau], ..., x[k+m*tau]).

    normalize applies zero-mean unit-variance scaling to the signal first
    (off by default). Duplicate points are retained.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError(f"signal must be 1-D, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ParseError(f"channel {channel!r}: non-finite samples")
    T = x.shape[0]
    n_points = T - params.m * params.tau
    if n_points < 1:
        raise InsufficientDataError(
            f"channel {channel!r}: length {T} is shorter than the "
            f"{params.window}-sample window"
        )
    if normalize:
        sd = x.std()
        if sd == 0.0:
            raise ValidationError(f"channel {channel!r}: zero variance, cannot normalize")
        x = (x - x.mean()) / sd
    cols = [x[i * params.tau: i * params.tau + n_points] for i in range(params.m + 1)]
    return PointCloud(
        points=np.column_stack(cols),
        source_channel=channel,
        m=params.m,
        tau=params.tau,
    )


def cloud_to_dict(cloud: PointCloud) -> dict:
    return {
        "channel": cloud.source_channel,
        "M": cloud.m,
        "tau": cloud.tau,
        "points": [[float(v) for v in row] for row in cloud.points],
    }


def cloud_from_dict(obj: dict) -> PointCloud:
    try:
        m = int(obj["M"])
        raw = obj["points"]
        points = (np.array(raw, dtype=np.float64) if raw
                  else np.zeros((0, m + 1), dtype=np.float64))
        return PointCloud(
            points=points,
            source_channel=str(obj["channel"]),
            m=m,
            tau=int(obj["tau"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"not a point-cloud object: {exc}") from exc


def save_cloud(cloud: PointCloud, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cloud_to_dict(cloud), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_cloud(path) -> PointCloud:
    with open(path, encoding="utf-8") as fh:
        return cloud_from_dict(json.load(fh))
