"""Loading of time-series tables, network atlases, and synthetic cohorts.

One CSV per subject (header row of channel names, one row per timepoint);
group labels come from a separate manifest CSV (subject_id,group). An atlas
is a JSON object mapping network name to an ordered list of channel names.
Non-finite samples are rejected at ingestion, never imputed.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientDataError, ParseError, SchemaError, ValidationError

# Node counts of the six default networks over the 160-region parcellation.
DEFAULT_NETWORK_SIZES = {
    "CB": 18, "CO": 32, "DMN": 34, "FP": 21, "OP": 22, "SM": 33,
}

# Locked constants of the synthetic recipes; changing any of these changes
# every downstream expected value, so they are module-level and documented.
SYNTH_CHANNELS = 6
SYNTH_PERIOD = 12.0
SYNTH_AMPLITUDE = 1.0
SYNTH_NOISE_FRAC = 0.1
SYNTH_BLOCK_SIZE = 3
SYNTH_BLOCK_GAIN = 0.8


@dataclass(frozen=True, eq=False)
class TimeSeriesTable:
    channel_names: tuple
    samples: np.ndarray  # (T, n) float64
    subject_id: str
    group_label: str | None = None

    def __post_init__(self):
        names = self.channel_names
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate channel names in {self.subject_id!r}")
        if self.samples.ndim != 2 or self.samples.shape[1] != len(names):
            raise SchemaError(
                f"{self.subject_id!r}: {self.samples.shape[1] if self.samples.ndim == 2 else '?'}"
                f" columns vs {len(names)} channel names"
            )
        if self.samples.shape[0] < 3:
            raise InsufficientDataError(
                f"{self.subject_id!r}: need at least 3 timepoints, got {self.samples.shape[0]}"
            )
        if not np.isfinite(self.samples).all():
            raise ParseError(f"{self.subject_id!r}: non-finite samples")
        self.samples.setflags(write=False)

    @property
    def n_timepoints(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    def channel(self, name: str) -> np.ndarray:
        try:
            idx = self.channel_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown channel {name!r}") from None
        return self.samples[:, idx]


@dataclass(frozen=True)
class NetworkAtlas:
    networks: dict  # network name -> ordered tuple of channel names

    def channels(self, network: str) -> tuple:
        if network not in self.networks:
            raise ValidationError(
                f"unknown network {network!r}; atlas has {sorted(self.networks)}"
            )
        return tuple(self.networks[network])

    def all_channels(self) -> tuple:
        out = []
        for chans in self.networks.values():
            out.extend(chans)
        return tuple(out)


@dataclass(frozen=True)
class Cohort:
    subjects: tuple  # of TimeSeriesTable
    atlas: NetworkAtlas

    def __post_init__(self):
        ids = [s.subject_id for s in self.subjects]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate subject ids in cohort")
        for subj in self.subjects:
            missing = [c for c in self.atlas.all_channels()
                       if c not in subj.channel_names]
            if missing:
                raise SchemaError(
                    f"subject {subj.subject_id!r} missing channels {missing[:5]}"
                )

    def labels(self) -> dict:
        return {s.subject_id: s.group_label for s in self.subjects}


def load_timeseries(path, fmt: str = "csv", subject_id: str | None = None,
                    group_label: str | None = None) -> TimeSeriesTable:
    """Parse one subject CSV into a validated table. Row order is preserved."""
    if fmt != "csv":
        raise ValidationError(f"unsupported format {fmt!r}")
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InsufficientDataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise SchemaError(f"{path}: duplicate header names {dupes}")
        rows = []
        for rownum, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}"
                )
            values = []
            for colnum, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {rownum}, column {header[colnum]!r}: "
                        f"cannot parse {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ParseError(
                        f"{path}: row {rownum}, column {header[colnum]!r}: "
                        f"non-finite value {cell!r}"
                    )
                values.append(v)
            rows.append(values)
    if len(rows) < 3:
        raise InsufficientDataError(
            f"{path}: need at least 3 data rows, got {len(rows)}"
        )
    return TimeSeriesTable(
        channel_names=tuple(header),
        samples=np.array(rows, dtype=np.float64),
        subject_id=subject_id if subject_id is not None else path.stem,
        group_label=group_label,
    )


def save_timeseries(table: TimeSeriesTable, path) -> None:
    """Write a table back to CSV with full round-trip precision (repr)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.channel_names)
        for row in table.samples:
            writer.writerow([repr(float(v)) for v in row])


def slice_network(table: TimeSeriesTable, atlas: NetworkAtlas,
                  network: str) -> TimeSeriesTable:
    """View of the table restricted to one network's channels, in atlas order."""
    chans = atlas.channels(network)
    missing = [c for c in chans if c not in table.channel_names]
    if missing:
        raise ValidationError(
            f"subject {table.subject_id!r} lacks channels {missing[:5]} "
            f"required by network {network!r}"
        )
    cols = [table.channel_names.index(c) for c in chans]
    return TimeSeriesTable(
        channel_names=chans,
        samples=np.ascontiguousarray(table.samples[:, cols]),
        subject_id=table.subject_id,
        group_label=table.group_label,
    )


def default_atlas() -> NetworkAtlas:
    """Six-network atlas with generated channel names (CB_01 .. SM_33)."""
    networks = {}
    for net, count in DEFAULT_NETWORK_SIZES.items():
        networks[net] = tuple(f"{net}_{i:02d}" for i in range(1, count + 1))
    return NetworkAtlas(networks=networks)


def load_atlas(path) -> NetworkAtlas:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict) or not obj:
        raise SchemaError(f"{path}: atlas must be a non-empty JSON object")
    networks = {}
    for name, chans in obj.items():
        if not isinstance(chans, list) or not all(isinstance(c, str) for c in chans):
            raise SchemaError(f"{path}: network {name!r} is not a list of names")
        networks[str(name)] = tuple(chans)
    return NetworkAtlas(networks=networks)


def save_atlas(atlas: NetworkAtlas, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({k: list(v) for k, v in atlas.networks.items()}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    """Read subject_id -> group from a two-column manifest CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["subject_id", "group"]:
            raise SchemaError(f"{path}: manifest header must be 'subject_id,group'")
        for row in reader:
            if len(row) < 2:
                raise SchemaError(f"{path}: short manifest row {row!r}")
            sid = row[0].strip()
            if sid in out:
                raise SchemaError(f"{path}: duplicate subject_id {sid!r}")
            out[sid] = row[1].strip()
    return out


def save_manifest(labels: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "group"])
        for sid in labels:
            writer.writerow([sid, labels[sid]])


def generate_synthetic_cohort(n_per_group: int, T: int, seed: int,
                              recipe: str = "loop_vs_noise") -> Cohort:
    """Deterministic two-group cohort with planted structure.

    loop_vs_noise: group "loop" channels are unit sinusoids (period
    SYNTH_PERIOD samples) with an independent random phase per subject and
    channel, plus Gaussian noise of sigma = SYNTH_NOISE_FRAC * amplitude.
    Group "noise" channels are white noise whose variance matches the loop
    channels (amplitude^2 / 2 + noise variance).

    cluster_shift: both groups are white noise, but group "shift" channels
    0..SYNTH_BLOCK_SIZE-1 share a common latent signal scaled by
    SYNTH_BLOCK_GAIN, planting a correlated block absent in group "base".

    Pure function of the arguments: same inputs, byte-identical cohort.
    """
    if n_per_group < 2:
        raise ValidationError(f"n_per_group must be >= 2, got {n_per_group}")
    if T < 30:
        raise ValidationError(f"T must be >= 30, got {T}")
    if recipe not in ("loop_vs_noise", "cluster_shift"):
        raise ValidationError(f"unknown recipe {recipe!r}")

    n_ch = SYNTH_CHANNELS
    channel_names = tuple(f"ch{c:02d}" for c in range(1, n_ch + 1))
    atlas = NetworkAtlas(networks={"SYN": channel_names})
    rng = np.random.default_rng(seed)
    t = np.arange(T, dtype=np.float64)

    group_names = (("loop", "noise") if recipe == "loop_vs_noise"
                   else ("shift", "base"))
    subjects = []
    for group in group_names:
        for k in range(n_per_group):
            sid = f"{group}_{k:03d}"
            if recipe == "loop_vs_noise":
                if group == "loop":
                    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_ch)
                    clean = SYNTH_AMPLITUDE * np.sin(
                        2.0 * np.pi * t[:, None] / SYNTH_PERIOD + phases[None, :]
                    )
                    noise = rng.normal(
                        0.0, SYNTH_NOISE_FRAC * SYNTH_AMPLITUDE, size=(T, n_ch)
                    )
                    data = clean + noise
                else:
                    matched_var = (SYNTH_AMPLITUDE ** 2 / 2.0
                                   + (SYNTH_NOISE_FRAC * SYNTH_AMPLITUDE) ** 2)
                    data = rng.normal(0.0, math.sqrt(matched_var), size=(T, n_ch))
            else:
                data = rng.normal(0.0, 1.0, size=(T, n_ch))
                if group == "shift":
                    common = rng.normal(0.0, 1.0, size=T)
                    data[:, :SYNTH_BLOCK_SIZE] += SYNTH_BLOCK_GAIN * common[:, None]
            subjects.append(TimeSeriesTable(
                channel_names=channel_names,
                samples=data,
                subject_id=sid,
                group_label=group,
            ))
    return Cohort(subjects=tuple(subjects), atlas=atlas)
