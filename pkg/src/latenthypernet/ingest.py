"""CSV ingestion and temporal windowing of multichannel sensor recordings.

A recording is a contiguous run of rows sharing the same (label, subject)
pair. Recordings are cut into fixed-length windows of t = floor(window
seconds x sampling rate) samples; trailing samples that do not fill a whole
window are dropped.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateClassError,
    InputError,
    ParameterError,
    ParseError,
    SchemaError,
    ShapeError,
)


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of an input CSV plus the capture rate of its rows."""

    channel_columns: tuple[str, ...]
    sampling_rate_hz: float
    label_column: str = "label"
    subject_column: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "channel_columns", tuple(self.channel_columns))
        if not self.channel_columns:
            raise ParameterError("schema needs at least one channel column")
        if self.sampling_rate_hz <= 0:
            raise ParameterError("sampling_rate_hz must be positive")


@dataclass(frozen=True)
class SensorRecording:
    samples: np.ndarray  # [n_samples, channels]
    sampling_rate_hz: float
    label: str
    subject_id: str | None = None

    @property
    def channels(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class Window:
    values: np.ndarray  # [t, channels]
    label: int  # class index within the owning dataset


@dataclass(frozen=True)
class Dataset:
    windows: tuple[Window, ...]
    class_names: tuple[str, ...]
    channels: int

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(self.windows))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def window_len(self) -> int:
        return self.windows[0].values.shape[0]

    def labels(self) -> np.ndarray:
        return np.array([w.label for w in self.windows], dtype=np.int64)

    def stacked(self) -> np.ndarray:
        """All window values as one [n, t, channels] array."""
        return np.stack([w.values for w in self.windows])


def load_csv(path, schema: CsvSchema) -> list[SensorRecording]:
    """Read recordings from a header-first, comma-separated UTF-8 file.

    Rows are grouped into one recording per contiguous run of identical
    (label, subject) values, preserving file order.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        col_index = {name: i for i, name in enumerate(header)}

        needed = [schema.label_column, *schema.channel_columns]
        if schema.subject_column is not None:
            needed.append(schema.subject_column)
        missing = [c for c in needed if c not in col_index]
        if missing:
            raise SchemaError(f"{path}: header is missing column(s) {missing}")

        label_i = col_index[schema.label_column]
        subject_i = col_index[schema.subject_column] if schema.subject_column else None
        channel_is = [col_index[c] for c in schema.channel_columns]

        recordings: list[SensorRecording] = []
        run_key: tuple | None = None
        run_rows: list[list[float]] = []

        def close_run():
            if run_rows:
                recordings.append(
                    SensorRecording(
                        samples=np.array(run_rows, dtype=np.float64),
                        sampling_rate_hz=schema.sampling_rate_hz,
                        label=run_key[0],
                        subject_id=run_key[1],
                    )
                )

        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                label = row[label_i].strip()
                subject = row[subject_i].strip() if subject_i is not None else None
            except IndexError:
                raise ParseError(f"{path}: row at line {line_no} is too short") from None
            values = []
            for name, i in zip(schema.channel_columns, channel_is):
                try:
                    values.append(float(row[i]))
                except (ValueError, IndexError):
                    cell = row[i] if i < len(row) else "<missing>"
                    raise ParseError(
                        f"{path}: line {line_no}, column {name!r}: "
                        f"cannot parse {cell.strip()!r} as a number"
                    ) from None
            key = (label, subject)
            if key != run_key:
                close_run()
                run_key = key
                run_rows = []
            run_rows.append(values)
        close_run()

    if not recordings:
        raise InputError(f"{path}: file has no data rows")
    return recordings


def window_samples(window_seconds: float, sampling_rate_hz: float) -> int:
    """Window length in samples: floor(seconds x rate)."""
    t = int(window_seconds * sampling_rate_hz)
    if t < 1:
        raise ParameterError(
            f"window of {window_seconds} s at {sampling_rate_hz} Hz holds no samples"
        )
    return t


def segment(
    rec: SensorRecording,
    window_seconds: float,
    stride_samples: int | None = None,
    label_index: int = 0,
) -> list[Window]:
    """Cut a recording into windows of t samples every `stride_samples` rows.

    Stride defaults to t (non-overlapping). A recording shorter than one
    window yields an empty list; trailing samples that do not fill a whole
    window are dropped.
    """
    t = window_samples(window_seconds, rec.sampling_rate_hz)
    stride = t if stride_samples is None else int(stride_samples)
    if stride < 1:
        raise ParameterError("stride_samples must be a positive integer")
    n = rec.samples.shape[0]
    if n < t:
        return []
    count = (n - t) // stride + 1
    return [
        Window(values=rec.samples[i * stride : i * stride + t].copy(), label=label_index)
        for i in range(count)
    ]


def build_dataset(
    recordings: list[SensorRecording],
    window_seconds: float,
    stride_samples: int | None = None,
) -> Dataset:
    """Segment all recordings and assemble a labeled dataset.

    Class names are the lexicographically sorted distinct recording labels;
    window labels are indices into that order.
    """
    if not recordings:
        raise InputError("no recordings given")
    channels = recordings[0].channels
    rate = recordings[0].sampling_rate_hz
    for rec in recordings:
        if rec.channels != channels:
            raise ShapeError(
                f"recordings disagree on channel count: {rec.channels} vs {channels}"
            )
        if rec.sampling_rate_hz != rate:
            raise InputError(
                f"recordings disagree on sampling rate: {rec.sampling_rate_hz} vs {rate}"
            )

    class_names = tuple(sorted({rec.label for rec in recordings}))
    index_of = {name: i for i, name in enumerate(class_names)}

    windows: list[Window] = []
    counts = {name: 0 for name in class_names}
    for rec in recordings:
        ws = segment(rec, window_seconds, stride_samples, label_index=index_of[rec.label])
        counts[rec.label] += len(ws)
        windows.extend(ws)

    empty = [name for name, c in counts.items() if c == 0]
    if empty:
        raise DegenerateClassError(
            f"class(es) {empty} produced no windows; recordings are shorter than one window"
        )
    return Dataset(windows=tuple(windows), class_names=class_names, channels=channels)
