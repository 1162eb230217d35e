"""Labeled accelerometer streams: load, synthesise, combine, normalise, segment.

A stream is three parallel arrays (millisecond timestamps, 3-axis
values, per-frame operation labels). The on-disk format is CSV with the
header ``timestamp,acc_x,acc_y,acc_z,operation``; floats are written
with shortest round-trip repr so save/load is lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .rng import Prng

OPERATION_IDS = (100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 8100)
STREAM_HEADER = "timestamp,acc_x,acc_y,acc_z,operation"


class StreamError(ValueError):
    """Malformed stream data or a violated stream invariant."""


class LabelSet:
    """Ordered operation-label vocabulary; index() is a bijection onto 0..K-1."""

    def __init__(self, ids: tuple[int, ...] = OPERATION_IDS):
        if list(ids) != sorted(set(ids)):
            raise StreamError("label ids must be unique and sorted ascending")
        self.ids = tuple(int(i) for i in ids)
        self._index = {op: i for i, op in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, op: int) -> bool:
        return op in self._index

    def index(self, op: int) -> int:
        try:
            return self._index[op]
        except KeyError:
            raise StreamError(f"unknown operation label {op}") from None

    def id_at(self, index: int) -> int:
        return self.ids[index]


LABELS = LabelSet()

# Classes the generative model may synthesise: all but 8100, which is
# kept in its original state throughout the pipeline.
GENERATED_CLASS_IDS = LABELS.ids[:-1]


@dataclass(frozen=True)
class LabeledStream:
    """Ordered frames of (timestamp ms, ax, ay, az, operation label)."""

    timestamps: np.ndarray  # (n,) int64, strictly increasing
    values: np.ndarray  # (n, 3) float64
    labels: np.ndarray  # (n,) int64 operation ids

    def __post_init__(self):
        object.__setattr__(self, "timestamps", np.asarray(self.timestamps, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.timestamps)

    def validate(self, labels: LabelSet = LABELS) -> "LabeledStream":
        if len(self) == 0:
            raise StreamError("stream is empty")
        if self.values.shape != (len(self), 3):
            raise StreamError(f"values shape {self.values.shape} != ({len(self)}, 3)")
        if self.labels.shape != (len(self),):
            raise StreamError("labels length differs from timestamps")
        if np.any(np.diff(self.timestamps) <= 0):
            bad = int(np.flatnonzero(np.diff(self.timestamps) <= 0)[0]) + 1
            raise StreamError(f"timestamps not strictly increasing at frame {bad}")
        for op in np.unique(self.labels):
            if int(op) not in labels:
                raise StreamError(f"unknown operation label {int(op)}")
        return self


@dataclass(frozen=True)
class ActivitySegment:
    """Maximal contiguous run of frames sharing one operation label."""

    label: int
    timestamps: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class CombineSpec:
    """Which two workers feed the combined dataset (recorded, i != j)."""

    worker_ids: tuple[int, int]
    seed: int = 0

    def __post_init__(self):
        i, j = self.worker_ids
        if i == j:
            raise StreamError(f"combined workers must differ, got ({i}, {j})")


@dataclass(frozen=True)
class ClassWaveform:
    freq_hz: float
    amplitude: float
    noise_std: float
    offset: float = 0.0  # posture baseline, scaled per axis by _AXIS_OFFSET_BASIS


@dataclass(frozen=True)
class SegmentLengthDist:
    mean: float
    std: float
    min_len: int = 1


@dataclass(frozen=True)
class SynthWorkerSpec:
    """Desk-scale synthetic stand-in for one worker's recording session."""

    waveforms: dict[int, ClassWaveform]
    lengths: dict[int, SegmentLengthDist]
    duration_frames: int
    sample_rate_hz: float = 30.0
    seed: int = 0

    def validate(self) -> "SynthWorkerSpec":
        if self.duration_frames < 1:
            raise StreamError("zero-duration spec")
        if not self.waveforms or set(self.waveforms) != set(self.lengths):
            raise StreamError("waveforms and lengths must cover the same classes")
        for op, wf in self.waveforms.items():
            if op not in LABELS:
                raise StreamError(f"unknown operation label {op}")
            if wf.noise_std < 0:
                raise StreamError(f"class {op}: noise std must be >= 0")
        for op, dist in self.lengths.items():
            if dist.std < 0 or dist.min_len < 1:
                raise StreamError(f"class {op}: std >= 0 and min length >= 1 required")
        if not 0 < self.sample_rate_hz <= 1000:
            raise StreamError("sample rate must be in (0, 1000] Hz for ms timestamps")
        return self


@dataclass(frozen=True)
class ChannelStats:
    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,)


_AXIS_PHASES = (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)
_AXIS_OFFSET_BASIS = (1.0, -0.5, 0.25)


def default_synth_spec(duration_frames: int = 30_000, seed: int = 0) -> SynthWorkerSpec:
    """Spec covering all 11 classes; 8100 gets rare, short segments.

    Classes differ in frequency, amplitude, and posture offset, the way
    packaging steps differ in motion tempo and arm orientation.
    """
    waveforms, lengths = {}, {}
    for k, op in enumerate(LABELS.ids):
        waveforms[op] = ClassWaveform(
            freq_hz=0.4 + 0.35 * k,
            amplitude=1.0 + 0.15 * k,
            noise_std=0.15,
            offset=-1.5 + 0.3 * k,
        )
        lengths[op] = SegmentLengthDist(mean=200.0, std=40.0, min_len=30)
    lengths[8100] = SegmentLengthDist(mean=40.0, std=10.0, min_len=10)
    return SynthWorkerSpec(
        waveforms=waveforms, lengths=lengths, duration_frames=duration_frames, seed=seed
    )


def synth_worker(spec: SynthWorkerSpec) -> LabeledStream:
    """Concatenated class-labeled sinusoid segments; pure function of the spec."""
    spec.validate()
    prng = Prng(spec.seed)
    classes = sorted(spec.waveforms)

    runs: list[tuple[int, int]] = []  # (label, length)
    pos = 0
    prev = None
    while pos < spec.duration_frames:
        pool = [c for c in classes if c != prev] or classes
        label = pool[prng.integer(len(pool))]
        dist = spec.lengths[label]
        length = max(dist.min_len, int(round(prng.gaussian() * dist.std + dist.mean)))
        length = min(length, spec.duration_frames - pos)
        runs.append((label, length))
        pos += length
        prev = label

    n = spec.duration_frames
    labels = np.empty(n, dtype=np.int64)
    freq = np.empty(n)
    amp = np.empty(n)
    noise_std = np.empty(n)
    offset = np.empty(n)
    pos = 0
    for label, length in runs:
        wf = spec.waveforms[label]
        labels[pos : pos + length] = label
        freq[pos : pos + length] = wf.freq_hz
        amp[pos : pos + length] = wf.amplitude
        noise_std[pos : pos + length] = wf.noise_std
        offset[pos : pos + length] = wf.offset
        pos += length

    t = np.arange(n, dtype=np.float64)
    values = np.empty((n, 3))
    for axis, phase in enumerate(_AXIS_PHASES):
        values[:, axis] = amp * np.sin(2.0 * np.pi * freq * t / spec.sample_rate_hz + phase)
        values[:, axis] += offset * _AXIS_OFFSET_BASIS[axis]
    values += prng.gaussian((n, 3)) * noise_std[:, None]

    timestamps = (t * 1000.0 / spec.sample_rate_hz).astype(np.int64)
    return LabeledStream(timestamps, values, labels).validate()


def load_stream(path: str | Path, labels: LabelSet = LABELS) -> LabeledStream:
    """Parse a stream CSV, reporting the 1-based line number on any defect."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().rstrip("\n")
        if header != STREAM_HEADER:
            raise StreamError(f"{path}: line 1: header must be '{STREAM_HEADER}'")
        ts, vals, ops = [], [], []
        prev_t = None
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise StreamError(f"{path}: line {lineno}: expected 5 fields, got {len(parts)}")
            try:
                t = int(parts[0])
                xyz = [float(p) for p in parts[1:4]]
                op = int(parts[4])
            except ValueError as e:
                raise StreamError(f"{path}: line {lineno}: {e}") from None
            if op not in labels:
                raise StreamError(f"{path}: line {lineno}: unknown operation label {op}")
            if prev_t is not None and t <= prev_t:
                raise StreamError(
                    f"{path}: line {lineno}: timestamp {t} not greater than previous {prev_t}"
                )
            prev_t = t
            ts.append(t)
            vals.append(xyz)
            ops.append(op)
    if not ts:
        raise StreamError(f"{path}: no data rows")
    return LabeledStream(np.array(ts), np.array(vals), np.array(ops))


def save_stream(stream: LabeledStream, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(STREAM_HEADER + "\n")
        for t, (x, y, z), op in zip(stream.timestamps, stream.values, stream.labels):
            fh.write(f"{int(t)},{float(x)!r},{float(y)!r},{float(z)!r},{int(op)}\n")


def median_gap_ms(stream: LabeledStream) -> int:
    """Median inter-frame gap, at least 1 ms."""
    if len(stream) < 2:
        return 1
    return max(1, int(round(float(np.median(np.diff(stream.timestamps))))))


def combine_workers(a: LabeledStream, b: LabeledStream) -> LabeledStream:
    """a's frames, then b's shifted to continue after a at a's median gap."""
    if len(a) == 0 or len(b) == 0:
        raise StreamError("cannot combine an empty stream")
    shift = int(a.timestamps[-1]) + median_gap_ms(a) - int(b.timestamps[0])
    return LabeledStream(
        np.concatenate([a.timestamps, b.timestamps + shift]),
        np.concatenate([a.values, b.values]),
        np.concatenate([a.labels, b.labels]),
    )


def compute_stats(stream: LabeledStream) -> ChannelStats:
    """Per-axis mean and population std; zero-variance axes are an error."""
    if len(stream) == 0:
        raise StreamError("stream is empty")
    mean = stream.values.mean(axis=0)
    std = stream.values.std(axis=0)
    for axis in range(3):
        if std[axis] == 0.0:
            raise StreamError(f"axis {axis} has zero variance")
    return ChannelStats(mean=mean, std=std)


def normalize(stream: LabeledStream, stats: ChannelStats) -> LabeledStream:
    if np.any(stats.std <= 0.0):
        raise StreamError("stats std must be positive")
    return replace(stream, values=(stream.values - stats.mean) / stats.std)


def denormalize(stream: LabeledStream, stats: ChannelStats) -> LabeledStream:
    return replace(stream, values=stream.values * stats.std + stats.mean)


def segment_runs(stream: LabeledStream) -> list[ActivitySegment]:
    """Maximal same-label runs, in stream order; concatenation is lossless."""
    if len(stream) == 0:
        raise StreamError("stream is empty")
    cuts = np.flatnonzero(np.diff(stream.labels)) + 1
    bounds = np.concatenate([[0], cuts, [len(stream)]])
    return [
        ActivitySegment(
            label=int(stream.labels[lo]),
            timestamps=stream.timestamps[lo:hi],
            values=stream.values[lo:hi],
        )
        for lo, hi in zip(bounds[:-1], bounds[1:])
    ]


def segment_length_distribution(
    segments: list[ActivitySegment],
) -> dict[int, SegmentLengthDist]:
    """Per-class (mean, population std, min) of segment lengths."""
    if not segments:
        raise StreamError("no segments")
    by_label: dict[int, list[int]] = {}
    for seg in segments:
        by_label.setdefault(seg.label, []).append(len(seg))
    return {
        label: SegmentLengthDist(
            mean=float(np.mean(lengths)),
            std=float(np.std(lengths)),
            min_len=int(min(lengths)),
        )
        for label, lengths in sorted(by_label.items())
    }
