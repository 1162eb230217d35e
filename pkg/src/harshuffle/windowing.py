"""Fixed-length overlapping windows and chronological train/val/test splits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import LABELS, LabeledStream, LabelSet, StreamError, segment_runs


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = 300
    stride: int = 150

    def __post_init__(self):
        if not 1 <= self.stride <= self.window_len:
            raise ValueError(f"need 1 <= stride <= window_len, got {self.stride}/{self.window_len}")


@dataclass(frozen=True)
class WindowedDataset:
    """Classifier input: one (window_len x 3) matrix and one class index each."""

    windows: np.ndarray  # (n, window_len, 3) float64
    labels: np.ndarray  # (n,) int64 class indices
    setting: str = "adhoc"
    seed: int = 0

    def __post_init__(self):
        if len(self.windows) != len(self.labels):
            raise ValueError("windows and labels must have equal length")

    def __len__(self) -> int:
        return len(self.labels)

    @staticmethod
    def empty(window_len: int, setting: str = "adhoc", seed: int = 0) -> "WindowedDataset":
        return WindowedDataset(
            np.empty((0, window_len, 3)), np.empty(0, dtype=np.int64), setting, seed
        )


def concat_datasets(parts: list[WindowedDataset], setting: str, seed: int) -> WindowedDataset:
    return WindowedDataset(
        np.concatenate([p.windows for p in parts]),
        np.concatenate([p.labels for p in parts]),
        setting,
        seed,
    )


def window_label(frame_labels: np.ndarray, labels: LabelSet = LABELS) -> int:
    """Majority label as class index; ties go to the earliest first occurrence."""
    frame_labels = np.asarray(frame_labels)
    if len(frame_labels) == 0:
        raise StreamError("empty window")
    ids, first_pos, counts = np.unique(frame_labels, return_index=True, return_counts=True)
    best = max(range(len(ids)), key=lambda i: (counts[i], -first_pos[i]))
    return labels.index(int(ids[best]))


def make_windows(
    stream: LabeledStream,
    cfg: WindowConfig = WindowConfig(),
    setting: str = "adhoc",
    seed: int = 0,
    labels: LabelSet = LABELS,
) -> WindowedDataset:
    """Windows [k*stride, k*stride + window_len); trailing remainder dropped."""
    n = len(stream)
    if n < cfg.window_len:
        raise StreamError(f"stream of {n} frames shorter than window_len {cfg.window_len}")
    count = (n - cfg.window_len) // cfg.stride + 1
    starts = np.arange(count) * cfg.stride
    windows = np.stack([stream.values[s : s + cfg.window_len] for s in starts])
    idx = np.array(
        [window_label(stream.labels[s : s + cfg.window_len], labels) for s in starts],
        dtype=np.int64,
    )
    return WindowedDataset(windows, idx, setting, seed)


def split_stream(
    stream: LabeledStream, val_frac: float, test_frac: float
) -> tuple[LabeledStream, LabeledStream, LabeledStream]:
    """Chronological tail split; cuts snap back to segment starts.

    test takes the last ``test_frac`` of frames and val the ``val_frac``
    before it; a cut landing inside a segment moves to that segment's
    start so no segment straddles a split. Fraction 0 yields an
    intentionally empty part; otherwise an empty part is an error.
    """
    if val_frac < 0 or test_frac < 0 or val_frac + test_frac >= 1:
        raise StreamError(f"need fractions >= 0 with val+test < 1, got {val_frac}/{test_frac}")
    n = len(stream)
    starts = np.array([0] + list(np.cumsum([len(s) for s in segment_runs(stream)])))

    def snap(cut: int) -> int:
        return int(starts[starts <= cut].max())

    c2 = snap(n - int(np.floor(test_frac * n)))
    c1 = min(snap(n - int(np.floor(test_frac * n)) - int(np.floor(val_frac * n))), c2)

    def piece(lo: int, hi: int) -> LabeledStream:
        return LabeledStream(
            stream.timestamps[lo:hi], stream.values[lo:hi], stream.labels[lo:hi]
        )

    train, val, test = piece(0, c1), piece(c1, c2), piece(c2, n)
    if len(train) == 0:
        raise StreamError("train split received zero segments")
    if val_frac > 0 and len(val) == 0:
        raise StreamError("val split received zero segments")
    if test_frac > 0 and len(test) == 0:
        raise StreamError("test split received zero segments")
    return train, val, test
