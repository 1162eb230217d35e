"""The three shuffle-order strategies over activity segments.

Every strategy permutes whole segments, rewrites timestamps to a fresh
strictly increasing sequence at the source's median within-segment gap,
and preserves the frame multiset (labels and axis values) exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import LABELS, ActivitySegment, LabeledStream, StreamError
from .rng import Prng


@dataclass(frozen=True)
class RdssConfig:
    group_count: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.group_count < 1:
            raise ValueError(f"group_count must be >= 1, got {self.group_count}")


def _segment_gap_ms(segments: list[ActivitySegment]) -> int:
    gaps = np.concatenate(
        [np.diff(s.timestamps) for s in segments if len(s) > 1] or [np.array([1])]
    )
    return max(1, int(round(float(np.median(gaps)))))


def flatten_segments(segments: list[ActivitySegment]) -> LabeledStream:
    """Concatenate segments under regenerated timestamps (0, g, 2g, ...)."""
    if not segments:
        raise StreamError("no segments to flatten")
    gap = _segment_gap_ms(segments)
    values = np.concatenate([s.values for s in segments])
    labels = np.concatenate(
        [np.full(len(s), s.label, dtype=np.int64) for s in segments]
    )
    timestamps = np.arange(len(labels), dtype=np.int64) * gap
    return LabeledStream(timestamps, values, labels)


def _shuffled(segments: list[ActivitySegment], seed: int) -> list[ActivitySegment]:
    return Prng(seed).shuffle(segments)


def reorder_rs(segments: list[ActivitySegment], seed: int) -> LabeledStream:
    """Random sequence: uniform Fisher-Yates permutation of the segments."""
    if not segments:
        raise StreamError("no segments")
    return flatten_segments(_shuffled(segments, seed))


def reorder_as(segments: list[ActivitySegment]) -> LabeledStream:
    """Ascending sequence: stable sort by label, minimising transitions."""
    if not segments:
        raise StreamError("no segments")
    return flatten_segments(sorted(segments, key=lambda s: LABELS.index(s.label)))


def rdss_groups(
    segments: list[ActivitySegment], cfg: RdssConfig
) -> list[list[ActivitySegment]]:
    """Shuffle, split into min(group_count, n) near-even contiguous groups
    (leading groups take the remainder), and sort each group by label."""
    if not segments:
        raise StreamError("no segments")
    pool = _shuffled(segments, cfg.seed)
    n = len(pool)
    g = min(cfg.group_count, n)
    base, rem = divmod(n, g)
    groups = []
    lo = 0
    for k in range(g):
        hi = lo + base + (1 if k < rem else 0)
        groups.append(sorted(pool[lo:hi], key=lambda s: LABELS.index(s.label)))
        lo = hi
    return groups


def reorder_rdss(segments: list[ActivitySegment], cfg: RdssConfig) -> LabeledStream:
    """Real-dataset sequence: label-sorted groups concatenated in shuffle order."""
    return flatten_segments([s for group in rdss_groups(segments, cfg) for s in group])
