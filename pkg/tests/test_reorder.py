import itertools

import numpy as np
import pytest

from harshuffle.ingest import LABELS, ActivitySegment, StreamError, segment_runs
from harshuffle.reorder import (
    RdssConfig,
    flatten_segments,
    rdss_groups,
    reorder_as,
    reorder_rdss,
    reorder_rs,
)
from tests.conftest import make_stream


def make_segments(labels, lengths=None, seed=0):
    rng = np.random.default_rng(seed)
    lengths = lengths or [int(rng.integers(1, 8)) for _ in labels]
    segs = []
    t = 0
    for label, n in zip(labels, lengths):
        segs.append(
            ActivitySegment(
                label=label,
                timestamps=np.arange(t, t + n, dtype=np.int64) * 10,
                values=rng.normal(size=(n, 3)),
            )
        )
        t += n
    return segs


def frame_multiset(stream):
    rows = [tuple(v) + (int(op),) for v, op in zip(stream.values, stream.labels)]
    return sorted(rows)


def frame_multiset_segments(segs):
    rows = []
    for seg in segs:
        rows += [tuple(v) + (seg.label,) for v in seg.values]
    return sorted(rows)


class TestFlatten:
    def test_lengths_add_up(self):
        out = flatten_segments(make_segments([100, 300], lengths=[3, 4]))
        assert len(out) == 7

    def test_inverse_of_segment_runs_up_to_timestamps(self):
        s = make_stream([100, 100, 300, 800, 800, 800], seed=1)
        out = flatten_segments(segment_runs(s))
        assert np.array_equal(out.values, s.values)
        assert np.array_equal(out.labels, s.labels)

    def test_output_passes_invariants(self):
        out = flatten_segments(make_segments([100, 500, 100], seed=2))
        out.validate()

    def test_empty_rejected(self):
        with pytest.raises(StreamError):
            flatten_segments([])


class TestRandomSequence:
    def test_single_segment_identity(self):
        segs = make_segments([300], lengths=[5])
        out = reorder_rs(segs, seed=9)
        assert np.array_equal(out.values, segs[0].values)
        assert np.all(out.labels == 300)

    def test_multiset_preserved(self):
        segs = make_segments([100, 300, 100, 800, 8100], seed=3)
        out = reorder_rs(segs, seed=4)
        assert frame_multiset(out) == frame_multiset_segments(segs)

    def test_same_seed_identical(self):
        segs = make_segments(list(LABELS.ids)[:10], seed=5)
        a, b = reorder_rs(segs, 42), reorder_rs(segs, 42)
        assert np.array_equal(a.values, b.values)
        assert np.array_equal(a.labels, b.labels)

    def test_different_seeds_differ(self):
        segs = make_segments(list(LABELS.ids)[:10], seed=5)
        outs = {reorder_rs(segs, s).values.tobytes() for s in range(5)}
        assert len(outs) > 1

    def test_permutation_frequencies_uniform(self):
        # n=3 segments: each of the 6 permutations within 3 sigma of uniform
        segs = make_segments([100, 300, 800], lengths=[1, 1, 1])
        trials = 10_000
        counts = {p: 0 for p in itertools.permutations([100, 300, 800])}
        for seed in range(trials):
            out = reorder_rs(segs, seed)
            counts[tuple(int(x) for x in out.labels)] += 1
        p = 1 / 6
        sigma = (trials * p * (1 - p)) ** 0.5
        for perm, c in counts.items():
            assert abs(c - trials * p) < 3 * sigma, (perm, c)


class TestAscendingSequence:
    def test_sorts_by_label(self):
        segs = make_segments([700, 100, 300], lengths=[2, 2, 2])
        out = reorder_as(segs)
        boundaries = [int(out.labels[0]), int(out.labels[2]), int(out.labels[4])]
        assert boundaries == [100, 300, 700]

    def test_stable_for_equal_labels(self):
        segs = make_segments([300, 300], lengths=[2, 2], seed=7)
        out = reorder_as(segs)
        assert np.array_equal(out.values[:2], segs[0].values)
        assert np.array_equal(out.values[2:], segs[1].values)

    def test_non_decreasing_over_random_segments(self):
        rng = np.random.default_rng(11)
        labels = [LABELS.ids[i] for i in rng.integers(0, 11, 100)]
        out = reorder_as(make_segments(labels, seed=8))
        idx = np.array([LABELS.index(int(op)) for op in out.labels])
        assert np.all(np.diff(idx) >= 0)

    def test_transition_count_bounded(self):
        rng = np.random.default_rng(13)
        labels = [LABELS.ids[i] for i in rng.integers(0, 11, 60)]
        out = reorder_as(make_segments(labels, seed=9))
        transitions = int(np.sum(np.diff(out.labels) != 0))
        assert transitions <= len(LABELS) - 1

    def test_multiset_preserved(self):
        segs = make_segments([8100, 100, 100, 1000], seed=10)
        assert frame_multiset(reorder_as(segs)) == frame_multiset_segments(segs)


class TestRdss:
    def test_32_segments_16_groups(self):
        rng = np.random.default_rng(17)
        labels = [LABELS.ids[i] for i in rng.integers(0, 11, 32)]
        groups = rdss_groups(make_segments(labels, seed=12), RdssConfig(16, seed=1))
        assert len(groups) == 16
        assert all(len(g) == 2 for g in groups)
        for g in groups:
            idx = [LABELS.index(s.label) for s in g]
            assert idx == sorted(idx)

    def test_fewer_segments_than_groups_equals_rs(self):
        segs = make_segments([LABELS.ids[i] for i in (5, 2, 9, 0, 7, 3, 1, 8)], seed=13)
        rdss = reorder_rdss(segs, RdssConfig(group_count=16, seed=31))
        rs = reorder_rs(segs, seed=31)
        assert np.array_equal(rdss.values, rs.values)
        assert np.array_equal(rdss.labels, rs.labels)

    def test_group_sizes_near_even(self):
        segs = make_segments([LABELS.ids[i % 11] for i in range(21)], seed=14)
        groups = rdss_groups(segs, RdssConfig(group_count=16, seed=2))
        sizes = [len(g) for g in groups]
        assert len(groups) == 16
        assert sum(sizes) == 21
        assert max(sizes) - min(sizes) <= 1
        # remainder spreads over the leading groups
        assert sizes == sorted(sizes, reverse=True)

    def test_within_group_scan_oracle(self):
        rng = np.random.default_rng(23)
        labels = [LABELS.ids[i] for i in rng.integers(0, 11, 50)]
        groups = rdss_groups(make_segments(labels, seed=15), RdssConfig(16, seed=3))
        for g in groups:
            idx = [LABELS.index(s.label) for s in g]
            assert idx == sorted(idx)

    def test_multiset_preserved(self):
        segs = make_segments([LABELS.ids[i % 11] for i in range(40)], seed=16)
        out = reorder_rdss(segs, RdssConfig(16, seed=4))
        assert frame_multiset(out) == frame_multiset_segments(segs)

    def test_group_count_validation(self):
        with pytest.raises(ValueError):
            RdssConfig(group_count=0)


def test_all_strategies_reject_empty():
    for call in (
        lambda: reorder_rs([], 0),
        lambda: reorder_as([]),
        lambda: reorder_rdss([], RdssConfig()),
    ):
        with pytest.raises(StreamError):
            call()
