"""Shared fixtures and the acceptance-criteria summary hook."""

import numpy as np
import pytest

from harshuffle.ingest import LabeledStream

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"ACCEPTANCE {name}: {status}{suffix}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_stream(labels, seed: int = 0, gap: int = 10) -> LabeledStream:
    """Stream with the given per-frame labels and reproducible values."""
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    return LabeledStream(
        timestamps=np.arange(len(labels), dtype=np.int64) * gap,
        values=rng.normal(size=(len(labels), 3)),
        labels=labels,
    )


@pytest.fixture
def stream_factory():
    return make_stream
