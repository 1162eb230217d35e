"""Segment-shuffle data augmentation workbench for accelerometer HAR."""

__version__ = "0.1.0"

from .ingest import LABELS, ActivitySegment, LabeledStream, LabelSet
from .windowing import WindowConfig, WindowedDataset
from .metrics import MetricsReport, ResultsTable

__all__ = [
    "LABELS",
    "ActivitySegment",
    "LabeledStream",
    "LabelSet",
    "MetricsReport",
    "ResultsTable",
    "WindowConfig",
    "WindowedDataset",
    "__version__",
]
