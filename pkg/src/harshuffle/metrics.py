"""Confusion-matrix evaluation and multi-seed mean(std) aggregation.

Zero-denominator convention: precision/recall/F1 are 0 when undefined,
and classes with no true samples are excluded from macro averages.
Aggregation uses the population standard deviation and renders cells as
"0.70 (0.03)".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

METRIC_NAMES = ("accuracy", "precision", "recall", "macro_f1")
_METRIC_ROWS = ("Accuracy", "Precision", "Recall", "Macro F1")


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ClassScores:
    index: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    setting: str
    seed: int
    accuracy: float
    precision: float
    recall: float
    macro_f1: float
    per_class: tuple[ClassScores, ...] = ()

    def csv_line(self) -> str:
        return (
            f"{self.setting},{self.seed},{self.accuracy!r},"
            f"{self.precision!r},{self.recall!r},{self.macro_f1!r}"
        )


def confusion_matrix(truth, pred, k: int) -> np.ndarray:
    """K x K counts; rows are true classes, columns predicted."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if len(truth) == 0:
        raise MetricsError("no samples")
    if truth.shape != pred.shape:
        raise MetricsError(f"length mismatch: {truth.shape} vs {pred.shape}")
    if truth.min() < 0 or truth.max() >= k or pred.min() < 0 or pred.max() >= k:
        raise MetricsError(f"class index outside 0..{k - 1}")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (truth, pred), 1)
    return cm


def accuracy(cm: np.ndarray) -> float:
    return float(np.trace(cm) / cm.sum())


def per_class_scores(cm: np.ndarray) -> list[ClassScores]:
    scores = []
    for c in range(cm.shape[0]):
        tp = float(cm[c, c])
        fp = float(cm[:, c].sum() - tp)
        fn = float(cm[c, :].sum() - tp)
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        scores.append(ClassScores(c, p, r, f1, support=int(cm[c, :].sum())))
    return scores


def macro_scores(cm: np.ndarray) -> tuple[float, float, float]:
    """(precision, recall, F1) averaged over classes with >= 1 true sample."""
    if cm.sum() == 0:
        raise MetricsError("empty confusion matrix")
    present = [s for s in per_class_scores(cm) if s.support > 0]
    return (
        float(np.mean([s.precision for s in present])),
        float(np.mean([s.recall for s in present])),
        float(np.mean([s.f1 for s in present])),
    )


def evaluate(truth, pred, setting: str, seed: int, k: int = 11) -> MetricsReport:
    cm = confusion_matrix(truth, pred, k)
    p, r, f1 = macro_scores(cm)
    return MetricsReport(
        setting=setting,
        seed=seed,
        accuracy=accuracy(cm),
        precision=p,
        recall=r,
        macro_f1=f1,
        per_class=tuple(per_class_scores(cm)),
    )


@dataclass(frozen=True)
class ResultsTable:
    """Mean (population std) per metric per setting, Table-style."""

    settings: tuple[str, ...]
    cells: dict[str, dict[str, tuple[float, float]]]  # metric -> setting -> (mean, std)

    @staticmethod
    def cell_text(mean: float, std: float) -> str:
        return f"{mean:.2f} ({std:.2f})"

    def render_csv(self) -> str:
        lines = ["metric," + ",".join(self.settings)]
        for metric, row_name in zip(METRIC_NAMES, _METRIC_ROWS):
            cells = [self.cell_text(*self.cells[metric][s]) for s in self.settings]
            lines.append(row_name + "," + ",".join(cells))
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        width = max(12, max((len(s) for s in self.settings), default=12) + 2)
        head = "Metric".ljust(width) + "".join(s.rjust(width) for s in self.settings)
        lines = [head]
        for metric, row_name in zip(METRIC_NAMES, _METRIC_ROWS):
            row = row_name.ljust(width)
            row += "".join(
                self.cell_text(*self.cells[metric][s]).rjust(width) for s in self.settings
            )
            lines.append(row)
        return "\n".join(lines) + "\n"


def aggregate_runs(reports: list[MetricsReport]) -> ResultsTable:
    """Group by setting (first-seen order) and reduce to mean (std)."""
    if not reports:
        raise MetricsError("no reports to aggregate")
    settings: list[str] = []
    for rep in reports:
        if rep.setting not in settings:
            settings.append(rep.setting)
    cells: dict[str, dict[str, tuple[float, float]]] = {m: {} for m in METRIC_NAMES}
    for setting in settings:
        group = [r for r in reports if r.setting == setting]
        for metric in METRIC_NAMES:
            vals = np.array([getattr(r, metric) for r in group])
            cells[metric][setting] = (float(vals.mean()), float(vals.std()))
    return ResultsTable(settings=tuple(settings), cells=cells)
