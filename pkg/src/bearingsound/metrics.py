"""Confusion matrices and derived rates for the H/D decision.

Matrix layout: rows are the predicted label, columns the true label, both in
the order (H, D). Percentage matrices are column-normalized (each true-class
column sums to 100) and rounded half-up to two decimals. H is the positive
class, so TPR is the true-H recall; the true-D recall is reported both as TNR
and, for readability, as the damage detection rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import FrameRecord
from .errors import DataError

_LABEL_TO_INDEX = {"H": 0, "D": 1}


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 counts; counts[predicted][true] with (H, D) ordering."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2, 2):
            raise DataError(f"confusion matrix must be 2x2, got {counts.shape}")
        if np.any(counts < 0):
            raise DataError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    tpr: float
    tnr: float
    damage_detection_rate: float
    percentages: np.ndarray
    support: dict[str, int]
    counts: np.ndarray


def _to_index_array(labels) -> np.ndarray:
    labels = list(labels)
    out = np.empty(len(labels), dtype=np.int64)
    for i, label in enumerate(labels):
        if label not in _LABEL_TO_INDEX:
            raise DataError(f"label must be H or D, got {label!r}")
        out[i] = _LABEL_TO_INDEX[label]
    return out


def confusion(predictions, truths) -> ConfusionMatrix:
    """Tally predicted-vs-true labels (sequences of "H"/"D")."""
    pred = _to_index_array(predictions)
    true = _to_index_array(truths)
    if len(pred) != len(true):
        raise DataError(
            f"{len(pred)} predictions vs {len(true)} truths")
    counts = np.zeros((2, 2), dtype=np.int64)
    np.add.at(counts, (pred, true), 1)
    return ConfusionMatrix(counts=counts)


def round_half_up(value: float, decimals: int = 2) -> float:
    scale = 10 ** decimals
    return math.floor(value * scale + 0.5) / scale


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, per-class recalls and the column-normalized percentage matrix."""
    counts = cm.counts
    column_sums = counts.sum(axis=0)
    if column_sums[0] == 0 or column_sums[1] == 0:
        empty = "H" if column_sums[0] == 0 else "D"
        raise DataError(f"no samples with true label {empty}")
    percentages = np.array([
        [round_half_up(100.0 * counts[r, c] / column_sums[c]) for c in range(2)]
        for r in range(2)
    ])
    accuracy = 100.0 * (counts[0, 0] + counts[1, 1]) / cm.total
    tpr = 100.0 * counts[0, 0] / column_sums[0]
    tnr = 100.0 * counts[1, 1] / column_sums[1]
    return MetricsReport(
        accuracy=accuracy,
        tpr=tpr,
        tnr=tnr,
        damage_detection_rate=tnr,
        percentages=percentages,
        support={"H": int(column_sums[0]), "D": int(column_sums[1])},
        counts=counts,
    )


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "counts": report.counts.tolist(),
        "percentages": report.percentages.tolist(),
        "accuracy": round_half_up(report.accuracy),
        "tpr": round_half_up(report.tpr),
        "tnr": round_half_up(report.tnr),
        "damage_detection_rate": round_half_up(report.damage_detection_rate),
        "support": report.support,
    }


def report_to_text(report: MetricsReport) -> str:
    c = report.counts
    p = report.percentages
    lines = [
        "                 true H     true D",
        f"  predicted H  {c[0, 0]:9d}  {c[0, 1]:9d}",
        f"  predicted D  {c[1, 0]:9d}  {c[1, 1]:9d}",
        "",
        "                 true H     true D   [% of column]",
        f"  predicted H  {p[0, 0]:8.2f}%  {p[0, 1]:8.2f}%",
        f"  predicted D  {p[1, 0]:8.2f}%  {p[1, 1]:8.2f}%",
        "",
        f"  accuracy               {round_half_up(report.accuracy):6.2f}%",
        f"  TPR (healthy recall)   {round_half_up(report.tpr):6.2f}%",
        f"  TNR (damaged recall)   {round_half_up(report.tnr):6.2f}%",
        f"  damage detection rate  {round_half_up(report.damage_detection_rate):6.2f}%",
        f"  support                H={report.support['H']} D={report.support['D']}",
    ]
    return "\n".join(lines) + "\n"


def write_report(report: MetricsReport, json_path, text_path) -> None:
    Path(json_path).write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    Path(text_path).write_text(report_to_text(report), encoding="utf-8")


def export_scatter(frames: list[FrameRecord], coeff_pair: tuple[int, int],
                   path) -> int:
    """Write one tab-separated row per frame for a 2-D coefficient view.

    Coefficient indices are 1-based (c1..c13); returns the row count.
    """
    a, b = coeff_pair
    for index in (a, b):
        if index < 1:
            raise DataError(f"coefficient index must be >= 1, got {index}")
    lines = [f"c{a}\tc{b}\tlabel\tchannel"]
    for frame in frames:
        coeffs = frame.features.coeffs
        if a > len(coeffs) or b > len(coeffs):
            raise DataError(
                f"coefficient index out of range: frame has {len(coeffs)} "
                f"coefficients, requested ({a}, {b})")
        lines.append(f"{float(coeffs[a - 1])!r}\t{float(coeffs[b - 1])!r}"
                     f"\t{frame.label}\t{frame.channel_id}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(frames)
