"""Confusion matrix and classification report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eegarm.labels import ActionLabel

CLASS_NAMES = tuple(label.display_name for label in ActionLabel)


def _div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray           # rows = truth, columns = prediction
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float

    @classmethod
    def from_confusion(cls, confusion: np.ndarray) -> "EvalReport":
        cm = np.asarray(confusion, dtype=np.int64)
        tp = np.diag(cm)
        precision = _div(tp, cm.sum(axis=0))
        recall = _div(tp, cm.sum(axis=1))
        f1 = _div(2 * precision * recall, precision + recall)
        total = cm.sum()
        accuracy = float(tp.sum() / total) if total else 0.0
        return cls(cm, precision, recall, f1, cm.sum(axis=1), accuracy)

    @property
    def macro(self) -> tuple[float, float, float]:
        return float(self.precision.mean()), float(self.recall.mean()), float(self.f1.mean())

    @property
    def weighted(self) -> tuple[float, float, float]:
        w = self.support / max(self.support.sum(), 1)
        return (float(self.precision @ w), float(self.recall @ w), float(self.f1 @ w))

    def to_text(self, digits: int = 2) -> str:
        fmt = f"{{:>10.{digits}f}}"
        lines = [f"{'Class':<16}{'Precision':>10}{'Recall':>10}{'F1-Score':>10}{'Support':>10}"]
        for k, name in enumerate(CLASS_NAMES):
            lines.append(f"{name:<16}" + "".join(fmt.format(v) for v in
                                                 (self.precision[k], self.recall[k], self.f1[k]))
                         + f"{int(self.support[k]):>10d}")
        n = int(self.support.sum())
        lines.append("")
        lines.append(f"{'Accuracy':<16}{'':>20}" + fmt.format(self.accuracy) + f"{n:>10d}")
        for name, triple in (("Macro Avg", self.macro), ("Weighted Avg", self.weighted)):
            lines.append(f"{name:<16}" + "".join(fmt.format(v) for v in triple) + f"{n:>10d}")
        lines.append("")
        lines.append("Confusion matrix (rows = actual, columns = predicted)")
        lines.append(f"{'':<16}" + "".join(f"{c:>16}" for c in CLASS_NAMES))
        for k, name in enumerate(CLASS_NAMES):
            lines.append(f"{name:<16}" + "".join(f"{int(v):>16d}" for v in self.confusion[k]))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        per_class = {name: {"precision": float(self.precision[k]), "recall": float(self.recall[k]),
                            "f1": float(self.f1[k]), "support": int(self.support[k])}
                     for k, name in enumerate(CLASS_NAMES)}
        return {"classes": per_class, "accuracy": self.accuracy,
                "macro_avg": dict(zip(("precision", "recall", "f1"), self.macro)),
                "weighted_avg": dict(zip(("precision", "recall", "f1"), self.weighted)),
                "confusion": self.confusion.tolist()}


def confusion_matrix(truth, pred, classes: int = len(ActionLabel)) -> np.ndarray:
    cm = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return cm


def report(truth, pred) -> EvalReport:
    return EvalReport.from_confusion(confusion_matrix(truth, pred))
