from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    tp: int
    fp: int
    fn: int
    tn: int

    @classmethod
    def from_confusion(cls, tp: int, fp: int, fn: int, tn: int) -> "Metrics":
        total = tp + fp + fn + tn
        if total == 0:
            raise ValueError("empty confusion matrix")
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls((tp + tn) / total, precision, recall, f, tp, fp, fn, tn)

    def rounded(self, digits: int = 2) -> tuple[str, str, str, str]:
        return tuple(
            f"{v:.{digits}f}" for v in (self.accuracy, self.precision, self.recall, self.f_score)
        )

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(predictions: Sequence, gold: Sequence, positive_label=1) -> Metrics:
    if len(predictions) != len(gold):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(gold)} gold")
    if len(gold) == 0:
        raise ValueError("need at least one prediction")
    tp = fp = fn = tn = 0
    for p, g in zip(predictions, gold):
        if p == positive_label:
            if g == positive_label:
                tp += 1
            else:
                fp += 1
        elif g == positive_label:
            fn += 1
        else:
            tn += 1
    return Metrics.from_confusion(tp, fp, fn, tn)


@dataclass(frozen=True)
class MeanMetrics:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    folds: int

    def rounded(self, digits: int = 2):
        return tuple(
            f"{v:.{digits}f}" for v in (self.accuracy, self.precision, self.recall, self.f_score)
        )


def mean_metrics(per_fold: Sequence[Metrics]) -> MeanMetrics:
    n = len(per_fold)
    return MeanMetrics(
        sum(m.accuracy for m in per_fold) / n,
        sum(m.precision for m in per_fold) / n,
        sum(m.recall for m in per_fold) / n,
        sum(m.f_score for m in per_fold) / n,
        n,
    )
