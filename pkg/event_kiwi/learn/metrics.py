"""Positive-class (event) classification metrics and regression errors."""

from dataclasses import asdict, dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from ..errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


def _paired(a: Sequence, b: Sequence, dtype) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=dtype).ravel()
    b = np.asarray(b, dtype=dtype).ravel()
    if len(a) != len(b):
        raise LengthMismatch(
            f"{len(a)} predictions vs {len(b)} targets", {"predictions": len(a), "targets": len(b)}
        )
    if len(a) == 0:
        raise EmptyInput("Metrics need at least one prediction")
    return a, b


def confusion(predictions: Sequence[bool], labels: Sequence[bool]) -> Confusion:
    pred, label = _paired(predictions, labels, bool)
    return Confusion(
        tp=int(np.sum(pred & label)),
        fp=int(np.sum(pred & ~label)),
        tn=int(np.sum(~pred & ~label)),
        fn=int(np.sum(~pred & label)),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def precision_recall_f1(c: Confusion) -> Tuple[float, float, float]:
    """Any 0/0 comes out as 0."""
    p = _ratio(c.tp, c.tp + c.fp)
    r = _ratio(c.tp, c.tp + c.fn)
    return p, r, _ratio(2 * p * r, p + r)


def rmse_mae(predictions: Sequence[float], targets: Sequence[float]) -> Tuple[float, float]:
    pred, target = _paired(predictions, targets, np.float64)
    err = pred - target
    return float(np.sqrt(np.mean(err * err))), float(np.mean(np.abs(err)))


def classification_scores(scores: Sequence[float], labels: Sequence[bool], threshold: float = 0.5):
    """Threshold scores (score >= threshold is an event) and score them."""
    pred = np.asarray(scores, dtype=np.float64) >= threshold
    c = confusion(pred, labels)
    return c, precision_recall_f1(c)
