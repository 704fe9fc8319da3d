"""
Recall / mRecall bias metric.

An object is recalled when the classifier's argmax is any foreground class;
confusing one foreground class for another still counts. mRecall is the
unweighted mean over classes that have at least one object.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from sklearn.metrics import recall_score

from ..errors import InvalidInputError
from .classifier import LinearClassifier, forward


@dataclass(frozen=True)
class EvalReport:
    """
    Attributes:
        per_class_recall: (C,) recall per foreground class; NaN where support is 0
        support: (C,) ground-truth objects per class
        m_recall: Mean recall over supported classes
    """
    per_class_recall: np.ndarray
    support: np.ndarray
    m_recall: float

    @property
    def num_fg_classes(self) -> int:
        return int(self.support.size)

    def recall_of(self, c: int) -> Optional[float]:
        if self.support[c] == 0:
            return None
        return float(self.per_class_recall[c])

    def row(self) -> Dict[str, float]:
        """Flat columns recall_<c>, support_<c> and m_recall."""
        out: Dict[str, float] = {}
        for c in range(self.num_fg_classes):
            out[f"recall_{c}"] = self.recall_of(c)
            out[f"support_{c}"] = int(self.support[c])
        out["m_recall"] = self.m_recall
        return out


def recall_from_predictions(true_classes, predicted, num_fg_classes: int) -> EvalReport:
    """
    Recall per class from argmax predictions.

    Args:
        true_classes: (M,) foreground classes of ground-truth objects
        predicted: (M,) argmax indices in [0, C]
        num_fg_classes: C

    Returns:
        EvalReport
    """
    y = np.asarray(true_classes, dtype=np.int64).reshape(-1)
    pred = np.asarray(predicted, dtype=np.int64).reshape(-1)
    if y.size == 0:
        raise InvalidInputError("Empty evaluation set")
    if y.shape != pred.shape:
        raise InvalidInputError(f"{y.size} objects but {pred.size} predictions")
    if y.min() < 0 or y.max() >= num_fg_classes:
        raise InvalidInputError(f"Evaluation objects must be foreground classes in [0, {num_fg_classes})")

    # any foreground prediction is a hit for the object's own class
    hit = np.where(pred != num_fg_classes, y, num_fg_classes)
    labels: List[int] = list(range(num_fg_classes))
    recall = recall_score(y, hit, labels=labels, average=None, zero_division=0).astype(np.float64)
    support = np.bincount(y, minlength=num_fg_classes)

    recall = np.where(support > 0, recall, np.nan)
    m_recall = float(np.mean(recall[support > 0]))
    return EvalReport(per_class_recall=recall, support=support, m_recall=m_recall)


def evaluate_recall(clf: LinearClassifier, features, true_classes) -> EvalReport:
    """
    Recall of every ground-truth foreground object.

    argmax ties resolve to the lowest class index.
    """
    f = np.asarray(features, dtype=np.float64)
    if f.size == 0:
        raise InvalidInputError("Empty evaluation set")
    logits = forward(clf, f)
    return recall_from_predictions(true_classes, logits.argmax(axis=1), clf.num_outputs - 1)
