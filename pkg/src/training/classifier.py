"""
Linear ROI Classifier

The classification head is a single affine map from ROI features to C+1
logits. Its parameter gradients close to outer products of the per-ROI logit
gradients with the features, so both losses are trained with exact
closed-form gradients.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..config import LOSS_KINDS, TRAIN_DEFAULTS
from ..core.dcloss import RoiClassificationBatch, dc_loss_batch_grad, standard_ce_batch_grad
from ..errors import InvalidInputError


@dataclass(frozen=True)
class LinearClassifier:
    """
    Affine head x = W f + b.

    Attributes:
        weights: (C+1, d)
        biases: (C+1,)
    """
    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise InvalidInputError(
                f"Inconsistent parameter shapes {self.weights.shape} and {self.biases.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.biases))):
            raise InvalidInputError("Classifier parameters must be finite")

    @property
    def num_outputs(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    def copy(self) -> "LinearClassifier":
        return LinearClassifier(self.weights.copy(), self.biases.copy())


def init_classifier(d: int, c: int, rng: np.random.Generator,
                    scale: float = TRAIN_DEFAULTS["init_scale"]) -> LinearClassifier:
    """
    Gaussian weights, zero biases.

    Args:
        d: Feature dimension
        c: Number of foreground classes (outputs are c+1)
        rng: Initialisation generator
        scale: Weight standard deviation

    Returns:
        LinearClassifier with (c+1, d) weights
    """
    if d < 1 or c < 1:
        raise InvalidInputError(f"Classifier needs d >= 1 and c >= 1, got d={d}, c={c}")
    weights = scale * rng.standard_normal((c + 1, d))
    return LinearClassifier(weights=weights, biases=np.zeros(c + 1))


def forward(clf: LinearClassifier, features) -> np.ndarray:
    """Logits W f + b for each row of an (N, d) feature matrix."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 1:
        f = f[None, :]
    if f.ndim != 2 or f.shape[1] != clf.dim:
        raise InvalidInputError(f"Features of shape {f.shape} do not match classifier dimension {clf.dim}")
    return f @ clf.weights.T + clf.biases


def sgd_step(clf: LinearClassifier, grad_w, grad_b, learning_rate: float) -> LinearClassifier:
    """
    One gradient-descent update theta <- theta - lr * grad.

    Returns:
        New classifier; the input is left untouched
    """
    grad_w = np.asarray(grad_w, dtype=np.float64)
    grad_b = np.asarray(grad_b, dtype=np.float64)
    if grad_w.shape != clf.weights.shape or grad_b.shape != clf.biases.shape:
        raise InvalidInputError(
            f"Gradient shapes {grad_w.shape}/{grad_b.shape} do not match "
            f"parameters {clf.weights.shape}/{clf.biases.shape}"
        )
    if not learning_rate > 0:
        raise InvalidInputError(f"Learning rate must be positive, got {learning_rate}")
    return LinearClassifier(clf.weights - learning_rate * grad_w, clf.biases - learning_rate * grad_b)


def _check_loss_kind(loss_kind: str):
    if loss_kind not in LOSS_KINDS:
        raise InvalidInputError(f"Unknown loss kind {loss_kind!r}; expected one of {LOSS_KINDS}")


def roi_batch(clf: LinearClassifier, features, labels, mask) -> RoiClassificationBatch:
    return RoiClassificationBatch.build(forward(clf, features), labels, mask)


def image_loss(clf: LinearClassifier, features, labels, mask, loss_kind: str) -> float:
    """Scalar image loss of the classifier; the finite-difference target of backprop_image."""
    _check_loss_kind(loss_kind)
    batch = roi_batch(clf, features, labels, mask)
    if loss_kind == "decoupled":
        breakdown, _ = dc_loss_batch_grad(batch)
        return breakdown.total
    loss, _ = standard_ce_batch_grad(batch)
    return loss


def backprop_image(clf: LinearClassifier, batch: RoiClassificationBatch, features,
                   loss_kind: str) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Image loss and its parameter gradients.

    Args:
        clf: Classifier that produced batch.logits
        batch: ROI batch (logits, labels, mask) of one image
        features: (N, d) features of the same ROIs
        loss_kind: "standard-ce" or "decoupled"

    Returns:
        (loss, grad_w, grad_b), normalised by the image's ROI count N
    """
    _check_loss_kind(loss_kind)
    if batch.n == 0:
        raise InvalidInputError("Empty ROI batch")
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (batch.n, clf.dim):
        raise InvalidInputError(f"Expected features of shape {(batch.n, clf.dim)}, got {f.shape}")

    if loss_kind == "decoupled":
        breakdown, g = dc_loss_batch_grad(batch)
        loss = breakdown.total
    else:
        loss, g = standard_ce_batch_grad(batch)

    # g already carries the 1/N factor
    return loss, g.T @ f, g.sum(axis=0)
