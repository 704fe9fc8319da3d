"""
Decoupling Classifier Loss

The standard softmax classifier is split into two heads that share the same
logits:

- Positive head: ordinary cross-entropy for ROIs assigned to a foreground
  class. Positive labels are trusted, so no constraint is applied.
- Negative head: ROIs assigned to background are scored with a masked
  softmax. The logits are multiplied elementwise by the image-level label
  mask m (1 for every class annotated somewhere in the image, and always 1
  for background), so classes that may be present but unannotated cannot
  receive a "this is not class k" gradient from a possibly mislabeled ROI.

Masking is multiplicative, not additive -inf: a masked-out class keeps a
logit of exactly 0 and still contributes exp(0) = 1 to the softmax
denominator of the negative head. Its gradient, however, is exactly zero.

Per image, the two head sums are added and divided by the total ROI count N.
"""

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import ClassIndexError, InvalidInputError
from .numerics import as_logits, cross_entropy_from_logits, one_hot, stable_softmax


@dataclass(frozen=True)
class RoiClassificationBatch:
    """
    Sampled ROIs of one image, ready for the classification loss.

    Attributes:
        logits: (N, C+1) logit matrix
        labels: (N,) assigned labels; label C marks a negative
        mask: (C+1,) image-level label mask
    """
    logits: np.ndarray
    labels: np.ndarray
    mask: np.ndarray

    @classmethod
    def build(cls, logits, labels, mask) -> "RoiClassificationBatch":
        logits = np.asarray(logits, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if logits.ndim != 2 or logits.shape[0] == 0:
            raise InvalidInputError("Batch needs a non-empty (N, C+1) logit matrix")
        if logits.shape[1] < 2:
            raise InvalidInputError("Logits need at least one foreground class plus background")
        if labels.shape[0] != logits.shape[0]:
            raise InvalidInputError(f"{logits.shape[0]} logit rows but {labels.shape[0]} labels")
        if not np.all(np.isfinite(logits)):
            raise InvalidInputError("Batch logits contain non-finite entries")
        if labels.min() < 0 or labels.max() >= logits.shape[1]:
            raise ClassIndexError(f"Labels must lie in [0, {logits.shape[1] - 1}]")
        mask = validate_mask(mask, logits.shape[1])
        return cls(logits=logits, labels=labels, mask=mask)

    @property
    def n(self) -> int:
        return int(self.logits.shape[0])

    @property
    def background(self) -> int:
        return int(self.logits.shape[1] - 1)


@dataclass(frozen=True)
class LossBreakdown:
    """Head sums of one image and their N-normalised total."""
    positive_sum: float
    negative_sum: float
    total: float
    n: int


def validate_mask(m, length: int = None) -> np.ndarray:
    """
    Check a label mask and return it as float64.

    Args:
        m: Binary sequence of length C+1
        length: Expected length, if known

    Returns:
        Mask array
    """
    arr = np.asarray(m, dtype=np.float64).reshape(-1)
    if length is not None and arr.size != length:
        raise InvalidInputError(f"Mask length {arr.size} does not match logit length {length}")
    if arr.size < 2:
        raise InvalidInputError("Mask needs at least one foreground entry plus background")
    if not np.all((arr == 0.0) | (arr == 1.0)):
        raise InvalidInputError("Mask entries must be 0 or 1")
    if arr[-1] != 1.0:
        raise InvalidInputError("Mask background entry must be 1")
    return arr


def build_image_mask(labeled_classes: Iterable[int], num_fg_classes: int) -> np.ndarray:
    """
    Image-level label mask from the classes annotated in an image.

    Args:
        labeled_classes: Foreground class indices with at least one annotation
        num_fg_classes: C

    Returns:
        (C+1,) mask with m_i = 1 for labeled classes and m_C = 1
    """
    m = np.zeros(num_fg_classes + 1, dtype=np.float64)
    for c in labeled_classes:
        if not 0 <= c < num_fg_classes:
            raise InvalidInputError(f"Class {c} outside [0, {num_fg_classes})")
        m[c] = 1.0
    m[num_fg_classes] = 1.0
    return m


def masked_logits(x, m) -> np.ndarray:
    """Constrained logit x_bar_i = m_i * x_i."""
    x = as_logits(x)
    if np.asarray(m).size != x.size:
        raise InvalidInputError(f"Mask length {np.asarray(m).size} does not match logit length {x.size}")
    return np.asarray(m, dtype=np.float64) * x


def positive_head_loss(x, target: int) -> float:
    x = as_logits(x)
    _check_foreground_target(target, x.size)
    return cross_entropy_from_logits(x, target)


def negative_head_loss(x, m) -> float:
    """
    Masked-softmax cross-entropy against the background class.

    Args:
        x: Logit vector
        m: Image label mask

    Returns:
        -log p_bar_C
    """
    x = as_logits(x)
    m = validate_mask(m, x.size)
    return cross_entropy_from_logits(masked_logits(x, m), x.size - 1)


def positive_head_grad_logits(x, target: int) -> np.ndarray:
    """d(positive loss)/dx = p_hat - y_fg."""
    x = as_logits(x)
    _check_foreground_target(target, x.size)
    return stable_softmax(x) - one_hot(target, x.size)


def negative_head_grad_logits(x, m) -> np.ndarray:
    """
    d(negative loss)/dx = m * (p_bar - y_bg), elementwise.

    Components where m_i = 0 are exactly zero.
    """
    x = as_logits(x)
    m = validate_mask(m, x.size)
    p_bar = stable_softmax(masked_logits(x, m))
    return m * (p_bar - one_hot(x.size - 1, x.size))


def dc_loss_image(batch: RoiClassificationBatch) -> LossBreakdown:
    """
    Decoupled classification loss of one image.

    Positives (label < C) go through the positive head, negatives (label = C)
    through the masked negative head; the sum is divided by N.
    """
    if batch.n == 0:
        raise InvalidInputError("Empty ROI batch")
    bg = batch.background
    positive_sum = 0.0
    negative_sum = 0.0
    for x, label in zip(batch.logits, batch.labels):
        if label < bg:
            positive_sum += positive_head_loss(x, int(label))
        else:
            negative_sum += negative_head_loss(x, batch.mask)
    return LossBreakdown(
        positive_sum=positive_sum,
        negative_sum=negative_sum,
        total=(positive_sum + negative_sum) / batch.n,
        n=batch.n,
    )


def standard_ce_image(batch: RoiClassificationBatch) -> float:
    """Mean softmax cross-entropy over all N ROIs; the mask is ignored."""
    if batch.n == 0:
        raise InvalidInputError("Empty ROI batch")
    total = 0.0
    for x, label in zip(batch.logits, batch.labels):
        total += cross_entropy_from_logits(x, int(label))
    return total / batch.n


def dc_loss_batch_grad(batch: RoiClassificationBatch) -> Tuple[LossBreakdown, np.ndarray]:
    """
    Vectorised decoupled loss and its gradient w.r.t. every logit.

    Returns:
        (LossBreakdown, (N, C+1) gradient already divided by N)
    """
    logits, labels, m = batch.logits, batch.labels, batch.mask
    bg = batch.background
    pos = labels < bg
    neg = ~pos

    grad = np.zeros_like(logits)

    positive_sum = 0.0
    if pos.any():
        x_pos = logits[pos]
        t_pos = labels[pos]
        lse = logsumexp(x_pos, axis=1)
        positive_sum = float(np.sum(np.maximum(lse - x_pos[np.arange(len(t_pos)), t_pos], 0.0)))
        g = softmax(x_pos, axis=1)
        g[np.arange(len(t_pos)), t_pos] -= 1.0
        grad[pos] = g

    negative_sum = 0.0
    if neg.any():
        x_neg = logits[neg] * m
        lse = logsumexp(x_neg, axis=1)
        negative_sum = float(np.sum(np.maximum(lse - x_neg[:, bg], 0.0)))
        g = softmax(x_neg, axis=1)
        g[:, bg] -= 1.0
        grad[neg] = g * m

    n = batch.n
    breakdown = LossBreakdown(positive_sum, negative_sum, (positive_sum + negative_sum) / n, n)
    return breakdown, grad / n


def standard_ce_batch_grad(batch: RoiClassificationBatch) -> Tuple[float, np.ndarray]:
    """Vectorised mean cross-entropy and its (N, C+1) logit gradient."""
    logits, labels = batch.logits, batch.labels
    rows = np.arange(batch.n)
    lse = logsumexp(logits, axis=1)
    loss = float(np.sum(np.maximum(lse - logits[rows, labels], 0.0))) / batch.n
    g = softmax(logits, axis=1)
    g[rows, labels] -= 1.0
    return loss, g / batch.n


def _check_foreground_target(target: int, length: int):
    if not 0 <= target < length - 1:
        raise ClassIndexError(
            f"Positive-head target {target} must be a foreground class in [0, {length - 2}]"
        )
