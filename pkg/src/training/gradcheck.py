"""
Randomised analytic-vs-numeric gradient verification.

Each case draws a class count C, a logit vector scaled by
GRAD_CHECK_DEFAULTS["logit_scale"], a foreground target and a random mask with
the background bit set, then compares:

- the positive-head logit gradient
- the negative-head logit gradient
- the linear head's parameter gradients for a small random ROI batch, under
  the loss kind of the case (alternating)

against central finite differences.
"""

from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from ..config import GRAD_CHECK_DEFAULTS, LOSS_KINDS
from ..core.dcloss import (
    negative_head_grad_logits,
    negative_head_loss,
    positive_head_grad_logits,
    positive_head_loss,
)
from ..core.numerics import finite_diff_grad, max_relative_error
from ..errors import InvalidInputError
from ..logger import get_logger
from .classifier import LinearClassifier, backprop_image, image_loss, roi_batch

logger = get_logger(__name__)

CHECKS = ("positive_head", "negative_head", "linear_backprop")


@dataclass
class GradCheckReport:
    cases: int
    tolerance: float
    h: float
    seed: int
    errors: Dict[str, List[float]] = field(default_factory=lambda: {k: [] for k in CHECKS})

    def max_error(self, check: str = None) -> float:
        if check is not None:
            return max(self.errors[check], default=0.0)
        return max((self.max_error(k) for k in CHECKS), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error() <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "cases": self.cases,
            "tolerance": self.tolerance,
            "h": self.h,
            "seed": self.seed,
            "max_relative_error": {k: self.max_error(k) for k in CHECKS},
            "overall": self.max_error(),
            "passed": self.passed,
        }


def _random_mask(c: int, rng: np.random.Generator) -> np.ndarray:
    m = rng.integers(0, 2, size=c + 1).astype(np.float64)
    m[c] = 1.0
    return m


def _check_linear(c: int, mask: np.ndarray, loss_kind: str, h: float, rng: np.random.Generator) -> float:
    n = int(rng.integers(1, 7))
    d = int(rng.integers(1, 6))
    features = rng.standard_normal((n, d))
    labels = rng.integers(0, c + 1, size=n)
    clf = LinearClassifier(rng.standard_normal((c + 1, d)), rng.standard_normal(c + 1))

    _, grad_w, grad_b = backprop_image(clf, roi_batch(clf, features, labels, mask), features, loss_kind)
    num_w = finite_diff_grad(
        lambda w: image_loss(LinearClassifier(w, clf.biases), features, labels, mask, loss_kind),
        clf.weights, h,
    )
    num_b = finite_diff_grad(
        lambda b: image_loss(LinearClassifier(clf.weights, b), features, labels, mask, loss_kind),
        clf.biases, h,
    )
    return max(max_relative_error(grad_w, num_w), max_relative_error(grad_b, num_b))


def run_grad_check(
    cases: int = GRAD_CHECK_DEFAULTS["cases"],
    tolerance: float = GRAD_CHECK_DEFAULTS["tolerance"],
    seed: int = 0,
    h: float = GRAD_CHECK_DEFAULTS["h"],
) -> GradCheckReport:
    """
    Compare every closed-form gradient with central finite differences.

    Args:
        cases: Number of random cases (>= 1)
        tolerance: Largest admissible relative error
        seed: Generator seed; identical seeds give identical reports
        h: Finite-difference step

    Returns:
        GradCheckReport with per-case errors of each check
    """
    if cases < 1:
        raise InvalidInputError(f"cases must be >= 1, got {cases}")
    rng = np.random.default_rng(seed)
    report = GradCheckReport(cases=cases, tolerance=tolerance, h=h, seed=seed)
    scale = GRAD_CHECK_DEFAULTS["logit_scale"]

    for i in range(cases):
        c = int(rng.integers(1, GRAD_CHECK_DEFAULTS["max_classes"] + 1))
        x = scale * rng.standard_normal(c + 1)
        target = int(rng.integers(0, c))
        m = _random_mask(c, rng)

        report.errors["positive_head"].append(max_relative_error(
            positive_head_grad_logits(x, target),
            finite_diff_grad(lambda v: positive_head_loss(v, target), x, h),
        ))
        report.errors["negative_head"].append(max_relative_error(
            negative_head_grad_logits(x, m),
            finite_diff_grad(lambda v: negative_head_loss(v, m), x, h),
        ))
        report.errors["linear_backprop"].append(_check_linear(c, m, LOSS_KINDS[i % 2], h, rng))

    logger.info("Gradient check over %d cases: max relative error %.3e (tolerance %.1e)",
                cases, report.max_error(), tolerance)
    return report
