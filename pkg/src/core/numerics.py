"""
Numerically Stable Elementary Operations

Softmax, log-sum-exp and cross-entropy on 64-bit logit vectors, plus a
central finite-difference gradient used to verify every closed-form gradient
in the package.

The last index of a logit vector is always the background class.
"""

from typing import Callable

import numpy as np
from scipy.special import logsumexp

from ..errors import ClassIndexError, InvalidInputError

DEFAULT_FD_STEP = 1e-5


def as_logits(x, min_length: int = 2) -> np.ndarray:
    """
    Coerce input to a finite float64 vector.

    Args:
        x: Sequence of reals
        min_length: Minimum admissible length

    Returns:
        1-D float64 array
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"Expected a 1-D logit vector, got shape {arr.shape}")
    if arr.size < min_length:
        raise InvalidInputError(f"Logit vector needs at least {min_length} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("Logit vector contains non-finite entries")
    return arr


def stable_softmax(x) -> np.ndarray:
    """
    Softmax with max-shift.

    Args:
        x: Logit vector of length C+1

    Returns:
        Probability vector p with p_i = exp(x_i) / sum_t exp(x_t)
    """
    x = as_logits(x)
    z = np.exp(x - x.max())
    return z / z.sum()


def log_sum_exp(x) -> float:
    """log(sum_t exp(x_t)) computed with max-shift."""
    x = as_logits(x, min_length=1)
    return float(logsumexp(x))


def cross_entropy_from_logits(x, target: int) -> float:
    """
    Cross-entropy -log p_target of the softmax of x.

    Args:
        x: Logit vector
        target: Class index in [0, C]

    Returns:
        Non-negative loss
    """
    x = as_logits(x)
    if not 0 <= target < x.size:
        raise ClassIndexError(f"Target {target} outside [0, {x.size - 1}]")
    # lse >= max(x) >= x_target, so clamp only guards rounding
    return max(log_sum_exp(x) - float(x[target]), 0.0)


def one_hot(index: int, length: int) -> np.ndarray:
    y = np.zeros(length, dtype=np.float64)
    y[index] = 1.0
    return y


def finite_diff_grad(f: Callable[[np.ndarray], float], x, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """
    Central finite-difference gradient of a scalar function.

    Each coordinate is perturbed by +h and -h and the derivative is
    approximated by (f(x + h e_i) - f(x - h e_i)) / (2h).

    Args:
        f: Scalar function of a vector
        x: Point of evaluation
        h: Step size (> 0)

    Returns:
        Gradient estimate with the shape of x
    """
    if not h > 0:
        raise InvalidInputError(f"Finite-difference step must be positive, got {h}")

    x0 = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x0)
    flat = x0.reshape(-1)
    grad_flat = grad.reshape(-1)

    for j in range(flat.size):
        orig = flat[j]

        flat[j] = orig + h
        f_plus = f(x0)

        flat[j] = orig - h
        f_minus = f(x0)

        flat[j] = orig
        grad_flat[j] = (f_plus - f_minus) / (2.0 * h)

    return grad


def max_relative_error(analytic, numeric, floor: float = 1.0) -> float:
    """
    Largest elementwise |a - n| / max(|a|, |n|, floor).

    Components below the floor are compared in absolute terms; softmax
    gradients routinely carry entries near 1e-9 where central differences
    only resolve the absolute error.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    if a.shape != n.shape:
        raise InvalidInputError(f"Shape mismatch {a.shape} vs {n.shape}")
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
