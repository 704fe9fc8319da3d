import numpy as np
import pytest

from src.core.numerics import (
    cross_entropy_from_logits,
    finite_diff_grad,
    log_sum_exp,
    max_relative_error,
    stable_softmax,
)
from src.errors import ClassIndexError, InvalidInputError


def test_softmax_sums_to_one():
    p = stable_softmax([2.0, 1.0, 0.5])
    assert np.isclose(p.sum(), 1.0)
    assert np.all(p > 0)


def test_softmax_shift_invariant():
    rng = np.random.default_rng(0)
    x = np.array([0.3, -1.2, 2.5, 0.0])
    for c in np.concatenate([[-700.0, 700.0], rng.uniform(-700, 700, size=50)]):
        assert np.max(np.abs(stable_softmax(x + c) - stable_softmax(x))) <= 1e-12


def test_softmax_extreme_logits_stay_finite():
    p = stable_softmax([1000.0, -1000.0, 0.0])
    assert np.all(np.isfinite(p))
    assert np.isclose(p[0], 1.0)


def test_log_sum_exp_large_values():
    assert np.isclose(log_sum_exp([1000.0, 1000.0]), 1000.0 + np.log(2.0))


def test_cross_entropy_known_value():
    expected = np.log(np.exp(2.0) + np.e + np.exp(0.5)) - 0.5
    assert abs(cross_entropy_from_logits([2.0, 1.0, 0.5], 2) - expected) <= 1e-12


def test_cross_entropy_is_non_negative():
    assert cross_entropy_from_logits([50.0, -50.0], 0) >= 0.0


def test_cross_entropy_rejects_bad_target():
    with pytest.raises(ClassIndexError):
        cross_entropy_from_logits([1.0, 2.0], 2)


def test_rejects_non_finite_logits():
    with pytest.raises(InvalidInputError):
        stable_softmax([1.0, np.nan])
    with pytest.raises(InvalidInputError):
        stable_softmax([1.0])


def test_finite_diff_matches_quadratic():
    x = np.array([1.0, -2.0, 0.5])
    grad = finite_diff_grad(lambda v: float(np.sum(v ** 2)), x)
    assert np.allclose(grad, 2 * x, atol=1e-8)
    # input untouched
    assert np.array_equal(x, [1.0, -2.0, 0.5])


def test_finite_diff_rejects_bad_step():
    with pytest.raises(InvalidInputError):
        finite_diff_grad(lambda v: 0.0, [1.0], h=0.0)


def test_max_relative_error_floor():
    # tiny components are compared in absolute terms
    assert max_relative_error([1e-9], [2e-9]) == pytest.approx(1e-9)
    assert max_relative_error([10.0], [11.0]) == pytest.approx(1 / 11)
    with pytest.raises(InvalidInputError):
        max_relative_error([1.0], [1.0, 2.0])


def test_uniform_logits_cross_entropy():
    for t in range(3):
        assert cross_entropy_from_logits([0.0, 0.0, 0.0], t) == pytest.approx(np.log(3), abs=1e-12)
