import pytest

from src.errors import InvalidInputError
from src.training.gradcheck import CHECKS, run_grad_check


def test_grad_check_passes():
    report = run_grad_check(cases=200, seed=0)
    assert report.passed
    assert all(len(report.errors[k]) == 200 for k in CHECKS)
    assert report.max_error() <= 1e-6


def test_grad_check_is_reproducible():
    a = run_grad_check(cases=10, seed=3).to_dict()
    b = run_grad_check(cases=10, seed=3).to_dict()
    assert a == b
    assert set(a["max_relative_error"]) == set(CHECKS)


def test_impossible_tolerance_fails():
    report = run_grad_check(cases=5, tolerance=0.0, seed=1)
    assert not report.passed


def test_grad_check_needs_cases():
    with pytest.raises(InvalidInputError):
        run_grad_check(cases=0)
