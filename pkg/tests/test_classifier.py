import numpy as np
import pytest

from src.core.numerics import finite_diff_grad
from src.errors import InvalidInputError
from src.training.classifier import (
    LinearClassifier,
    backprop_image,
    forward,
    image_loss,
    init_classifier,
    roi_batch,
    sgd_step,
)


def _random_problem(rng, n=6, d=4, c=3):
    clf = LinearClassifier(rng.standard_normal((c + 1, d)), rng.standard_normal(c + 1))
    features = rng.standard_normal((n, d))
    labels = rng.integers(0, c + 1, size=n)
    mask = np.array([1.0, 0.0, 1.0, 1.0])
    return clf, features, labels, mask


def test_init_classifier(rng):
    clf = init_classifier(5, 3, rng, scale=0.01)
    assert clf.weights.shape == (4, 5)
    assert np.array_equal(clf.biases, np.zeros(4))
    assert np.abs(clf.weights).max() < 0.1
    with pytest.raises(InvalidInputError):
        init_classifier(0, 3, rng)


def test_forward_shapes(rng):
    clf = init_classifier(5, 3, rng)
    assert forward(clf, np.ones((7, 5))).shape == (7, 4)
    assert forward(clf, np.ones(5)).shape == (1, 4)
    with pytest.raises(InvalidInputError):
        forward(clf, np.ones((2, 4)))


def test_classifier_rejects_inconsistent_shapes():
    with pytest.raises(InvalidInputError):
        LinearClassifier(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(InvalidInputError):
        LinearClassifier(np.full((3, 2), np.nan), np.zeros(3))


def test_sgd_step_returns_new_classifier(rng):
    clf = init_classifier(2, 2, rng)
    before = clf.weights.copy()
    out = sgd_step(clf, np.ones((3, 2)), np.ones(3), 0.5)
    assert np.array_equal(out.weights, before - 0.5)
    assert np.array_equal(out.biases, clf.biases - 0.5)
    assert np.array_equal(clf.weights, before)

    g_w, g_b = rng.standard_normal((3, 2)), rng.standard_normal(3)
    step = sgd_step(clf, g_w, g_b, 0.3)
    assert np.array_equal(step.weights, clf.weights - 0.3 * g_w)
    assert np.array_equal(step.biases, clf.biases - 0.3 * g_b)
    with pytest.raises(InvalidInputError):
        sgd_step(clf, np.ones((2, 2)), np.ones(3), 0.5)
    with pytest.raises(InvalidInputError):
        sgd_step(clf, np.ones((3, 2)), np.ones(3), 0.0)


@pytest.mark.parametrize("loss_kind", ["standard-ce", "decoupled"])
def test_backprop_matches_finite_differences(loss_kind):
    clf, features, labels, mask = _random_problem(np.random.default_rng(0))
    loss, grad_w, grad_b = backprop_image(clf, roi_batch(clf, features, labels, mask), features, loss_kind)
    assert loss == pytest.approx(image_loss(clf, features, labels, mask, loss_kind))
    num_w = finite_diff_grad(
        lambda w: image_loss(LinearClassifier(w, clf.biases), features, labels, mask, loss_kind), clf.weights
    )
    num_b = finite_diff_grad(
        lambda b: image_loss(LinearClassifier(clf.weights, b), features, labels, mask, loss_kind), clf.biases
    )
    assert np.allclose(grad_w, num_w, atol=1e-7)
    assert np.allclose(grad_b, num_b, atol=1e-7)


def test_masked_class_gets_no_gradient_from_negatives(rng):
    clf, features, _, mask = _random_problem(rng)
    labels = np.full(features.shape[0], 3)
    _, grad_w, grad_b = backprop_image(clf, roi_batch(clf, features, labels, mask), features, "decoupled")
    assert np.all(grad_w[1] == 0.0)
    assert grad_b[1] == 0.0
    _, grad_w, _ = backprop_image(clf, roi_batch(clf, features, labels, mask), features, "standard-ce")
    assert np.any(grad_w[1] != 0.0)


def test_unknown_loss_kind(rng):
    clf, features, labels, mask = _random_problem(rng)
    with pytest.raises(InvalidInputError):
        image_loss(clf, features, labels, mask, "focal")


def test_backprop_feature_shape_mismatch(rng):
    clf, features, labels, mask = _random_problem(rng)
    with pytest.raises(InvalidInputError):
        backprop_image(clf, roi_batch(clf, features, labels, mask), features[:-1], "decoupled")
