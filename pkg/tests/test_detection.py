from dataclasses import replace

import numpy as np
import pytest

from src.core.detection import (
    Box,
    GroundTruthInstance,
    assign_labels,
    iou,
    iou_matrix,
    sample_rois,
)
from src.errors import InvalidInputError


def test_iou_partial_overlap():
    assert iou(Box(0, 0, 2, 2), Box(1, 1, 3, 3)) == pytest.approx(1 / 7)


def test_iou_identity_and_disjoint():
    b = Box(0.1, 0.2, 0.5, 0.6)
    assert iou(b, b) == pytest.approx(1.0)
    assert iou(b, Box(0.7, 0.7, 0.9, 0.9)) == 0.0
    assert iou(Box(0, 0, 0, 0), Box(0, 0, 0, 0)) == 0.0


def test_iou_symmetric_and_bounded():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = np.sort(rng.uniform(0, 1, size=(2, 2)), axis=0)
        b = np.sort(rng.uniform(0, 1, size=(2, 2)), axis=0)
        ba = Box(a[0, 0], a[0, 1], a[1, 0], a[1, 1])
        bb = Box(b[0, 0], b[0, 1], b[1, 0], b[1, 1])
        v = iou(ba, bb)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(iou(bb, ba))


def test_iou_matrix_matches_pairwise():
    a = [Box(0, 0, 2, 2), Box(1, 1, 3, 3)]
    b = [Box(1, 1, 3, 3), Box(5, 5, 6, 6)]
    m = iou_matrix(np.stack([x.as_array() for x in a]), np.stack([x.as_array() for x in b]))
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            assert m[i, j] == pytest.approx(iou(x, y))


def test_box_rejects_bad_corners():
    with pytest.raises(InvalidInputError):
        Box(1, 0, 0, 1)
    with pytest.raises(InvalidInputError):
        Box(0, 0, float("inf"), 1)


def test_assignment_threshold_is_inclusive():
    gt = [GroundTruthInstance(Box(0, 0, 2, 1), 1, labeled=True)]
    # IoU exactly 0.5
    out = assign_labels([Box(0, 0, 1, 1)], gt, num_fg_classes=3)
    assert out[0].assigned_label == 1
    assert out[0].max_iou == pytest.approx(0.5)
    assert out[0].matched_gt == 0


def test_unlabeled_instances_are_invisible():
    gts = [
        GroundTruthInstance(Box(0, 0, 1, 1), 0, labeled=True),
        GroundTruthInstance(Box(2, 2, 3, 3), 1, labeled=False),
    ]
    out = assign_labels([Box(0, 0, 1, 1), Box(2, 2, 3, 3)], gts, num_fg_classes=2)
    assert [a.assigned_label for a in out] == [0, 2]
    assert out[1].matched_gt is None


def test_no_labeled_gt_means_all_background():
    gts = [GroundTruthInstance(Box(0, 0, 1, 1), 0, labeled=False)]
    out = assign_labels([Box(0, 0, 1, 1)], gts, num_fg_classes=2)
    assert out[0].assigned_label == 2
    assert out[0].max_iou == 0.0


def test_assign_empty_proposals():
    assert assign_labels([], [], num_fg_classes=2) == []


def _assignments(n_pos, n_neg, c=3):
    gts = [GroundTruthInstance(Box(0, 0, 1, 1), 0, labeled=True)]
    proposals = [Box(0, 0, 1, 1)] * n_pos + [Box(5, 5, 6, 6)] * n_neg
    return assign_labels(proposals, gts, num_fg_classes=c)


def test_sampling_fills_quota():
    sample = sample_rois(_assignments(100, 200), np.random.default_rng(0), 3)
    assert sample.positive_indices.size == 32
    assert sample.negative_indices.size == 96
    assert len(set(sample.indices.tolist())) == 128


def test_sampling_with_few_positives():
    sample = sample_rois(_assignments(5, 200), np.random.default_rng(0), 3)
    assert sample.positive_indices.size == 5
    assert sample.negative_indices.size == 123


def test_sampling_with_few_of_both():
    sample = sample_rois(_assignments(3, 4), np.random.default_rng(0), 3)
    assert sample.indices.size == 7


def test_sampling_is_deterministic():
    a = sample_rois(_assignments(50, 300), np.random.default_rng(5), 3)
    b = sample_rois(_assignments(50, 300), np.random.default_rng(5), 3)
    assert np.array_equal(a.indices, b.indices)


def test_sampling_rejects_empty():
    with pytest.raises(InvalidInputError):
        sample_rois([], np.random.default_rng(0), 3)


def test_iou_pixel_scale_boxes():
    assert iou(Box(0, 0, 10, 10), Box(5, 5, 15, 15)) == pytest.approx(1 / 7, abs=1e-12)


def _random_box(rng):
    x1, y1 = rng.uniform(0, 0.7, size=2)
    w, h = rng.uniform(0.05, 0.3, size=2)
    return Box(x1, y1, x1 + w, y1 + h)


def test_hiding_an_instance_never_adds_positives():
    rng = np.random.default_rng(5)
    for _ in range(200):
        gts = [GroundTruthInstance(_random_box(rng), int(rng.integers(0, 4)), bool(rng.random() < 0.6))
               for _ in range(int(rng.integers(1, 7)))]
        proposals = [_random_box(rng) for _ in range(20)] + [g.box for g in gts]
        before = assign_labels(proposals, gts, 4)
        for j in [i for i, g in enumerate(gts) if g.labeled]:
            hidden = [replace(g, labeled=False) if i == j else g for i, g in enumerate(gts)]
            after = assign_labels(proposals, hidden, 4)
            for a, b in zip(before, after):
                assert b.max_iou <= a.max_iou
                if b.assigned_label < 4:
                    assert a.assigned_label < 4
