"""
Detection Core: Boxes, IoU, ROI Label Assignment and Sampling

Proposals are labeled by their best overlap with the *labeled* ground truth
only. An instance that is present in the image but missing from the few-shot
annotation is invisible here, so proposals covering it are assigned to the
background class; these are the noisy negatives the decoupling classifier is
designed to tolerate.

Boxes use continuous corner coordinates (x1, y1, x2, y2); area is
(x2 - x1) * (y2 - y1) with no pixel +1 convention.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..config import SAMPLING_DEFAULTS
from ..errors import InvalidInputError


@dataclass(frozen=True)
class Box:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(np.isfinite(c) for c in coords):
            raise InvalidInputError(f"Box has non-finite coordinates: {coords}")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise InvalidInputError(f"Box corners out of order: {coords}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2], dtype=np.float64)

    def to_xywh(self) -> List[float]:
        return [self.x1, self.y1, self.x2 - self.x1, self.y2 - self.y1]

    @classmethod
    def from_xywh(cls, x: float, y: float, w: float, h: float) -> "Box":
        return cls(x, y, x + w, y + h)


@dataclass(frozen=True)
class GroundTruthInstance:
    """
    One annotated-or-not object in a scene.

    Attributes:
        box: Object extent
        category: Foreground class index in [0, C)
        labeled: True when the instance belongs to the few-shot split
    """
    box: Box
    category: int
    labeled: bool = False


@dataclass(frozen=True)
class RoiAssignment:
    proposal_index: int
    assigned_label: int
    max_iou: float
    matched_gt: Optional[int]


@dataclass(frozen=True)
class RoiSample:
    """Indices (into the assignment list) selected for one image's batch."""
    positive_indices: np.ndarray
    negative_indices: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.concatenate([self.positive_indices, self.negative_indices])


def boxes_to_array(boxes: Sequence[Box]) -> np.ndarray:
    if len(boxes) == 0:
        return np.zeros((0, 4), dtype=np.float64)
    return np.stack([b.as_array() for b in boxes])


def iou(a: Box, b: Box) -> float:
    """
    Intersection over union of two boxes.

    Returns 0 for disjoint boxes and when the union has zero area.
    """
    if not isinstance(a, Box) or not isinstance(b, Box):
        raise InvalidInputError("iou expects Box instances")
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    inter = max(iw, 0.0) * max(ih, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def iou_matrix(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """
    Pairwise IoU between two (n, 4) corner arrays.

    Returns:
        (n_a, n_b) matrix; zero-area unions yield 0
    """
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)

    tl = np.maximum(a[:, None, :2], b[None, :, :2])
    br = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(br - tl, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]

    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter

    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0)
    return out


def assign_labels(
    proposals: Sequence[Box],
    gts: Sequence[GroundTruthInstance],
    num_fg_classes: int,
    fg_threshold: float = SAMPLING_DEFAULTS["fg_threshold"],
) -> List[RoiAssignment]:
    """
    Label proposals against the labeled ground truth of one image.

    A proposal is positive when its best IoU with a labeled instance is at
    least fg_threshold (inclusive) and takes that instance's class; every
    other proposal is background (index num_fg_classes). Unlabeled instances
    are ignored. No low-quality rescue matching is applied.

    Args:
        proposals: Candidate boxes
        gts: All instances of the image; only labeled ones are used
        num_fg_classes: C, also the background index
        fg_threshold: IoU threshold in (0, 1]

    Returns:
        One RoiAssignment per proposal, in proposal order
    """
    if not 0 < fg_threshold <= 1:
        raise InvalidInputError(f"fg_threshold must lie in (0, 1], got {fg_threshold}")
    if len(proposals) == 0:
        return []

    labeled = [(i, g) for i, g in enumerate(gts) if g.labeled]
    for _, g in labeled:
        if not 0 <= g.category < num_fg_classes:
            raise InvalidInputError(f"Instance category {g.category} outside [0, {num_fg_classes})")

    if not labeled:
        return [RoiAssignment(i, num_fg_classes, 0.0, None) for i in range(len(proposals))]

    overlaps = iou_matrix(
        boxes_to_array(proposals),
        boxes_to_array([g.box for _, g in labeled]),
    )
    best = overlaps.argmax(axis=1)
    max_iou = overlaps[np.arange(len(proposals)), best]

    assignments = []
    for i, (j, m) in enumerate(zip(best, max_iou)):
        gt_index, gt = labeled[j]
        if m >= fg_threshold:
            assignments.append(RoiAssignment(i, gt.category, float(m), gt_index))
        else:
            assignments.append(RoiAssignment(i, num_fg_classes, float(m), None))
    return assignments


def sample_rois(
    assignments: Sequence[RoiAssignment],
    rng: np.random.Generator,
    num_fg_classes: int,
    batch_size: int = SAMPLING_DEFAULTS["batch_size"],
    positive_fraction: float = SAMPLING_DEFAULTS["positive_fraction"],
) -> RoiSample:
    """
    Foreground-fraction sampling of one image's ROIs.

    Up to round(positive_fraction * batch_size) positives are drawn uniformly
    without replacement; the rest of the batch is filled with negatives, or
    with every negative when fewer are available.

    Args:
        assignments: Output of assign_labels
        rng: Seeded random generator
        num_fg_classes: C, the background label
        batch_size: ROIs per image
        positive_fraction: Target share of positives

    Returns:
        RoiSample with positive and negative index arrays
    """
    if len(assignments) == 0:
        raise InvalidInputError("No ROI assignments to sample from")
    if batch_size < 1:
        raise InvalidInputError(f"batch_size must be >= 1, got {batch_size}")
    if not 0 < positive_fraction < 1:
        raise InvalidInputError(f"positive_fraction must lie in (0, 1), got {positive_fraction}")

    labels = np.array([a.assigned_label for a in assignments])
    pos_index = np.flatnonzero(labels < num_fg_classes)
    neg_index = np.flatnonzero(labels == num_fg_classes)

    pos_quota = int(np.round(positive_fraction * batch_size))
    n_pos = min(pos_quota, pos_index.size)
    if n_pos > 0:
        pos_index = rng.choice(pos_index, size=n_pos, replace=False)
    else:
        pos_index = pos_index[:0]

    n_neg = min(batch_size - n_pos, neg_index.size)
    if n_neg > 0:
        neg_index = rng.choice(neg_index, size=n_neg, replace=False)
    else:
        neg_index = neg_index[:0]

    return RoiSample(positive_indices=pos_index.astype(np.int64), negative_indices=neg_index.astype(np.int64))
