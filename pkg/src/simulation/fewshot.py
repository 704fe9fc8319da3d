"""
Synthetic Few-Shot Scenes

A controlled stand-in for a real few-shot detection dataset:

- Scenes in the unit square hold several instances, each with a class and a
  box. An instance counts as one shot.
- A K-shot split labels K instances per class; every other instance stays in
  its scene, unlabeled. That is the missing-label phenomenon.
- Proposals are jittered copies of every instance (labeled or not) plus
  random background boxes.
- ROI features come from class prototypes. The class is decided by the
  TRUE content of the proposal (overlap with any instance), so a proposal on
  an unlabeled object looks like that object while the assigner labels it
  background.

All randomness flows from numpy Generators; scene i of a dataset uses the
i-th child stream of the dataset generator.
"""

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..annotations.coco_io import (
    AnnotationRecord,
    AnnotationSet,
    CategoryRecord,
    ImageRecord,
    SplitSpec,
)
from ..annotations.missing_rate import ClassScope, ImageInstance, MissingRateReport, tally_missing_rate
from ..config import SAMPLING_DEFAULTS, SimConfig
from ..core.detection import Box, GroundTruthInstance, boxes_to_array, iou_matrix
from ..errors import ConfigurationError, InvalidInputError
from ..logger import get_logger

logger = get_logger(__name__)

EXPORT_IMAGE_SIZE = 1000.0


@dataclass(frozen=True)
class SyntheticScene:
    scene_id: int
    instances: Tuple[GroundTruthInstance, ...]

    def labeled_classes(self) -> List[int]:
        return sorted({g.category for g in self.instances if g.labeled})

    @property
    def has_labels(self) -> bool:
        return any(g.labeled for g in self.instances)


@dataclass
class FewShotSplit:
    """
    K-shot selection over a scene collection.

    Attributes:
        shots_per_class: K
        labeled_refs: class -> [(scene id, instance index), ...]
        warnings: Classes that could not be given any shot
    """
    shots_per_class: int
    labeled_refs: Dict[int, List[Tuple[int, int]]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def refs(self) -> set:
        return {ref for refs in self.labeled_refs.values() for ref in refs}

    @property
    def num_labeled(self) -> int:
        return sum(len(r) for r in self.labeled_refs.values())


@dataclass(frozen=True)
class FeatureModel:
    """
    Class-conditional Gaussian ROI features.

    Attributes:
        prototypes: (C+1, d) means; the last row is background
        noise_scale: Isotropic standard deviation
    """
    prototypes: np.ndarray
    noise_scale: float

    def __post_init__(self):
        p = np.asarray(self.prototypes, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 3:
            raise InvalidInputError("Prototypes need shape (C+1, d) with C >= 2")
        if self.noise_scale < 0:
            raise InvalidInputError(f"noise_scale must be non-negative, got {self.noise_scale}")
        dists = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=2)
        if np.any(dists[~np.eye(p.shape[0], dtype=bool)] == 0):
            raise InvalidInputError("Prototypes must be pairwise distinct")

    @classmethod
    def from_config(cls, cfg: SimConfig) -> "FeatureModel":
        """Scaled standard-basis prototypes in dimension C+1."""
        return cls(prototypes=cfg.prototype_scale * np.eye(cfg.feature_dim), noise_scale=cfg.noise_scale)

    @property
    def num_fg_classes(self) -> int:
        return self.prototypes.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.prototypes.shape[1]


def _random_box(rng: np.random.Generator, side_range: Tuple[float, float]) -> Box:
    cx, cy = rng.uniform(0.0, 1.0, size=2)
    w, h = rng.uniform(side_range[0], side_range[1], size=2)
    x1, x2 = np.clip([cx - w / 2, cx + w / 2], 0.0, 1.0)
    y1, y2 = np.clip([cy - h / 2, cy + h / 2], 0.0, 1.0)
    return Box(float(x1), float(y1), float(x2), float(y2))


def generate_scenes(cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> List[SyntheticScene]:
    """
    Draw a dataset of multi-instance scenes.

    Args:
        cfg: Simulation config
        rng: Dataset generator; defaults to one seeded with cfg.seed

    Returns:
        num_scenes scenes; every instance starts unlabeled
    """
    if not isinstance(cfg, SimConfig):
        raise ConfigurationError("generate_scenes expects a SimConfig")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)

    weights = None
    if cfg.class_weights:
        w = np.asarray(cfg.class_weights, dtype=np.float64)
        weights = w / w.sum()

    lo, hi = cfg.instances_per_scene
    scenes = []
    for scene_id, scene_rng in enumerate(rng.spawn(cfg.num_scenes)):
        n = int(scene_rng.integers(lo, hi + 1))
        instances = []
        for _ in range(n):
            category = int(scene_rng.choice(cfg.num_fg_classes, p=weights))
            instances.append(GroundTruthInstance(_random_box(scene_rng, cfg.box_side_range), category, False))
        scenes.append(SyntheticScene(scene_id=scene_id, instances=tuple(instances)))

    logger.debug("Generated %d scenes with %d instances", len(scenes), sum(len(s.instances) for s in scenes))
    return scenes


def make_fewshot_split(scenes: Sequence[SyntheticScene], k: int, rng: np.random.Generator,
                       num_fg_classes: Optional[int] = None) -> FewShotSplit:
    """
    Select K instances per class as the labeled shots.

    A full permutation of each class's instances is drawn and its first
    min(K, available) entries are kept, so for a fixed generator state the
    splits for increasing K are nested.

    Args:
        scenes: Dataset
        k: Shots per class (>= 1)
        rng: Split generator
        num_fg_classes: C; inferred from the data when omitted

    Returns:
        FewShotSplit (apply it with apply_split)
    """
    if k < 1:
        raise ConfigurationError(f"Shots per class must be >= 1, got {k}")

    by_class: Dict[int, List[Tuple[int, int]]] = {}
    for scene in scenes:
        for idx, inst in enumerate(scene.instances):
            by_class.setdefault(inst.category, []).append((scene.scene_id, idx))

    if num_fg_classes is None:
        num_fg_classes = max(by_class, default=-1) + 1

    split = FewShotSplit(shots_per_class=k)
    for c in range(num_fg_classes):
        refs = by_class.get(c, [])
        if not refs:
            msg = f"Class {c} has no instances in the dataset; it receives no shots"
            split.warnings.append(msg)
            logger.warning(msg)
            split.labeled_refs[c] = []
            continue
        order = rng.permutation(len(refs))
        split.labeled_refs[c] = sorted(refs[i] for i in order[: min(k, len(refs))])
    return split


def apply_split(scenes: Sequence[SyntheticScene], split: FewShotSplit) -> List[SyntheticScene]:
    """Return copies of the scenes with exactly the split's instances labeled."""
    refs = split.refs()
    out = []
    for scene in scenes:
        instances = tuple(
            replace(inst, labeled=(scene.scene_id, idx) in refs) for idx, inst in enumerate(scene.instances)
        )
        out.append(SyntheticScene(scene.scene_id, instances))
    return out


def _jitter_high(box: Box, scale: float, rng: np.random.Generator) -> Box:
    w, h = box.x2 - box.x1, box.y2 - box.y1
    d = rng.uniform(-scale, scale, size=4) * np.array([w, h, w, h])
    x1, y1, x2, y2 = box.as_array() + d
    x1, x2 = np.clip(sorted((x1, x2)), 0.0, 1.0)
    y1, y2 = np.clip(sorted((y1, y2)), 0.0, 1.0)
    return Box(float(x1), float(y1), float(x2), float(y2))


def _jitter_low(box: Box, shift_range: Tuple[float, float], rng: np.random.Generator) -> Box:
    w, h = box.x2 - box.x1, box.y2 - box.y1
    frac = rng.uniform(shift_range[0], shift_range[1])
    angle = rng.uniform(0.0, 2.0 * np.pi)
    dx, dy = frac * w * np.cos(angle), frac * h * np.sin(angle)
    x1, x2 = np.clip([box.x1 + dx, box.x2 + dx], 0.0, 1.0)
    y1, y2 = np.clip([box.y1 + dy, box.y2 + dy], 0.0, 1.0)
    return Box(float(x1), float(y1), float(x2), float(y2))


def generate_proposals(scene: SyntheticScene, cfg: SimConfig, rng: np.random.Generator) -> List[Box]:
    """
    Proposals for one scene.

    For every instance, labeled or not: cfg.high_jitters corner-perturbed
    copies (high overlap) and cfg.low_jitters translated copies (low overlap);
    then cfg.negatives_per_scene random background boxes.
    """
    proposals = []
    for inst in scene.instances:
        proposals.extend(_jitter_high(inst.box, cfg.high_jitter_scale, rng) for _ in range(cfg.high_jitters))
        proposals.extend(_jitter_low(inst.box, cfg.low_jitter_range, rng) for _ in range(cfg.low_jitters))
    proposals.extend(_random_box(rng, cfg.box_side_range) for _ in range(cfg.negatives_per_scene))
    return proposals


def true_classes(proposals: Sequence[Box], scene: SyntheticScene, num_fg_classes: int,
                 threshold: float = SAMPLING_DEFAULTS["fg_threshold"]) -> np.ndarray:
    """Class of what each proposal actually covers, against ALL instances."""
    if len(proposals) == 0:
        return np.zeros(0, dtype=np.int64)
    if not scene.instances:
        return np.full(len(proposals), num_fg_classes, dtype=np.int64)
    overlaps = iou_matrix(boxes_to_array(proposals), boxes_to_array([g.box for g in scene.instances]))
    best = overlaps.argmax(axis=1)
    hit = overlaps[np.arange(len(proposals)), best] >= threshold
    categories = np.array([g.category for g in scene.instances], dtype=np.int64)
    return np.where(hit, categories[best], num_fg_classes)


def synthesize_features(proposals: Sequence[Box], scene: SyntheticScene, fm: FeatureModel,
                        rng: np.random.Generator) -> np.ndarray:
    """(N, d) features: prototype of the true class plus Gaussian noise."""
    classes = true_classes(proposals, scene, fm.num_fg_classes)
    noise = rng.standard_normal((len(classes), fm.dim))
    return fm.prototypes[classes] + fm.noise_scale * noise


def synthesize_feature(proposal: Box, scene: SyntheticScene, fm: FeatureModel,
                       rng: np.random.Generator) -> np.ndarray:
    return synthesize_features([proposal], scene, fm, rng)[0]


def featurize_ground_truth(scenes: Sequence[SyntheticScene], fm: FeatureModel,
                           rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Features and classes of every ground-truth object, labeled or not.

    Returns:
        ((M, d) features, (M,) true classes)
    """
    feats, classes = [], []
    for scene in scenes:
        if not scene.instances:
            continue
        boxes = [g.box for g in scene.instances]
        feats.append(synthesize_features(boxes, scene, fm, rng))
        classes.extend(g.category for g in scene.instances)
    if not feats:
        return np.zeros((0, fm.dim)), np.zeros(0, dtype=np.int64)
    return np.concatenate(feats), np.asarray(classes, dtype=np.int64)


def _scope_categories(scope: Union[ClassScope, Iterable[int]]) -> Tuple[str, frozenset]:
    if isinstance(scope, ClassScope):
        return scope.label, scope.categories
    return "custom", frozenset(int(c) for c in scope)


def synthetic_missing_rate(scenes: Sequence[SyntheticScene], split: FewShotSplit,
                           scope: Union[ClassScope, Iterable[int]],
                           count_images_per_category: bool = False) -> MissingRateReport:
    """
    Missing rate of a synthetic split.

    Only scenes hosting at least one shot are training images. The rate is
    the share of in-scope instances on them that the split does not label.
    """
    label, categories = _scope_categories(scope)
    refs = split.refs()
    images = {
        scene.scene_id: [
            ImageInstance((scene.scene_id, idx), inst.category, (scene.scene_id, idx) in refs)
            for idx, inst in enumerate(scene.instances)
        ]
        for scene in scenes
    }
    return tally_missing_rate(
        images,
        categories,
        shots=split.shots_per_class,
        scope_label=label,
        count_images_per_category=count_images_per_category,
    )


def export_synthetic_dataset(scenes: Sequence[SyntheticScene], split: FewShotSplit,
                             num_fg_classes: int) -> Tuple[AnnotationSet, SplitSpec]:
    """
    Express a synthetic dataset and split in the COCO-style file model.

    Image ids are scene id + 1, category ids class + 1, annotation ids run
    from 1 in scene order; boxes are scaled to EXPORT_IMAGE_SIZE pixels.
    """
    aset = AnnotationSet()
    for c in range(num_fg_classes):
        aset.categories[c + 1] = CategoryRecord(id=c + 1, name=f"class_{c}")

    refs = split.refs()
    per_category: Dict[int, List[int]] = {c + 1: [] for c in range(num_fg_classes)}
    next_id = 1
    for scene in scenes:
        image_id = scene.scene_id + 1
        aset.images[image_id] = ImageRecord(
            id=image_id, width=EXPORT_IMAGE_SIZE, height=EXPORT_IMAGE_SIZE,
            file_name=f"scene_{scene.scene_id:06d}.png",
        )
        for idx, inst in enumerate(scene.instances):
            bbox = [v * EXPORT_IMAGE_SIZE for v in inst.box.to_xywh()]
            aset.annotations[next_id] = AnnotationRecord(
                id=next_id, image_id=image_id, category_id=inst.category + 1, bbox=bbox, iscrowd=0,
            )
            if (scene.scene_id, idx) in refs:
                per_category[inst.category + 1].append(next_id)
            next_id += 1

    return aset, SplitSpec(shots=split.shots_per_class, per_category=per_category)
