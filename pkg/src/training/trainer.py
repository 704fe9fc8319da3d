"""
Classifier Fine-Tuning Loop

Each training scene is featurized once: proposals, assignment against the
LABELED instances only, ROI sampling and feature synthesis. Every step then
applies one gradient-descent update on the cached batches of its scenes.

train_paired runs several loss kinds off one batch stream: every classifier
starts from the same initialisation and sees the same scenes, proposals,
samples and features; only the loss and its gradient differ.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..config import SimConfig, TrainConfig
from ..core.dcloss import build_image_mask
from ..core.detection import assign_labels, sample_rois
from ..errors import ConfigurationError
from ..logger import get_logger
from ..simulation.fewshot import (
    FeatureModel,
    FewShotSplit,
    SyntheticScene,
    apply_split,
    generate_proposals,
    synthesize_features,
)
from .classifier import LinearClassifier, backprop_image, init_classifier, roi_batch, sgd_step

logger = get_logger(__name__)


@dataclass(frozen=True)
class TrainingBatch:
    """Sampled ROIs of one training scene."""
    scene_id: int
    features: np.ndarray
    labels: np.ndarray
    mask: np.ndarray

    @property
    def n(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_positives(self) -> int:
        return int(np.sum(self.labels < self.mask.size - 1))


@dataclass
class TrainResult:
    """
    Outcome of one training run.

    Attributes:
        loss_kind: "standard-ce" or "decoupled"
        classifier: Final parameters
        history: Loss of every step (mean over the step's images)
        epochs: Epoch index of every step
    """
    loss_kind: str
    classifier: LinearClassifier
    history: List[float] = field(default_factory=list)
    epochs: List[int] = field(default_factory=list)

    def epoch_means(self) -> List[float]:
        if not self.history:
            return []
        history = np.asarray(self.history)
        epochs = np.asarray(self.epochs)
        return [float(history[epochs == e].mean()) for e in range(int(epochs.max()) + 1)]

    @property
    def final_loss(self) -> float:
        return self.history[-1]


class _Descent:
    """Plain descent, optionally with heavy-ball momentum and L2 weight decay."""

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self._velocity: Optional[Tuple[np.ndarray, np.ndarray]] = None

    def step(self, clf: LinearClassifier, grad_w: np.ndarray, grad_b: np.ndarray) -> LinearClassifier:
        if self.cfg.weight_decay > 0:
            grad_w = grad_w + self.cfg.weight_decay * clf.weights
        if self.cfg.momentum > 0:
            if self._velocity is None:
                self._velocity = (np.zeros_like(grad_w), np.zeros_like(grad_b))
            v_w, v_b = self._velocity
            self._velocity = (self.cfg.momentum * v_w + grad_w, self.cfg.momentum * v_b + grad_b)
            grad_w, grad_b = self._velocity
        return sgd_step(clf, grad_w, grad_b, self.cfg.learning_rate)


def training_scenes(scenes: Sequence[SyntheticScene]) -> List[SyntheticScene]:
    """Scenes hosting at least one labeled instance."""
    return [s for s in scenes if s.has_labels]


def build_training_batch(scene: SyntheticScene, sim_cfg: SimConfig, fm: FeatureModel,
                         cfg: TrainConfig, rng: np.random.Generator) -> TrainingBatch:
    """
    Proposals, assignment, sampling and features for one scene.

    The mask is built from the scene's labeled classes; proposals on
    unlabeled instances are assigned background but carry their true
    class's features.
    """
    c = sim_cfg.num_fg_classes
    proposals = generate_proposals(scene, sim_cfg, rng)
    assignments = assign_labels(proposals, scene.instances, c, fg_threshold=cfg.fg_threshold)
    sample = sample_rois(assignments, rng, c, batch_size=cfg.batch_size, positive_fraction=cfg.positive_fraction)
    picked = [proposals[i] for i in sample.indices]
    labels = np.array([assignments[i].assigned_label for i in sample.indices], dtype=np.int64)
    features = synthesize_features(picked, scene, fm, rng)
    return TrainingBatch(
        scene_id=scene.scene_id,
        features=features,
        labels=labels,
        mask=build_image_mask(scene.labeled_classes(), c),
    )


def iter_training_batches(scenes: Sequence[SyntheticScene], sim_cfg: SimConfig, fm: FeatureModel,
                          cfg: TrainConfig, rng: np.random.Generator) -> Iterator[Tuple[int, List[TrainingBatch]]]:
    """
    Yield (epoch, batches) for cfg.steps steps.

    Every epoch visits the training scenes in a fresh random order,
    cfg.images_per_step scenes per step. A scene's batch is built on its
    first visit and reused by every later epoch.
    """
    pool = training_scenes(scenes)
    if not pool:
        raise ConfigurationError("Dataset has no labeled instances; nothing to train on")

    per_epoch = math.ceil(len(pool) / cfg.images_per_step)
    cache: Dict[int, TrainingBatch] = {}
    order: List[int] = []
    for step in range(cfg.steps):
        epoch, slot = divmod(step, per_epoch)
        if slot == 0:
            order = list(rng.permutation(len(pool)))
        chunk = order[slot * cfg.images_per_step:(slot + 1) * cfg.images_per_step]
        for i in chunk:
            if i not in cache:
                cache[i] = build_training_batch(pool[i], sim_cfg, fm, cfg, rng)
        yield epoch, [cache[i] for i in chunk]


def _update(clf: LinearClassifier, batches: Sequence[TrainingBatch], loss_kind: str,
            descent: _Descent) -> Tuple[LinearClassifier, float]:
    loss_sum = 0.0
    grad_w = np.zeros_like(clf.weights)
    grad_b = np.zeros_like(clf.biases)
    for tb in batches:
        batch = roi_batch(clf, tb.features, tb.labels, tb.mask)
        loss, g_w, g_b = backprop_image(clf, batch, tb.features, loss_kind)
        loss_sum += loss
        grad_w += g_w
        grad_b += g_b
    if len(batches) > 1:
        k = len(batches)
        return descent.step(clf, grad_w / k, grad_b / k), loss_sum / k
    return descent.step(clf, grad_w, grad_b), loss_sum


def _prepare(scenes, split, sim_cfg: Optional[SimConfig], fm: Optional[FeatureModel]):
    sim_cfg = sim_cfg or SimConfig()
    fm = fm or FeatureModel.from_config(sim_cfg)
    labeled = apply_split(scenes, split) if split is not None else list(scenes)
    return labeled, sim_cfg, fm


def _streams(seed: int) -> Tuple[np.random.Generator, np.random.Generator]:
    init_seq, data_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(data_seq)


def train_paired(
    scenes: Sequence[SyntheticScene],
    split: Optional[FewShotSplit],
    cfg: TrainConfig,
    loss_kinds: Sequence[str],
    sim_cfg: Optional[SimConfig] = None,
    feature_model: Optional[FeatureModel] = None,
) -> Dict[str, TrainResult]:
    """
    Train one classifier per loss kind on a shared batch stream.

    Args:
        scenes: Dataset (labeled flags are replaced by split when given)
        split: K-shot split, or None to use the scenes' own flags
        cfg: Schedule; cfg.loss_kind is ignored in favour of loss_kinds
        loss_kinds: Losses to run side by side
        sim_cfg: Proposal and feature parameters (defaults when omitted)
        feature_model: Overrides the model derived from sim_cfg

    Returns:
        loss kind -> TrainResult
    """
    if not loss_kinds:
        raise ConfigurationError("At least one loss kind is required")
    labeled, sim_cfg, fm = _prepare(scenes, split, sim_cfg, feature_model)
    init_rng, data_rng = _streams(cfg.seed)

    start = init_classifier(fm.dim, fm.num_fg_classes, init_rng, scale=cfg.init_scale)
    results = {kind: TrainResult(kind, start.copy()) for kind in loss_kinds}
    descents = {kind: _Descent(cfg) for kind in loss_kinds}

    logger.debug("Training %s for %d steps on %d scenes", list(loss_kinds), cfg.steps,
                 len(training_scenes(labeled)))
    for epoch, batches in iter_training_batches(labeled, sim_cfg, fm, cfg, data_rng):
        for kind, result in results.items():
            result.classifier, loss = _update(result.classifier, batches, kind, descents[kind])
            result.history.append(loss)
            result.epochs.append(epoch)

    for kind, result in results.items():
        logger.debug("%s final loss %.6f", kind, result.final_loss)
    return results


def train(
    scenes: Sequence[SyntheticScene],
    split: Optional[FewShotSplit],
    cfg: TrainConfig,
    sim_cfg: Optional[SimConfig] = None,
    feature_model: Optional[FeatureModel] = None,
) -> TrainResult:
    """Train a single classifier with cfg.loss_kind."""
    return train_paired(scenes, split, cfg, [cfg.loss_kind], sim_cfg, feature_model)[cfg.loss_kind]
