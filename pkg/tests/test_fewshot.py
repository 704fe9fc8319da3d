import numpy as np
import pytest

from src.annotations.coco_io import AnnotationSet
from src.annotations.missing_rate import ClassScope, compute_missing_rate
from src.config import SimConfig
from src.core.detection import Box
from src.errors import ConfigurationError, InvalidInputError, UndefinedRateError
from src.simulation.fewshot import (
    FeatureModel,
    FewShotSplit,
    apply_split,
    export_synthetic_dataset,
    featurize_ground_truth,
    generate_proposals,
    generate_scenes,
    make_fewshot_split,
    synthesize_features,
    synthetic_missing_rate,
    true_classes,
)

from .conftest import make_scene


def test_generate_scenes_deterministic(small_sim_config):
    a = generate_scenes(small_sim_config, np.random.default_rng(3))
    b = generate_scenes(small_sim_config, np.random.default_rng(3))
    assert a == b
    assert len(a) == 30
    lo, hi = small_sim_config.instances_per_scene
    for scene in a:
        assert lo <= len(scene.instances) <= hi
        assert not scene.has_labels
        for inst in scene.instances:
            assert 0 <= inst.category < 3
            assert 0.0 <= inst.box.x1 <= inst.box.x2 <= 1.0


def test_generate_scenes_defaults_to_config_seed(small_sim_config):
    assert generate_scenes(small_sim_config) == generate_scenes(small_sim_config)


def test_split_takes_k_per_class(small_sim_config):
    scenes = generate_scenes(small_sim_config, np.random.default_rng(0))
    split = make_fewshot_split(scenes, 2, np.random.default_rng(1), 3)
    for c, refs in split.labeled_refs.items():
        assert len(refs) == 2
        for scene_id, idx in refs:
            assert scenes[scene_id].instances[idx].category == c
    assert split.num_labeled == 6


def test_split_is_nested_across_k(small_sim_config):
    scenes = generate_scenes(small_sim_config, np.random.default_rng(0))
    previous = set()
    for k in (1, 2, 3, 5):
        refs = make_fewshot_split(scenes, k, np.random.default_rng(9), 3).refs()
        assert previous <= refs
        previous = refs


def test_split_caps_at_available():
    scenes = [make_scene(0, ((0, 0, 0.2, 0.2), 0, False), ((0.5, 0.5, 0.7, 0.7), 1, False))]
    split = make_fewshot_split(scenes, 10, np.random.default_rng(0), 2)
    assert split.labeled_refs == {0: [(0, 0)], 1: [(0, 1)]}


def test_split_warns_on_absent_class():
    cfg = SimConfig(num_scenes=10, num_fg_classes=3, class_weights=(1.0, 1.0, 0.0))
    scenes = generate_scenes(cfg)
    split = make_fewshot_split(scenes, 1, np.random.default_rng(0), 3)
    assert split.labeled_refs[2] == []
    assert len(split.warnings) == 1


def test_split_rejects_zero_shots():
    with pytest.raises(ConfigurationError):
        make_fewshot_split([], 0, np.random.default_rng(0))


def test_apply_split_marks_exactly_the_shots(small_sim_config):
    scenes = generate_scenes(small_sim_config, np.random.default_rng(0))
    split = make_fewshot_split(scenes, 3, np.random.default_rng(1), 3)
    labeled = apply_split(scenes, split)
    marked = {(s.scene_id, i) for s in labeled for i, g in enumerate(s.instances) if g.labeled}
    assert marked == split.refs()
    # originals untouched
    assert not any(s.has_labels for s in scenes)


def test_proposal_count():
    scene = make_scene(
        0,
        ((0.1, 0.1, 0.3, 0.3), 0, True),
        ((0.5, 0.5, 0.7, 0.7), 1, False),
        ((0.2, 0.6, 0.4, 0.8), 2, False),
    )
    proposals = generate_proposals(scene, SimConfig(num_fg_classes=3), np.random.default_rng(0))
    assert len(proposals) == 32
    for p in proposals:
        assert 0.0 <= p.x1 <= p.x2 <= 1.0
        assert 0.0 <= p.y1 <= p.y2 <= 1.0


def test_true_classes_ignore_labels():
    scene = make_scene(0, ((0, 0, 0.2, 0.2), 0, True), ((0.5, 0.5, 0.7, 0.7), 1, False))
    proposals = [Box(0, 0, 0.2, 0.2), Box(0.5, 0.5, 0.7, 0.7), Box(0.9, 0.9, 1.0, 1.0)]
    assert true_classes(proposals, scene, 2).tolist() == [0, 1, 2]


def test_noiseless_features_are_prototypes():
    fm = FeatureModel(prototypes=4.0 * np.eye(3), noise_scale=0.0)
    scene = make_scene(0, ((0, 0, 0.2, 0.2), 1, False))
    feats = synthesize_features([Box(0, 0, 0.2, 0.2), Box(0.8, 0.8, 0.9, 0.9)], scene, fm, np.random.default_rng(0))
    assert np.array_equal(feats, [[0, 4, 0], [0, 0, 4]])


def test_feature_model_validation():
    fm = FeatureModel.from_config(SimConfig(num_fg_classes=4))
    assert fm.num_fg_classes == 4
    assert fm.dim == 5
    with pytest.raises(InvalidInputError):
        FeatureModel(prototypes=np.zeros((3, 2)), noise_scale=1.0)
    with pytest.raises(InvalidInputError):
        FeatureModel(prototypes=np.eye(2), noise_scale=1.0)
    with pytest.raises(InvalidInputError):
        FeatureModel(prototypes=np.eye(3), noise_scale=-1.0)


def test_featurize_ground_truth_covers_every_instance(small_sim_config):
    scenes = generate_scenes(small_sim_config, np.random.default_rng(0))
    fm = FeatureModel.from_config(small_sim_config)
    feats, classes = featurize_ground_truth(scenes, fm, np.random.default_rng(1))
    assert feats.shape == (sum(len(s.instances) for s in scenes), fm.dim)
    assert classes.tolist() == [g.category for s in scenes for g in s.instances]


def test_synthetic_missing_rate_single_scene():
    scene = make_scene(0, *[((0.1 * i, 0.1 * i, 0.1 * i + 0.1, 0.1 * i + 0.1), 0, False) for i in range(4)])
    one = FewShotSplit(shots_per_class=1, labeled_refs={0: [(0, 0)]})
    two = FewShotSplit(shots_per_class=2, labeled_refs={0: [(0, 0), (0, 1)]})
    assert synthetic_missing_rate([scene], one, [0]).rate == pytest.approx(0.75)
    assert synthetic_missing_rate([scene], two, [0]).rate == pytest.approx(0.5)


def test_synthetic_missing_rate_undefined_scope():
    scene = make_scene(0, ((0, 0, 0.2, 0.2), 0, False))
    split = FewShotSplit(shots_per_class=1, labeled_refs={0: [(0, 0)]})
    with pytest.raises(UndefinedRateError):
        synthetic_missing_rate([scene], split, ClassScope.build("novel-only", [0], [1]))


def test_export_matches_file_based_rate():
    cfg = SimConfig(num_scenes=25, num_fg_classes=4, num_base_classes=2)
    scenes = generate_scenes(cfg, np.random.default_rng(4))
    split = make_fewshot_split(scenes, 2, np.random.default_rng(5), 4)
    aset, split_spec = export_synthetic_dataset(scenes, split, 4)
    assert isinstance(aset, AnnotationSet)
    assert len(aset.images) == 25
    assert len(aset.annotations) == sum(len(s.instances) for s in scenes)
    for kind in ("novel-only", "base-plus-novel"):
        in_memory = synthetic_missing_rate(scenes, split, ClassScope.build(kind, cfg.base_classes, cfg.novel_classes))
        on_file = compute_missing_rate(aset, split_spec, ClassScope.build(kind, [1, 2], [3, 4]))
        assert (on_file.missing, on_file.present) == (in_memory.missing, in_memory.present)
        assert on_file.rate == in_memory.rate
