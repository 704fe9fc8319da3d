"""
Experiment-scale checks. Deselect with ``-m "not slow"``.
"""

import os
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from src.annotations.coco_io import import_tfa_split, parse_annotations
from src.annotations.missing_rate import ClassScope, average_rates, compute_missing_rate
from src.config import ExperimentConfig, SimConfig, TrainConfig
from src.pipeline import run_experiment

pytestmark = pytest.mark.slow

SEEDS = list(range(10))

# PASCAL VOC classes in COCO category ids
COCO_NOVEL_IDS = [1, 2, 3, 4, 5, 6, 7, 9, 16, 17, 18, 19, 20, 21, 44, 62, 63, 64, 67, 72]


def _m_recall_by_loss(rows):
    out = defaultdict(dict)
    for r in rows:
        out[r["loss"]][r["seed"]] = r["m_recall"]
    return out


def test_decoupled_head_recalls_more_under_missing_labels():
    config = ExperimentConfig(seeds=SEEDS, shots=[1], sim=SimConfig(), train=TrainConfig())
    rows, _, errors = run_experiment(config)
    assert errors == []
    assert np.mean([r["missing_rate"] for r in rows]) >= 0.7

    recall = _m_recall_by_loss(rows)
    gains = np.array([recall["dc"][s] - recall["ce"][s] for s in SEEDS])
    assert (gains > 0).sum() >= 9
    assert gains.mean() >= 0.10


def test_heads_agree_without_missing_labels():
    config = ExperimentConfig(seeds=SEEDS, shots=[1000], sim=SimConfig(), train=TrainConfig())
    rows, _, errors = run_experiment(config)
    assert errors == []
    assert all(r["missing_rate"] == 0.0 for r in rows)

    recall = _m_recall_by_loss(rows)
    dc = np.mean([recall["dc"][s] for s in SEEDS])
    ce = np.mean([recall["ce"][s] for s in SEEDS])
    assert abs(dc - ce) <= 0.03


@pytest.mark.parametrize("k, expected", [(1, 0.833), (5, 0.803), (10, 0.767)])
def test_coco_generalized_missing_rate(k, expected):
    annotations = os.environ.get("DCLAB_COCO_ANNOTATIONS")
    split_dir = os.environ.get("DCLAB_COCO_SPLIT_DIR")
    if not annotations or not split_dir:
        pytest.skip("set DCLAB_COCO_ANNOTATIONS and DCLAB_COCO_SPLIT_DIR to run")

    anns = parse_annotations(annotations)
    by_seed = defaultdict(list)
    for path in Path(split_dir).glob(f"**/full_box_{k}shot_*_trainval.json"):
        by_seed[path.parent].append(path)
    if not by_seed:
        pytest.skip(f"no {k}-shot split files under {split_dir}")

    novel = [c for c in COCO_NOVEL_IDS if c in anns.categories]
    scope = ClassScope.build("base-plus-novel", set(anns.categories) - set(novel), novel)
    reports = [
        compute_missing_rate(anns, import_tfa_split(sorted(paths), anns, shots=k), scope)
        for _, paths in sorted(by_seed.items())
    ]
    mean, _ = average_rates(reports)
    assert mean == pytest.approx(expected, abs=0.01)
