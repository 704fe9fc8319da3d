"""
Synthetic multi-instance scenes with K-shot splits.
"""

from .fewshot import (
    FeatureModel,
    FewShotSplit,
    SyntheticScene,
    apply_split,
    export_synthetic_dataset,
    featurize_ground_truth,
    generate_proposals,
    generate_scenes,
    make_fewshot_split,
    synthesize_feature,
    synthesize_features,
    synthetic_missing_rate,
)

__all__ = [
    'SyntheticScene',
    'FewShotSplit',
    'FeatureModel',
    'generate_scenes',
    'make_fewshot_split',
    'apply_split',
    'generate_proposals',
    'synthesize_feature',
    'synthesize_features',
    'featurize_ground_truth',
    'synthetic_missing_rate',
    'export_synthetic_dataset',
]
