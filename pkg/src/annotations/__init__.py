"""
COCO-style annotation and split files, and missing-rate computation.
"""

from .coco_io import (
    AnnotationSet,
    SplitSpec,
    dump_annotations,
    dump_split,
    import_tfa_split,
    parse_annotations,
    parse_split,
)
from .missing_rate import (
    ClassScope,
    MissingRateReport,
    average_rates,
    compute_missing_rate,
    tally_missing_rate,
)

__all__ = [
    'AnnotationSet',
    'SplitSpec',
    'parse_annotations',
    'parse_split',
    'import_tfa_split',
    'dump_annotations',
    'dump_split',
    'ClassScope',
    'MissingRateReport',
    'compute_missing_rate',
    'tally_missing_rate',
    'average_rates',
]
