"""
Missing-Rate Computation

The missing rate of a few-shot split is the share of in-scope instances on
the few-shot training images that carry no annotation in the split. The
training images are the images hosting at least one selected shot.

Two scopes are supported:
- novel-only (FSOD/FSIS): only novel-class instances are counted
- base-plus-novel (gFSOD/gFSIS): base-class instances co-occurring on the
  shot images are counted too, which is why the generalized rate is higher
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import InvalidInputError, ReferentialIntegrityError, UndefinedRateError
from ..logger import get_logger
from .coco_io import AnnotationSet, SplitSpec

logger = get_logger(__name__)

SCOPE_KINDS = ("novel-only", "base-plus-novel")


@dataclass(frozen=True)
class ClassScope:
    """
    Category sets and the scope kind.

    Attributes:
        kind: "novel-only" or "base-plus-novel"
        base: Base category ids
        novel: Novel category ids (disjoint from base)
    """
    kind: str
    base: FrozenSet[int]
    novel: FrozenSet[int]

    def __post_init__(self):
        if self.kind not in SCOPE_KINDS:
            raise InvalidInputError(f"Unknown scope kind {self.kind!r}; expected one of {SCOPE_KINDS}")
        overlap = self.base & self.novel
        if overlap:
            raise InvalidInputError(f"Base and novel categories overlap: {sorted(overlap)}")

    @classmethod
    def build(cls, kind: str, base: Iterable[int], novel: Iterable[int]) -> "ClassScope":
        return cls(kind=kind, base=frozenset(int(c) for c in base), novel=frozenset(int(c) for c in novel))

    @property
    def label(self) -> str:
        return "fsod" if self.kind == "novel-only" else "gfsod"

    @property
    def categories(self) -> FrozenSet[int]:
        if self.kind == "novel-only":
            return self.novel
        return self.base | self.novel


@dataclass(frozen=True)
class ImageInstance:
    """Minimal per-instance record used by the tally."""
    instance_id: object
    category: int
    labeled: bool
    crowd: bool = False


@dataclass
class CategoryCount:
    present: int = 0
    labeled: int = 0

    @property
    def missing_rate(self) -> Optional[float]:
        if self.present == 0:
            return None
        return (self.present - self.labeled) / self.present


@dataclass
class MissingRateReport:
    """
    Result of a missing-rate computation.

    Attributes:
        scope: Scope label ("fsod" / "gfsod" / "custom")
        shots: K of the split
        present: In-scope instances on training images (the denominator)
        labeled: In-scope labeled instances on training images
        per_category: Category id -> counts
        per_image: Training image id -> counts
        warnings: Non-fatal observations
    """
    scope: str
    shots: int
    present: int
    labeled: int
    per_category: Dict[int, CategoryCount] = field(default_factory=dict)
    per_image: Dict[object, CategoryCount] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    @property
    def missing(self) -> int:
        return self.present - self.labeled

    @property
    def rate(self) -> float:
        return self.missing / self.present

    def per_category_rates(self) -> Dict[int, Optional[float]]:
        return {c: cnt.missing_rate for c, cnt in sorted(self.per_category.items())}

    def rows(self, category_names: Optional[Mapping[int, str]] = None) -> List[dict]:
        """CSV rows: one per category plus an overall row."""
        names = category_names or {}
        out = []
        for cat, cnt in sorted(self.per_category.items()):
            out.append({
                "scope": self.scope,
                "shot": self.shots,
                "category": names.get(cat, str(cat)),
                "present": cnt.present,
                "labeled": cnt.labeled,
                "missing_rate": cnt.missing_rate,
            })
        out.append({
            "scope": self.scope,
            "shot": self.shots,
            "category": "all",
            "present": self.present,
            "labeled": self.labeled,
            "missing_rate": self.rate,
        })
        return out

    def to_dict(self) -> dict:
        return {
            "scope": self.scope,
            "shots": self.shots,
            "present": self.present,
            "labeled": self.labeled,
            "missing_rate": self.rate,
            "per_category": {
                str(c): {"present": cnt.present, "labeled": cnt.labeled, "missing_rate": cnt.missing_rate}
                for c, cnt in sorted(self.per_category.items())
            },
            "training_images": len(self.per_image),
            "warnings": list(self.warnings),
        }


def tally_missing_rate(
    images: Mapping[object, Sequence[ImageInstance]],
    scope_categories: Iterable[int],
    shots: int,
    scope_label: str = "custom",
    include_crowd: bool = False,
    count_images_per_category: bool = False,
) -> MissingRateReport:
    """
    Count present and labeled in-scope instances on the training images.

    Args:
        images: Image id -> all instances on that image, with labeled flags
        scope_categories: Categories counted in the rate
        shots: K, echoed in the report
        scope_label: Label echoed in the report rows
        include_crowd: Count crowd-flagged instances
        count_images_per_category: Count an image once per category whose
            shots it hosts, instead of once overall

    Returns:
        MissingRateReport
    """
    scope = frozenset(scope_categories)
    if not scope:
        raise InvalidInputError("Missing-rate scope must not be empty")

    def counted(inst: ImageInstance) -> bool:
        return inst.category in scope and (include_crowd or not inst.crowd)

    # image id -> number of times it enters the training set
    multiplicity: Dict[object, int] = {}
    for image_id, instances in images.items():
        shot_categories = {i.category for i in instances if i.labeled}
        if not shot_categories:
            continue
        multiplicity[image_id] = len(shot_categories) if count_images_per_category else 1

    report = MissingRateReport(scope=scope_label, shots=shots, present=0, labeled=0)
    for cat in sorted(scope):
        report.per_category[cat] = CategoryCount()

    for image_id in sorted(multiplicity, key=str):
        times = multiplicity[image_id]
        image_count = CategoryCount()
        for inst in images[image_id]:
            if not counted(inst):
                continue
            cat_count = report.per_category[inst.category]
            cat_count.present += times
            image_count.present += times
            if inst.labeled:
                cat_count.labeled += times
                image_count.labeled += times
        report.per_image[image_id] = image_count
        report.present += image_count.present
        report.labeled += image_count.labeled

    if report.present == 0:
        raise UndefinedRateError(
            f"No in-scope instances on the {len(multiplicity)} training images; missing rate undefined"
        )
    return report


def compute_missing_rate(
    anns: AnnotationSet,
    split: SplitSpec,
    scope: ClassScope,
    include_crowd: bool = False,
    count_images_per_category: bool = False,
) -> MissingRateReport:
    """
    Missing rate of a few-shot split over a COCO-style annotation set.

    Training images are the distinct images hosting at least one split
    annotation. The denominator counts every in-scope annotation on those
    images; the numerator subtracts the in-scope split annotations.

    Args:
        anns: Parsed annotation set
        split: Parsed split referencing annotations of anns
        scope: Categories to count
        include_crowd: Count crowd-flagged annotations
        count_images_per_category: Alternate image-counting convention

    Returns:
        MissingRateReport with per-category and per-image counts
    """
    unknown = sorted(c for c in scope.categories if c not in anns.categories)
    if unknown:
        raise ReferentialIntegrityError("Scope references unknown category ids", unknown)

    labeled_ids = split.annotation_ids()
    shot_images = {anns.annotations[a].image_id for a in labeled_ids}

    images: Dict[int, List[ImageInstance]] = {img: [] for img in shot_images}
    for ann in anns.annotations.values():
        if ann.image_id in images:
            images[ann.image_id].append(ImageInstance(
                instance_id=ann.id,
                category=ann.category_id,
                labeled=ann.id in labeled_ids,
                crowd=bool(ann.iscrowd),
            ))

    report = tally_missing_rate(
        images,
        scope.categories,
        shots=split.shots,
        scope_label=scope.label,
        include_crowd=include_crowd,
        count_images_per_category=count_images_per_category,
    )
    report.warnings.extend(split.warnings)
    logger.info(
        "Missing rate (%s, %d-shot): %.4f over %d training images (%d/%d missing)",
        scope.label, split.shots, report.rate, len(report.per_image), report.missing, report.present,
    )
    return report


def average_rates(reports: Sequence[MissingRateReport]) -> Tuple[float, float]:
    """Mean and standard deviation of overall rates across splits (e.g. seeds)."""
    if not reports:
        raise InvalidInputError("No reports to average")
    rates = np.array([r.rate for r in reports], dtype=np.float64)
    std = float(rates.std(ddof=1)) if rates.size > 1 else 0.0
    return float(rates.mean()), std
