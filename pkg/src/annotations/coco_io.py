"""
COCO-Style Annotation and Split Files

Reads and writes the subset of the COCO object-detection format that the
missing-rate audit needs:

- ``images``: id, width, height, file_name
- ``annotations``: id, image_id, category_id, bbox [x, y, w, h], iscrowd
- ``categories``: id, name

Every other key (segmentation, area, licenses, info, ...) is ignored.

Split files name the labeled shots per category:

    {"shots": K, "per_category": {"<category id>": [annotation ids]}}

TFA-style split folders (one COCO-style file per class whose ``annotations``
array holds the selected shots) can be imported as well.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator

from ..errors import AnnotationParseError, ReferentialIntegrityError
from ..logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


class ImageRecord(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True)

    id: int
    width: float = Field(ge=0)
    height: float = Field(ge=0)
    file_name: str = ""


class AnnotationRecord(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True)

    id: int
    image_id: int
    category_id: int
    bbox: List[float] = Field(min_length=4, max_length=4)
    iscrowd: int = 0

    @field_validator("bbox")
    @classmethod
    def _non_negative_extent(cls, v: List[float]) -> List[float]:
        if v[2] < 0 or v[3] < 0:
            raise ValueError(f"bbox width/height must be non-negative, got {v}")
        return v


class CategoryRecord(BaseModel):
    model_config = ConfigDict(extra="ignore", frozen=True)

    id: int
    name: str


_IMAGES = TypeAdapter(List[ImageRecord])
_ANNOTATIONS = TypeAdapter(List[AnnotationRecord])
_CATEGORIES = TypeAdapter(List[CategoryRecord])


@dataclass
class AnnotationSet:
    """
    Fully resolved annotation file.

    Attributes:
        images: image id -> record
        annotations: annotation id -> record
        categories: category id -> record
    """
    images: Dict[int, ImageRecord] = field(default_factory=dict)
    annotations: Dict[int, AnnotationRecord] = field(default_factory=dict)
    categories: Dict[int, CategoryRecord] = field(default_factory=dict)

    @property
    def counts(self):
        return len(self.images), len(self.annotations), len(self.categories)

    def category_names(self) -> Dict[int, str]:
        return {cid: c.name for cid, c in self.categories.items()}

    def to_dict(self) -> dict:
        return {
            "images": [r.model_dump() for _, r in sorted(self.images.items())],
            "annotations": [r.model_dump() for _, r in sorted(self.annotations.items())],
            "categories": [r.model_dump() for _, r in sorted(self.categories.items())],
        }


@dataclass
class SplitSpec:
    """
    Labeled shots of a few-shot split.

    Attributes:
        shots: K
        per_category: category id -> selected annotation ids
        warnings: Non-fatal observations made while parsing
    """
    shots: int
    per_category: Dict[int, List[int]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def annotation_ids(self) -> Set[int]:
        return {a for ids in self.per_category.values() for a in ids}

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "per_category": {str(c): list(ids) for c, ids in sorted(self.per_category.items())},
        }


def _load_json(path: PathLike):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise AnnotationParseError(f"Cannot read file: {e}", path=str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise AnnotationParseError(e.msg, path=str(path), line=e.lineno, column=e.colno) from e


def _validate(adapter: TypeAdapter, payload, key: str, path: str):
    try:
        return adapter.validate_python(payload)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first["loc"])
        raise AnnotationParseError(f"Invalid {key}[{where}]: {first['msg']}", path=path) from e


def annotations_from_dict(data, source: str = "<input>") -> AnnotationSet:
    """
    Build and cross-check an AnnotationSet from decoded JSON.

    Args:
        data: Decoded top-level object
        source: Name used in error messages

    Returns:
        AnnotationSet with every reference resolved
    """
    if not isinstance(data, dict):
        raise AnnotationParseError("Top level must be an object", path=source)
    for key in ("images", "annotations", "categories"):
        if key not in data:
            raise AnnotationParseError(f"Missing required field: {key}", path=source)
        if not isinstance(data[key], list):
            raise AnnotationParseError(f"Field {key} must be an array", path=source)

    images = _validate(_IMAGES, data["images"], "images", source)
    annotations = _validate(_ANNOTATIONS, data["annotations"], "annotations", source)
    categories = _validate(_CATEGORIES, data["categories"], "categories", source)

    aset = AnnotationSet()
    for key, records, target in (
        ("images", images, aset.images),
        ("annotations", annotations, aset.annotations),
        ("categories", categories, aset.categories),
    ):
        for r in records:
            if r.id in target:
                raise AnnotationParseError(f"Duplicate {key} id {r.id}", path=source)
            target[r.id] = r

    dangling = sorted(
        a.id for a in aset.annotations.values()
        if a.image_id not in aset.images or a.category_id not in aset.categories
    )
    if dangling:
        raise ReferentialIntegrityError(f"{source}: annotations with unknown image or category id", dangling)
    return aset


def parse_annotations(path: PathLike) -> AnnotationSet:
    """
    Parse a COCO-style annotation file.

    Raises:
        AnnotationParseError: malformed JSON (with line/column) or records
        ReferentialIntegrityError: annotations pointing at unknown ids
    """
    aset = annotations_from_dict(_load_json(path), source=str(path))
    logger.info("Parsed %s: %d images, %d annotations, %d categories", path, *aset.counts)
    return aset


def split_from_dict(data, anns: AnnotationSet, source: str = "<input>") -> SplitSpec:
    """Validate a decoded split object against its annotation set."""
    if not isinstance(data, dict) or "per_category" not in data or "shots" not in data:
        raise AnnotationParseError('Split must be an object with "shots" and "per_category"', path=source)
    try:
        shots = int(data["shots"])
    except (TypeError, ValueError) as e:
        raise AnnotationParseError(f"Invalid shots value {data['shots']!r}", path=source) from e
    if not isinstance(data["per_category"], dict):
        raise AnnotationParseError("per_category must be an object", path=source)

    split = SplitSpec(shots=shots)
    unknown_categories, unknown_ids, mismatched = [], [], []
    for key, ids in data["per_category"].items():
        try:
            cat = int(key)
        except ValueError as e:
            raise AnnotationParseError(f"Category key {key!r} is not an integer id", path=source) from e
        if not isinstance(ids, list):
            raise AnnotationParseError(f"Shots of category {key} must be an array", path=source)
        if cat not in anns.categories:
            unknown_categories.append(cat)
            continue
        if not ids:
            msg = f"Category {cat} ({anns.categories[cat].name}) carries no shots"
            split.warnings.append(msg)
            logger.warning(msg)
        selected = []
        for a in ids:
            a = int(a)
            if a not in anns.annotations:
                unknown_ids.append(a)
            elif anns.annotations[a].category_id != cat:
                mismatched.append(a)
            else:
                selected.append(a)
        split.per_category[cat] = selected

    if unknown_categories:
        raise ReferentialIntegrityError(f"{source}: split names unknown categories", unknown_categories)
    if unknown_ids:
        raise ReferentialIntegrityError(f"{source}: split names unknown annotation ids", unknown_ids)
    if mismatched:
        raise ReferentialIntegrityError(f"{source}: split annotations filed under the wrong category", mismatched)
    return split


def parse_split(path: PathLike, anns: AnnotationSet) -> SplitSpec:
    """Parse and validate a split file against its annotation set."""
    return split_from_dict(_load_json(path), anns, source=str(path))


_TFA_SHOTS = re.compile(r"(\d+)shot")


def import_tfa_split(paths: Iterable[PathLike], anns: AnnotationSet, shots: Optional[int] = None) -> SplitSpec:
    """
    Convert TFA-style per-class split files into a SplitSpec.

    Each file is a COCO-style object whose ``annotations`` array holds the
    shots selected for one class. Annotation ids must exist in anns.

    Args:
        paths: Per-class split files
        anns: Companion annotation set
        shots: K; inferred from a "<K>shot" file name when omitted

    Returns:
        SplitSpec keyed by the annotations' own category ids
    """
    per_category: Dict[str, List[int]] = {}
    inferred = shots
    for p in paths:
        data = _load_json(p)
        if not isinstance(data, dict) or not isinstance(data.get("annotations"), list):
            raise AnnotationParseError("TFA split file needs an annotations array", path=str(p))
        if inferred is None:
            match = _TFA_SHOTS.search(Path(p).name)
            inferred = int(match.group(1)) if match else None
        for record in data["annotations"]:
            if not isinstance(record, dict) or "id" not in record:
                raise AnnotationParseError("TFA annotation without id", path=str(p))
            ann = anns.annotations.get(int(record["id"]))
            cat = ann.category_id if ann is not None else record.get("category_id", -1)
            per_category.setdefault(str(cat), []).append(int(record["id"]))
    if inferred is None:
        raise AnnotationParseError("Cannot infer shots from TFA file names; pass shots explicitly")
    return split_from_dict({"shots": inferred, "per_category": per_category}, anns, source="tfa-split")


def dump_annotations(aset: AnnotationSet, path: PathLike):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(aset.to_dict(), indent=1), encoding="utf-8")


def dump_split(split: SplitSpec, path: PathLike):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(split.to_dict(), indent=1), encoding="utf-8")
