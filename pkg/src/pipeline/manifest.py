"""
Run manifests, CSV output and cross-run reports.

A simulate run writes its rows as CSV and a JSON manifest beside it (or the
manifest alone with the machine format). Timestamps live in the manifest
header only, so CSV bodies are byte-identical across reruns.
"""

import json
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ValidationError

from .. import __version__
from ..config import ExperimentConfig
from ..errors import AnnotationParseError, IncompatibleManifestError, InvalidInputError
from ..logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
TOOL_NAME = "dclab"


class RunManifest(BaseModel):
    tool: str = TOOL_NAME
    version: str = __version__
    created_at: str
    wall_clock_seconds: float
    num_fg_classes: int
    feature_dim: int
    config: Dict[str, Any]
    rows: List[Dict[str, Any]]
    warnings: List[str] = []

    @classmethod
    def from_run(cls, config: ExperimentConfig, rows, wall_clock: float, warnings=()) -> "RunManifest":
        return cls(
            created_at=datetime.now().isoformat(timespec="seconds"),
            wall_clock_seconds=round(wall_clock, 3),
            num_fg_classes=config.sim.num_fg_classes,
            feature_dim=config.sim.feature_dim,
            config=config.model_dump(mode="json"),
            rows=list(rows),
            warnings=list(warnings),
        )


def rows_frame(rows: Sequence[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(list(rows))


def rows_to_csv(rows: Sequence[Dict[str, Any]]) -> str:
    return rows_frame(rows).to_csv(index=False, lineterminator="\n")


def manifest_path_for(csv_path: PathLike) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".manifest.json")


def write_run(manifest: RunManifest, out: PathLike, output_format: str = "csv") -> List[Path]:
    """
    Write a run to disk.

    Args:
        manifest: Completed run manifest
        out: Target path (CSV path, or JSON path for the machine format)
        output_format: "csv" or "machine"

    Returns:
        Paths written
    """
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(manifest.model_dump(mode="json"), indent=2)
    if output_format == "machine":
        out.write_text(payload, encoding="utf-8")
        return [out]
    out.write_text(rows_to_csv(manifest.rows), encoding="utf-8")
    side = manifest_path_for(out)
    side.write_text(payload, encoding="utf-8")
    logger.info("Wrote %d rows to %s (manifest %s)", len(manifest.rows), out, side)
    return [out, side]


def load_manifest(path: PathLike) -> RunManifest:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise AnnotationParseError(f"Cannot read manifest: {e}", path=str(path)) from e
    except json.JSONDecodeError as e:
        raise AnnotationParseError(e.msg, path=str(path), line=e.lineno, column=e.colno) from e
    try:
        return RunManifest.model_validate(data)
    except ValidationError as e:
        raise AnnotationParseError(f"Not a run manifest: {e.errors()[0]['msg']}", path=str(path)) from e


def merge_manifests(manifests: Sequence[RunManifest]) -> pd.DataFrame:
    """
    Pool the rows of compatible manifests.

    Raises:
        IncompatibleManifestError: class count or feature dimension differ
    """
    if not manifests:
        raise InvalidInputError("No manifests to merge")
    shapes = {(m.num_fg_classes, m.feature_dim) for m in manifests}
    if len(shapes) > 1:
        raise IncompatibleManifestError(
            f"Manifests disagree on (classes, feature dim): {sorted(shapes)}"
        )
    frame = pd.concat([rows_frame(m.rows) for m in manifests], ignore_index=True)
    duplicated = frame.duplicated(subset=["seed", "loss", "shots"])
    if duplicated.any():
        logger.warning("%d duplicated (seed, loss, shots) rows pooled", int(duplicated.sum()))
    return frame


def aggregate(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Mean and standard deviation of mRecall and missing rate per (shots, loss).

    The deviation is the sample deviation (ddof=1), 0 for a single seed.
    """
    grouped = frame.groupby(["shots", "loss"], sort=True)
    summary = grouped.agg(
        seeds=("seed", "nunique"),
        m_recall_mean=("m_recall", "mean"),
        m_recall_std=("m_recall", "std"),
        missing_rate_mean=("missing_rate", "mean"),
    ).reset_index()
    summary["m_recall_std"] = summary["m_recall_std"].fillna(0.0)
    return summary


def report(paths: Sequence[PathLike]) -> pd.DataFrame:
    """Aggregate summary over one or more manifest files."""
    return aggregate(merge_manifests([load_manifest(p) for p in paths]))
