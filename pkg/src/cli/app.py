"""
Command-line interface.

    python -m src.cli grad-check [--cases N] [--tolerance T] [--seed S]
    python -m src.cli simulate [--seeds 0-9] [--shots 1,5] [--loss both] ...
    python -m src.cli missing-rate ANNOTATIONS SPLIT [SPLIT ...] [--scope both]
    python -m src.cli report MANIFEST [MANIFEST ...]

Exit codes: 0 success, 1 tolerance or workflow failure, 2 usage, 3 input/parse.
"""

import json
import time
from enum import Enum
from pathlib import Path
from typing import List, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from .. import __version__
from ..annotations.coco_io import import_tfa_split, parse_annotations, parse_split
from ..annotations.missing_rate import ClassScope, average_rates, compute_missing_rate
from ..config import (
    GRAD_CHECK_DEFAULTS,
    LOSS_ALIASES,
    LOSS_KINDS,
    SIM_DEFAULTS,
    TRAIN_DEFAULTS,
    ExperimentConfig,
    SimConfig,
    TrainConfig,
    build_config,
    settings,
)
from ..errors import (
    AnnotationParseError,
    ConfigurationError,
    DCLabError,
    IncompatibleManifestError,
    InvalidInputError,
    ReferentialIntegrityError,
    UndefinedRateError,
)
from ..logger import get_logger, set_level
from ..pipeline.manifest import RunManifest, aggregate, report as aggregate_manifests, rows_frame, write_run
from ..pipeline.orchestrator import run_experiment
from ..training.gradcheck import CHECKS, run_grad_check

logger = get_logger(__name__)
console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_INPUT = 3

app = typer.Typer(
    name="dclab",
    help="Decoupling classifier lab: gradient checks, missing-label simulations and missing-rate audits.",
    add_completion=False,
    no_args_is_help=True,
)


class LossChoice(str, Enum):
    ce = "ce"
    dc = "dc"
    both = "both"


class ScopeChoice(str, Enum):
    fsod = "fsod"
    gfsod = "gfsod"
    both = "both"


class OutputFormat(str, Enum):
    csv = "csv"
    machine = "machine"


def parse_int_list(text: str) -> List[int]:
    """Parse "0,2,5" or "0-9" (or a mix) into a list of integers."""
    values: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part:
                lo, hi = (int(v) for v in part.split("-", 1))
                if hi < lo:
                    raise ValueError
                values.extend(range(lo, hi + 1))
            else:
                values.append(int(part))
        except ValueError:
            raise typer.BadParameter(f"Cannot parse {part!r} as an integer or range")
    if not values:
        raise typer.BadParameter("Expected at least one integer")
    return values


def _loss_kinds(choice: LossChoice) -> List[str]:
    if choice == LossChoice.both:
        return list(LOSS_KINDS)
    return [LOSS_ALIASES[choice.value]]


def _scopes(choice: ScopeChoice) -> List[str]:
    if choice == ScopeChoice.both:
        return ["fsod", "gfsod"]
    return [choice.value]


def _fail(message: str, code: int):
    err_console.print(f"[red]✗ {message}[/red]")
    raise typer.Exit(code=code)


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return "n/a"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging")):
    if verbose:
        set_level("DEBUG")


@app.command("version")
def version():
    """Print the tool version."""
    typer.echo(__version__)


@app.command("grad-check")
def grad_check(
    cases: int = typer.Option(GRAD_CHECK_DEFAULTS["cases"], "--cases", min=1, help="Random cases"),
    tolerance: float = typer.Option(GRAD_CHECK_DEFAULTS["tolerance"], "--tolerance", help="Max relative error"),
    seed: int = typer.Option(0, "--seed", min=0),
    h: float = typer.Option(GRAD_CHECK_DEFAULTS["h"], "--h", help="Finite-difference step"),
    output_format: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
):
    """Compare every analytic gradient with central finite differences."""
    try:
        result = run_grad_check(cases=cases, tolerance=tolerance, seed=seed, h=h)
    except InvalidInputError as e:
        _fail(str(e), EXIT_USAGE)

    if output_format == OutputFormat.machine:
        typer.echo(json.dumps(result.to_dict(), indent=2))
    else:
        table = Table(title=f"Gradient check ({cases} cases, seed {seed})")
        table.add_column("check")
        table.add_column("max relative error", justify="right")
        for check in CHECKS:
            table.add_row(check, f"{result.max_error(check):.3e}")
        table.add_row("overall", f"{result.max_error():.3e}")
        console.print(table)

    if not result.passed:
        _fail(f"max relative error {result.max_error():.3e} exceeds tolerance {tolerance:.1e}", EXIT_FAILURE)
    if output_format == OutputFormat.csv:
        console.print(f"[green]✓ passed (tolerance {tolerance:.1e})[/green]")


@app.command("simulate")
def simulate(
    seeds: Optional[str] = typer.Option(None, "--seeds", help='Seeds, e.g. "0-9" or "0,3,7"'),
    shots: str = typer.Option("1", "--shots", help='Shots per class, e.g. "1" or "1,5,10"'),
    classes: int = typer.Option(SIM_DEFAULTS["num_fg_classes"], "--classes", help="Foreground classes C"),
    base_classes: int = typer.Option(SIM_DEFAULTS["num_base_classes"], "--base-classes",
                                     help="Classes [0, B) treated as base for the gfsod scope"),
    scenes: int = typer.Option(SIM_DEFAULTS["num_scenes"], "--scenes"),
    noise: float = typer.Option(SIM_DEFAULTS["noise_scale"], "--noise", help="Feature noise sigma"),
    steps: int = typer.Option(TRAIN_DEFAULTS["steps"], "--steps"),
    lr: float = typer.Option(TRAIN_DEFAULTS["learning_rate"], "--lr"),
    momentum: float = typer.Option(TRAIN_DEFAULTS["momentum"], "--momentum"),
    weight_decay: float = typer.Option(TRAIN_DEFAULTS["weight_decay"], "--weight-decay"),
    loss: LossChoice = typer.Option(LossChoice.both, "--loss"),
    scope: ScopeChoice = typer.Option(ScopeChoice.fsod, "--scope"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output CSV (or JSON with --format machine)"),
    output_format: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
    n_jobs: Optional[int] = typer.Option(None, "--n-jobs", help="Worker pool size"),
):
    """Paired CE vs DC fine-tuning on synthetic few-shot scenes."""
    seed_list = parse_int_list(seeds) if seeds else list(settings.default_seeds)
    try:
        config = build_config(
            ExperimentConfig,
            seeds=seed_list,
            shots=parse_int_list(shots),
            loss_kinds=_loss_kinds(loss),
            scopes=_scopes(scope),
            sim=build_config(SimConfig, num_fg_classes=classes, num_base_classes=base_classes,
                             num_scenes=scenes, noise_scale=noise),
            train=build_config(TrainConfig, steps=steps, learning_rate=lr, momentum=momentum,
                               weight_decay=weight_decay),
            output_format=output_format.value,
        )
    except ConfigurationError as e:
        _fail(str(e), EXIT_USAGE)

    start = time.perf_counter()
    rows, warnings, errors = run_experiment(config, n_jobs=n_jobs)
    elapsed = time.perf_counter() - start

    for w in warnings:
        logger.warning(w)
    if errors:
        for e in errors:
            err_console.print(f"[red]✗ {e}[/red]")
        raise typer.Exit(code=EXIT_FAILURE)

    manifest = RunManifest.from_run(config, rows, elapsed, warnings)
    suffix = "json" if output_format == OutputFormat.machine else "csv"
    target = out or Path(settings.output_dir) / f"simulate.{suffix}"
    try:
        written = write_run(manifest, target, output_format.value)
    except OSError as e:
        _fail(f"Cannot write {target}: {e}", EXIT_INPUT)

    summary = aggregate(rows_frame(rows))
    table = Table(title=f"mRecall over {len(config.seeds)} seed(s)")
    for col in ("shots", "loss", "seeds", "mRecall mean", "mRecall std", "missing rate"):
        table.add_column(col, justify="right")
    for _, r in summary.iterrows():
        table.add_row(str(r["shots"]), r["loss"], str(r["seeds"]), _fmt(r["m_recall_mean"]),
                      _fmt(r["m_recall_std"]), _fmt(r["missing_rate_mean"]))
    console.print(table)
    console.print(f"[green]✓ {len(rows)} rows written to {', '.join(str(p) for p in written)}[/green]")


@app.command("missing-rate")
def missing_rate(
    annotations: Path = typer.Argument(..., help="COCO-style annotation file"),
    splits: List[Path] = typer.Argument(..., help="Split file(s); several are averaged"),
    scope: ScopeChoice = typer.Option(ScopeChoice.fsod, "--scope"),
    novel: Optional[str] = typer.Option(None, "--novel", help="Novel category ids (default: all non-base)"),
    base: Optional[str] = typer.Option(None, "--base", help="Base category ids (default: none)"),
    tfa: bool = typer.Option(False, "--tfa", help="Treat the split files as one TFA-style per-class split"),
    shots: Optional[int] = typer.Option(None, "--shots", help="K for TFA splits without a <K>shot file name"),
    include_crowd: bool = typer.Option(False, "--include-crowd"),
    per_category_images: bool = typer.Option(False, "--per-category-images",
                                             help="Count an image once per category whose shots it hosts"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write CSV rows (or JSON with --format machine)"),
    output_format: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
):
    """Proportion of in-scope instances on the shot images that the split leaves unlabeled."""
    try:
        anns = parse_annotations(annotations)
        if tfa:
            split_sets = [("tfa", import_tfa_split(splits, anns, shots=shots))]
        else:
            split_sets = [(str(p), parse_split(p, anns)) for p in splits]

        base_ids = set(parse_int_list(base)) if base else set()
        novel_ids = set(parse_int_list(novel)) if novel else set(anns.categories) - base_ids

        reports = {}
        for name in _scopes(scope):
            kind = "novel-only" if name == "fsod" else "base-plus-novel"
            class_scope = ClassScope.build(kind, base_ids, novel_ids)
            reports[name] = [
                (label, compute_missing_rate(anns, split, class_scope, include_crowd=include_crowd,
                                             count_images_per_category=per_category_images))
                for label, split in split_sets
            ]
    except (AnnotationParseError, ReferentialIntegrityError, UndefinedRateError) as e:
        _fail(str(e), EXIT_INPUT)
    except (InvalidInputError, typer.BadParameter) as e:
        _fail(str(e), EXIT_USAGE)

    names = anns.category_names()
    if output_format == OutputFormat.machine:
        payload = json.dumps(
            {name: [dict(rep.to_dict(), split=label) for label, rep in per_split]
             for name, per_split in reports.items()},
            indent=2,
        )
        if out is None:
            typer.echo(payload)
            return
    else:
        rows = [dict(row, split=label) for per_split in reports.values()
                for label, rep in per_split for row in rep.rows(names)]
        payload = rows_frame(rows).to_csv(index=False, lineterminator="\n")

    for name, per_split in reports.items():
        for label, rep in per_split:
            table = Table(title=f"{name} missing rate, {rep.shots}-shot, {label}")
            for col in ("category", "present", "labeled", "missing rate"):
                table.add_column(col, justify="right")
            for row in rep.rows(names):
                table.add_row(row["category"], str(row["present"]), str(row["labeled"]), _fmt(row["missing_rate"]))
            console.print(table)
            for w in rep.warnings:
                console.print(f"[yellow]⚠ {w}[/yellow]")
        if len(per_split) > 1:
            mean, std = average_rates([rep for _, rep in per_split])
            console.print(f"{name}: mean missing rate {mean:.4f} ± {std:.4f} over {len(per_split)} splits")

    if out is not None:
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(payload, encoding="utf-8")
        except OSError as e:
            _fail(f"Cannot write {out}: {e}", EXIT_INPUT)
        console.print(f"[green]✓ written to {out}[/green]")


@app.command("report")
def report(
    manifests: List[Path] = typer.Argument(..., help="Run manifest files"),
    out: Optional[Path] = typer.Option(None, "--out", help="Write the summary as CSV"),
):
    """Per-shot mean ± deviation of mRecall across run manifests."""
    try:
        summary = aggregate_manifests(manifests)
    except (AnnotationParseError, IncompatibleManifestError) as e:
        _fail(str(e), EXIT_INPUT)

    table = Table(title=f"Summary over {len(manifests)} manifest(s)")
    for col in ("shots", "loss", "seeds", "mRecall", "missing rate"):
        table.add_column(col, justify="right")
    for _, r in summary.iterrows():
        table.add_row(str(r["shots"]), r["loss"], str(r["seeds"]),
                      f"{_fmt(r['m_recall_mean'])} ± {_fmt(r['m_recall_std'])}", _fmt(r["missing_rate_mean"]))
    console.print(table)

    if out is not None:
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            summary.to_csv(out, index=False, lineterminator="\n")
        except OSError as e:
            _fail(f"Cannot write {out}: {e}", EXIT_INPUT)


def run():
    """Console entry point; maps uncaught lab errors to the input exit code."""
    try:
        app()
    except DCLabError as e:
        err_console.print(f"[red]✗ {e}[/red]")
        raise SystemExit(EXIT_INPUT)
