"""On-disk artifacts: metrics CSV, field snapshots and verification reports.

Every file is written to a temporary sibling and renamed into place.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .adrc import MetricsRow
from .errors import ValidationError
from .fields import FieldPair
from .grid import make_grid

logger = logging.getLogger(__name__)

METRICS_SCHEMA = "dcmd-metrics/1"
SNAPSHOT_SCHEMA = "dcmd-snapshot/1"
FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


# -- metrics -----------------------------------------------------------------


def format_metrics(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={METRICS_SCHEMA}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MetricsRow.FIELDS)
    for row in rows:
        writer.writerow([FLOAT_FORMAT % value for value in row.as_tuple()])
    return buf.getvalue()


def write_metrics(path: PathLike, rows: Iterable[MetricsRow]) -> Path:
    out = atomic_write_text(path, format_metrics(rows))
    logger.info("wrote metrics to %s", out)
    return out


def read_metrics(path: PathLike) -> list[MetricsRow]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != f"# schema={METRICS_SCHEMA}":
        raise ValidationError(f"{path} is not a {METRICS_SCHEMA} file")
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if tuple(header or ()) != MetricsRow.FIELDS:
        raise ValidationError(f"unexpected metrics header in {path}: {header}")
    return [MetricsRow(*(float(v) for v in record)) for record in reader if record]


# -- snapshots ---------------------------------------------------------------


def _matrix_text(values: np.ndarray) -> str:
    buf = io.StringIO()
    np.savetxt(buf, values, fmt=FLOAT_FORMAT)
    return buf.getvalue()


def write_snapshot(directory: PathLike, stem: str, w: FieldPair, t: float, step: int) -> Path:
    """Write ``{stem}_f.txt``, ``{stem}_p.txt`` and the ``{stem}.json`` sidecar.

    Matrices are stored with rows along x (nx rows of ny values).
    """
    directory = Path(directory)
    grid = w.grid
    files = {"f": f"{stem}_f.txt", "p": f"{stem}_p.txt"}
    atomic_write_text(directory / files["f"], _matrix_text(w.f))
    atomic_write_text(directory / files["p"], _matrix_text(w.p))
    meta = {
        "schema": SNAPSHOT_SCHEMA,
        "nx": grid.nx,
        "ny": grid.ny,
        "length": grid.length,
        "t": float(t),
        "step": int(step),
        "files": files,
    }
    sidecar = atomic_write_text(directory / f"{stem}.json", json.dumps(meta, indent=2) + "\n")
    logger.debug("snapshot %s at t=%g", sidecar, t)
    return sidecar


@dataclass(frozen=True)
class Snapshot:
    field: FieldPair
    t: float
    step: int


def load_snapshot(path: PathLike) -> Snapshot:
    """Reload a snapshot from its JSON sidecar alone."""
    sidecar = Path(path)
    if sidecar.suffix != ".json":
        sidecar = sidecar.with_suffix(".json")
    try:
        meta = json.loads(sidecar.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read snapshot sidecar {sidecar}: {exc}") from exc
    if meta.get("schema") != SNAPSHOT_SCHEMA:
        raise ValidationError(f"{sidecar} is not a {SNAPSHOT_SCHEMA} sidecar")
    grid = make_grid(meta["nx"], meta["ny"], meta["length"])
    arrays = [np.loadtxt(sidecar.parent / meta["files"][c], ndmin=2) for c in ("f", "p")]
    return Snapshot(FieldPair(grid, arrays[0], arrays[1]), float(meta["t"]), int(meta["step"]))


# -- reports -----------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """One verification line; ``upper`` means value <= threshold passes."""

    name: str
    value: float
    threshold: float
    upper: bool = True

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        return self.value <= self.threshold if self.upper else self.value >= self.threshold

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


def format_report(results: Sequence[CheckResult]) -> str:
    lines = ["name value threshold status"]
    lines += [f"{r.name} {r.value:.6e} {r.threshold:.6e} {r.status}" for r in results]
    return "\n".join(lines) + "\n"


def write_report(path: PathLike, results: Sequence[CheckResult]) -> Path:
    out = atomic_write_text(path, format_report(results))
    logger.info("wrote report with %d checks to %s", len(results), out)
    return out
