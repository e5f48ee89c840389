"""Result writers: results.csv, summary.json, loss traces and PNG images."""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np

from .field import save_png, save_rgb_png
from .models import ExperimentConfig, model_hash

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RUNTIME_COLUMN = "runtime_seconds"


def format_value(value) -> str:
    """CSV cell text; floats use repr so repeated runs write identical bytes."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def write_results_csv(path: Path, columns: Sequence[str], rows: Iterable[Dict]) -> Path:
    """Writes the versioned result table.

    Every row carries `schema_version` as its first column.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["schema_version", *columns])
        for row in rows:
            writer.writerow([SCHEMA_VERSION, *(format_value(row.get(c)) for c in columns)])
    logger.info(f"Wrote {path}")
    return path


def read_results_csv(path: Path) -> List[Dict[str, str]]:
    with Path(path).open("r", newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def write_trace(path: Path, losses: Sequence[float], psnrs: Sequence[float]) -> Path:
    """Per-iteration loss trace of an iterative solver."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iteration", "loss", "psnr"])
        for k, (loss, value) in enumerate(zip(losses, psnrs)):
            writer.writerow([k, format_value(loss), format_value(value)])
    return path


def _jsonable(value):
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else format_value(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_summary(
    path: Path,
    cfg: ExperimentConfig,
    columns: Sequence[str],
    rows: Sequence[Dict],
    total_runtime: float,
) -> Path:
    """Writes summary.json: config echo and hash, the result rows and run totals."""
    statuses = [row.get("status", "ok") for row in rows]
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": cfg.kind,
        "config_hash": model_hash(cfg),
        "config": json.loads(cfg.model_dump_json()),
        "columns": list(columns),
        "rows": [{c: _jsonable(row.get(c)) for c in columns} for row in rows],
        "jobs_ok": sum(1 for s in statuses if s == "ok"),
        "jobs_failed": sum(1 for s in statuses if s != "ok"),
        "total_runtime_seconds": total_runtime,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False), encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def save_reconstruction(path: Path, amplitude: np.ndarray, scale: float) -> Path:
    """PNG of the scaled reconstruction amplitude, comparable to the target."""
    return save_png(path, scale * amplitude)


def save_capture(path: Path, intensity: np.ndarray) -> Path:
    """PNG of a raw capture, normalized by its own peak."""
    peak = float(intensity.max())
    return save_png(path, intensity / peak if peak > 0 else intensity)


def save_composite(path: Path, channels: List[np.ndarray]) -> Path:
    """Stacks three per-wavelength reconstructions (longest wavelength first) as R, G, B."""
    return save_rgb_png(path, channels)


def wavelength_tag(wavelength: float) -> str:
    return f"{wavelength * 1e9:.0f}nm"
