"""Experiment runners: single runs, efficiency and misalignment sweeps, fringe convergence, contrast.

Every experiment is split into independent jobs, one per (method, wavelength)
and, for camera-in-the-loop methods, per sweep point. Model-based solutions
do not see the hardware, so they are computed once per job and evaluated at
every sweep point. Jobs run on a process pool; rows are sorted before they
are written, so the worker count never changes the output.
"""
import logging
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from logging_setup import set_experiment_label

from . import config as settings
from . import results
from .algorithms import (
    RunRecord,
    citl_solve,
    dpac_dual,
    dpac_single,
    sgd_solve,
    target_plane_phase,
)
from .calibration import apply_alignment, calibrate_hardware
from .errors import ConfigError
from .field import (
    PhasePattern,
    TargetAmplitude,
    dot_grid,
    load_target,
    load_target_channels,
    resolution_chart,
    sinusoid_grating,
)
from .hardware import HardwareProfile, capture
from .metrics import closed_form_scale, contrast_from_sinusoid, psnr
from .models import ExperimentConfig, PropagationSpec

logger = logging.getLogger(__name__)

# Noise stream of evaluation captures, disjoint from the solver's capture indices.
EVAL_STREAM = 2**31 - 1

# Model-based dual methods get SLM 2 pre-shifted when a sweep asks for calibration.
CALIBRATED_METHODS = ("dpac2", "sgd2")

COLUMNS: Dict[str, List[str]] = {
    "single_run": ["method", "wavelength", "psnr", "final_loss", "status", results.RUNTIME_COLUMN],
    "efficiency_sweep": [
        "method", "wavelength", "one_minus_eta", "psnr", "final_loss", "status", results.RUNTIME_COLUMN,
    ],
    "misalignment_sweep": [
        "method", "wavelength", "axis", "offset", "calib_dx", "calib_dy", "psnr", "final_loss", "status",
        results.RUNTIME_COLUMN,
    ],
    "fringe_convergence": ["method", "wavelength", "iteration", "psnr", "loss", "status", results.RUNTIME_COLUMN],
    "contrast_eval": [
        "method", "wavelength", "eta", "weber", "michelson", "psnr", "status", results.RUNTIME_COLUMN,
    ],
}

SORT_KEYS: Dict[str, Tuple[str, ...]] = {
    "single_run": ("method", "wavelength"),
    "efficiency_sweep": ("method", "wavelength", "one_minus_eta"),
    "misalignment_sweep": ("method", "wavelength", "axis", "offset"),
    "fringe_convergence": ("method", "wavelength", "iteration"),
    "contrast_eval": ("method", "wavelength"),
}


@dataclass(frozen=True)
class Job:
    """One unit of work: a method on one wavelength channel at some sweep points.

    Attributes:
        method: Solver name.
        channel: Index into the configured wavelengths.
        points: Sweep values evaluated by this job; (None,) outside sweeps.
    """
    method: str
    channel: int
    points: Tuple[Optional[float], ...] = (None,)


@dataclass
class Outcome:
    """A result row plus the arrays written next to the table."""
    row: Dict
    tag: str
    trace: Optional[str] = None
    reconstruction: Optional[np.ndarray] = None
    scale: float = 1.0
    losses: List[float] = field(default_factory=list)
    psnrs: List[float] = field(default_factory=list)
    snapshots: Dict[int, np.ndarray] = field(default_factory=dict)


@dataclass
class ExperimentResult:
    """What an experiment produced."""
    kind: str
    columns: List[str]
    rows: List[Dict]
    output_dir: Path
    files: List[Path] = field(default_factory=list)

    @property
    def failed(self) -> List[Dict]:
        return [row for row in self.rows if row.get("status") != "ok"]


@dataclass
class Solution:
    phi1: PhasePattern
    phi2: Optional[PhasePattern]
    record: Optional[RunRecord]
    runtime: float


def is_dual(method: str) -> bool:
    return method.endswith("2")


def build_targets(cfg: ExperimentConfig) -> List[TargetAmplitude]:
    """One target per configured wavelength.

    A color image with one channel per wavelength maps channel i to
    wavelength i; otherwise every wavelength shares the same target.
    """
    n = len(cfg.wavelengths)
    if cfg.target:
        channels = load_target_channels(cfg.target, cfg.grid, srgb=cfg.srgb)
        if len(channels) == n and n > 1:
            return channels
        return [load_target(cfg.target, cfg.grid, srgb=cfg.srgb)] * n
    if cfg.target_pattern == "sinusoid":
        target = sinusoid_grating(cfg.grid, cfg.grating_period, cfg.grating_axis)
    elif cfg.target_pattern == "dot_grid":
        target = dot_grid(cfg.grid)
    else:
        target = resolution_chart(cfg.grid)
    return [target] * n


def base_hardware(cfg: ExperimentConfig, channel: int, prop: PropagationSpec) -> HardwareProfile:
    """Hardware for one wavelength channel, with its per-channel efficiency applied."""
    hw = HardwareProfile.from_config(cfg.hardware, prop)
    if cfg.channel_eta is not None:
        hw = hw.with_eta(cfg.channel_eta[channel])
    return hw


def hardware_at(cfg: ExperimentConfig, hw: HardwareProfile, value: Optional[float]) -> HardwareProfile:
    """Hardware at one sweep point.

    Efficiency values are 1 - eta on both SLMs; lateral offsets move SLM 2
    along x in pixels; axial offsets lengthen SLM 2's path in meters.
    """
    if value is None:
        return hw
    if cfg.kind == "efficiency_sweep":
        return hw.with_eta(1.0 - value)
    if cfg.sweep_axis == "lateral":
        return hw.with_slm(2, lateral_shift=(float(value), 0.0))
    return hw.with_slm(2, axial_shift=float(value))


def solve_model_based(
    method: str,
    target: TargetAmplitude,
    prop: PropagationSpec,
    cfg: ExperimentConfig,
    hw: HardwareProfile,
) -> Solution:
    """DPAC or model-based SGD; neither looks at the hardware beyond its illumination."""
    started = time.perf_counter()
    dual = is_dual(method)
    record = None
    if method.startswith("dpac"):
        target_phase = target_plane_phase(prop.grid, prop.wavelength, cfg.solver)
        if dual:
            phi1, phi2 = dpac_dual(target, target_phase, prop)
        else:
            phi1, phi2 = dpac_single(target, target_phase, prop), None
    else:
        record = sgd_solve(target, prop, cfg.solver, dual, source=hw.source)
        phi1, phi2 = record.phi1, record.phi2
    return Solution(phi1, phi2, record, time.perf_counter() - started)


def solve_in_the_loop(
    method: str,
    target: TargetAmplitude,
    prop: PropagationSpec,
    cfg: ExperimentConfig,
    hw: HardwareProfile,
    checkpoints: Sequence[int] = (),
) -> Solution:
    started = time.perf_counter()
    record = citl_solve(target, hw, prop, cfg.solver, is_dual(method), checkpoints=checkpoints)
    return Solution(record.phi1, record.phi2, record, time.perf_counter() - started)


def score(amplitude: np.ndarray, target: TargetAmplitude) -> Tuple[float, float, float]:
    """(loss, PSNR, s) of an amplitude under the closed-form scale."""
    s = closed_form_scale(amplitude, target.amplitude)
    diff = s * amplitude - target.amplitude
    return float(np.mean(diff * diff)), psnr(amplitude, target, scale=s), s


def _point_tag(cfg: ExperimentConfig, value: Optional[float]) -> str:
    if value is None:
        return ""
    axis = "ineff" if cfg.kind == "efficiency_sweep" else cfg.sweep_axis
    return f"_{axis}{value:g}"


def _row(method: str, wavelength: float, **values) -> Dict:
    return {"method": method, "wavelength": wavelength, "status": "ok", **values}


def _error_outcome(cfg: ExperimentConfig, job: Job, value: Optional[float], exc: Exception, runtime: float) -> Outcome:
    wavelength = cfg.wavelengths[job.channel]
    row = _row(job.method, wavelength, status=f"error: {exc}", **{results.RUNTIME_COLUMN: runtime})
    if cfg.kind == "efficiency_sweep":
        row["one_minus_eta"] = value
    elif cfg.kind == "misalignment_sweep":
        row.update(axis=cfg.sweep_axis, offset=value)
    elif cfg.kind == "fringe_convergence":
        row["iteration"] = -1
    return Outcome(row=row, tag=f"{job.method}_{results.wavelength_tag(wavelength)}{_point_tag(cfg, value)}")


def _evaluate_point(
    cfg: ExperimentConfig,
    job: Job,
    value: Optional[float],
    solution: Solution,
    hw: HardwareProfile,
    target: TargetAmplitude,
) -> Outcome:
    """Displays a solution on the hardware at one sweep point and scores the capture."""
    started = time.perf_counter()
    wavelength = cfg.wavelengths[job.channel]
    phi2 = solution.phi2
    row = _row(job.method, wavelength)
    if cfg.kind == "misalignment_sweep":
        row.update(axis=cfg.sweep_axis, offset=value)
        if cfg.calibrate and cfg.sweep_axis == "lateral" and job.method in CALIBRATED_METHODS:
            est, _, _ = calibrate_hardware(hw, seed=cfg.hardware.rng_seed)
            phi2 = apply_alignment(phi2, est)
            row.update(calib_dx=est.dx, calib_dy=est.dy)
    intensity = capture(solution.phi1, phi2, hw, call_index=EVAL_STREAM)
    amplitude = np.sqrt(intensity)
    loss, value_db, s = score(amplitude, target)
    row.update(psnr=value_db, final_loss=loss)
    if cfg.kind == "efficiency_sweep":
        row["one_minus_eta"] = value
    elif cfg.kind == "contrast_eval":
        report = contrast_from_sinusoid(intensity, cfg.grating_period, cfg.grating_axis)
        row.update(eta=hw.slm1.eta, weber=report.weber, michelson=report.michelson)
    row[results.RUNTIME_COLUMN] = solution.runtime + time.perf_counter() - started
    record = solution.record
    tag = f"{job.method}_{results.wavelength_tag(wavelength)}{_point_tag(cfg, value)}"
    return Outcome(
        row=row,
        tag=tag,
        trace=tag if record is not None and cfg.kind == "single_run" else None,
        reconstruction=amplitude,
        scale=s,
        losses=list(record.losses) if record else [],
        psnrs=list(record.psnrs) if record else [],
    )


def _run_fringe_job(
    cfg: ExperimentConfig,
    job: Job,
    target: TargetAmplitude,
    prop: PropagationSpec,
    hw: HardwareProfile,
) -> List[Outcome]:
    wavelength = cfg.wavelengths[job.channel]
    checkpoints = sorted(c for c in set(cfg.checkpoints) if c <= cfg.solver.iterations)
    dropped = sorted(set(cfg.checkpoints) - set(checkpoints))
    if dropped:
        logger.warning(f"Ignoring checkpoints beyond {cfg.solver.iterations} iterations: {dropped}")
    solution = solve_in_the_loop(job.method, target, prop, cfg, hw, checkpoints=checkpoints)
    record = solution.record
    tag = f"{job.method}_{results.wavelength_tag(wavelength)}"
    outcomes = []
    for k in checkpoints:
        loss, value_db, _ = score(np.sqrt(record.snapshots[k]), target)
        row = _row(job.method, wavelength, iteration=k, psnr=value_db, loss=loss)
        row[results.RUNTIME_COLUMN] = solution.runtime
        outcomes.append(Outcome(row=row, tag=f"{tag}_iter{k:04d}", snapshots={k: record.snapshots[k]}))
    if outcomes:
        outcomes[0].trace = tag
        outcomes[0].losses, outcomes[0].psnrs = list(record.losses), list(record.psnrs)
    return outcomes


def run_job(payload: Tuple[ExperimentConfig, Job]) -> List[Outcome]:
    """Executes one job; domain errors (every ValueError) become status rows instead of aborting the run."""
    cfg, job = payload
    set_experiment_label(cfg.kind)
    wavelength = cfg.wavelengths[job.channel]
    logger.info(f"Job {job.method} at {wavelength * 1e9:.0f} nm, points {list(job.points)}")
    started = time.perf_counter()
    try:
        target = build_targets(cfg)[job.channel]
        prop = cfg.propagation(wavelength)
        hw = base_hardware(cfg, job.channel, prop)
        if cfg.kind == "fringe_convergence":
            return _run_fringe_job(cfg, job, target, prop, hw)
    except ValueError as exc:
        logger.error(f"Job {job.method} at {wavelength * 1e9:.0f} nm failed: {exc}")
        return [_error_outcome(cfg, job, p, exc, time.perf_counter() - started) for p in job.points]

    outcomes = []
    solution = None
    for value in job.points:
        point_started = time.perf_counter()
        try:
            hw_point = hardware_at(cfg, hw, value)
            if job.method.startswith("citl"):
                solution = solve_in_the_loop(job.method, target, prop, cfg, hw_point)
            elif solution is None:
                solution = solve_model_based(job.method, target, prop, cfg, hw)
            outcomes.append(_evaluate_point(cfg, job, value, solution, hw_point, target))
        except ValueError as exc:
            logger.error(f"Job {job.method} at {wavelength * 1e9:.0f} nm, point {value} failed: {exc}")
            outcomes.append(_error_outcome(cfg, job, value, exc, time.perf_counter() - point_started))
    return outcomes


def plan_jobs(cfg: ExperimentConfig) -> List[Job]:
    """Splits an experiment into independent jobs in a fixed order."""
    sweeping = cfg.kind in ("efficiency_sweep", "misalignment_sweep")
    points: Tuple[Optional[float], ...] = tuple(cfg.sweep_values) if sweeping else (None,)
    jobs = []
    for method in cfg.methods:
        for channel in range(len(cfg.wavelengths)):
            if sweeping and method.startswith("citl"):
                jobs.extend(Job(method, channel, (p,)) for p in points)
            else:
                jobs.append(Job(method, channel, points))
    return jobs


def execute_jobs(cfg: ExperimentConfig, jobs: Sequence[Job], workers: int) -> List[Outcome]:
    """Runs jobs on `workers` processes and returns outcomes sorted by their row keys."""
    payloads = [(cfg, job) for job in jobs]
    if workers > 1 and len(jobs) > 1:
        with Pool(min(workers, len(jobs))) as pool:
            batches = pool.map(run_job, payloads)
    else:
        batches = [run_job(p) for p in payloads]
    outcomes = [o for batch in batches for o in batch]
    keys = SORT_KEYS[cfg.kind]
    return sorted(outcomes, key=lambda o: tuple(_sortable(o.row.get(k)) for k in keys))


def _sortable(value):
    if value is None:
        return (0, "")
    if isinstance(value, str):
        return (1, value)
    return (2, float(value))


def _write_outputs(cfg: ExperimentConfig, out_dir: Path, outcomes: List[Outcome]) -> List[Path]:
    files = []
    for outcome in outcomes:
        if outcome.reconstruction is not None:
            files.append(results.save_reconstruction(out_dir / f"recon_{outcome.tag}.png", outcome.reconstruction, outcome.scale))
        for intensity in outcome.snapshots.values():
            files.append(results.save_capture(out_dir / f"capture_{outcome.tag}.png", intensity))
        if outcome.trace:
            files.append(results.write_trace(out_dir / f"trace_{outcome.trace}.csv", outcome.losses, outcome.psnrs))
    if cfg.kind == "single_run" and len(cfg.wavelengths) == 3:
        files.extend(_write_composites(cfg, out_dir, outcomes))
    return files


def _write_composites(cfg: ExperimentConfig, out_dir: Path, outcomes: List[Outcome]) -> List[Path]:
    order = sorted(range(3), key=lambda i: -cfg.wavelengths[i])
    files = []
    for method in cfg.methods:
        by_wavelength = {
            o.row["wavelength"]: o for o in outcomes if o.row["method"] == method and o.reconstruction is not None
        }
        if len(by_wavelength) != 3:
            logger.warning(f"Skipping composite for {method}: not every channel succeeded")
            continue
        channels = [
            np.clip(by_wavelength[cfg.wavelengths[i]].scale * by_wavelength[cfg.wavelengths[i]].reconstruction, 0, 1)
            for i in order
        ]
        files.append(results.save_composite(out_dir / f"composite_{method}.png", channels))
    return files


def run_experiment(
    cfg: ExperimentConfig,
    out_dir: Optional[Path] = None,
    workers: Optional[int] = None,
) -> ExperimentResult:
    """Runs an experiment and writes results.csv, summary.json, traces and PNGs under one directory."""
    started = time.perf_counter()
    out_dir = Path(out_dir or cfg.output_dir or settings.OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.workers or settings.DEFAULT_WORKERS
    set_experiment_label(cfg.kind)
    jobs = plan_jobs(cfg)
    logger.info(f"Running {cfg.kind}: {len(jobs)} job(s) on {workers} worker(s) into {out_dir}")
    try:
        outcomes = execute_jobs(cfg, jobs, workers)
        columns = COLUMNS[cfg.kind]
        rows = [o.row for o in outcomes]
        files = _write_outputs(cfg, out_dir, outcomes)
        files.append(results.write_results_csv(out_dir / "results.csv", columns, rows))
        files.append(results.write_summary(out_dir / "summary.json", cfg, columns, rows, time.perf_counter() - started))
    finally:
        set_experiment_label(None)
    result = ExperimentResult(kind=cfg.kind, columns=columns, rows=rows, output_dir=out_dir, files=files)
    if result.failed:
        logger.warning(f"{cfg.kind}: {len(result.failed)} of {len(rows)} row(s) failed")
    return result


def _require_kind(cfg: ExperimentConfig, kind: str) -> None:
    if cfg.kind != kind:
        raise ConfigError(f"expected a {kind} config, got {cfg.kind}")


def run_single(cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None) -> ExperimentResult:
    """Solves every (method, wavelength) once on the configured hardware.

    With three wavelengths, `composite_<method>.png` stacks the channels as R, G, B.
    """
    _require_kind(cfg, "single_run")
    return run_experiment(cfg, out_dir, workers)


def run_efficiency_sweep(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None
) -> ExperimentResult:
    """PSNR per method as both SLMs lose diffraction efficiency.

    Rows: (method, wavelength, 1 - eta, PSNR, final loss, status, runtime).
    """
    _require_kind(cfg, "efficiency_sweep")
    return run_experiment(cfg, out_dir, workers)


def run_misalignment_sweep(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None
) -> ExperimentResult:
    """PSNR per method as SLM 2 is displaced laterally (pixels) or axially (meters).

    Camera-in-the-loop methods see the displaced hardware through their
    captures; model-based methods do not, unless `calibrate` pre-shifts
    their SLM 2 pattern by the measured offset.
    """
    _require_kind(cfg, "misalignment_sweep")
    return run_experiment(cfg, out_dir, workers)


def run_fringe_convergence(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None
) -> ExperimentResult:
    """Camera-in-the-loop run that keeps the captures at the configured checkpoints."""
    _require_kind(cfg, "fringe_convergence")
    return run_experiment(cfg, out_dir, workers)


def run_contrast_eval(
    cfg: ExperimentConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None
) -> ExperimentResult:
    """Weber and Michelson contrast of each method's captured grating, per wavelength."""
    _require_kind(cfg, "contrast_eval")
    return run_experiment(cfg, out_dir, workers)


RUNNERS: Dict[str, Callable[..., ExperimentResult]] = {
    "single_run": run_single,
    "efficiency_sweep": run_efficiency_sweep,
    "misalignment_sweep": run_misalignment_sweep,
    "fringe_convergence": run_fringe_convergence,
    "contrast_eval": run_contrast_eval,
}
