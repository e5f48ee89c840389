"""CGH solvers: single/dual DPAC, model-based SGD and camera-in-the-loop SGD."""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateFieldError, GridMismatchError, SolverAbortedError
from .field import TWO_PI, ComplexField, PhasePattern, TargetAmplitude, wrap_phase
from .hardware import CaptureBackend, EmulatedCamera, FieldCaptureBackend, HardwareProfile
from .metrics import psnr
from .models import GridSpec, PropagationSpec, SolverConfig, dict_hash, model_hash
from .propagation import propagate_adjoint_array, propagate_array

logger = logging.getLogger(__name__)

# Below this fraction of the peak, |u| is treated as zero and its direction as undefined.
AMPLITUDE_FLOOR = 1e-12


@dataclass
class LossResult:
    """Loss value, phase gradients and the scale s of one evaluation.

    Attributes:
        loss: mean((s A - a_target)^2).
        grad1: dL/dphi1.
        grad2: dL/dphi2, or None for a single SLM.
        s: The scale factor used.
        amplitude: The amplitude A the loss was evaluated on.
    """
    loss: float
    grad1: np.ndarray
    grad2: Optional[np.ndarray]
    s: float
    amplitude: np.ndarray


@dataclass
class RunRecord:
    """Result of one solver run."""
    solver: str
    losses: List[float] = field(default_factory=list)
    psnrs: List[float] = field(default_factory=list)
    phi1: Optional[PhasePattern] = None
    phi2: Optional[PhasePattern] = None
    reconstruction: Optional[np.ndarray] = None
    scale: float = 1.0
    config_hash: str = ""
    hardware_hash: str = ""
    snapshots: Dict[int, np.ndarray] = field(default_factory=dict)
    captures: int = 0
    runtime: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.losses)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float("nan")

    def summary(self) -> dict:
        return {
            "solver": self.solver,
            "iterations": self.iterations,
            "final_loss": self.final_loss,
            "final_psnr": self.psnrs[-1] if self.psnrs else None,
            "scale": self.scale,
            "config_hash": self.config_hash,
            "hardware_hash": self.hardware_hash,
            "captures": self.captures,
            "runtime_seconds": self.runtime,
        }


def target_plane_phase(grid: GridSpec, wavelength: float, config: SolverConfig) -> PhasePattern:
    """Phase assigned to the target before DPAC back-propagation.

    "quadratic" is a spherical focus term pi r^2 / (lambda R); "zero" is flat.
    """
    if config.target_phase == "zero":
        return PhasePattern.zeros(grid)
    x, y = grid.coordinates()
    r2 = x[None, :] ** 2 + y[:, None] ** 2
    return PhasePattern(grid, wrap_phase(np.pi * r2 / (wavelength * config.target_phase_radius)))


def dpac_decompose(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Splits a complex field into two phase-only fields.

    The amplitude is rescaled by its maximum to a in [0, 1], then
    phi1 = phi - acos(a) and phi2 = phi + acos(a), so that
    e^{i phi1} + e^{i phi2} = 2 a e^{i phi}.
    """
    magnitude = np.abs(u)
    peak = magnitude.max()
    a = magnitude / peak if peak > 0 else np.zeros_like(magnitude)
    phase = np.angle(u)
    offset = np.arccos(np.clip(a, 0.0, 1.0))
    return phase - offset, phase + offset


def checkerboard_interleave(phi1: np.ndarray, phi2: np.ndarray) -> np.ndarray:
    """phi1 on even-parity pixels (row + col even), phi2 on odd-parity pixels."""
    rows, cols = np.indices(phi1.shape)
    return np.where((rows + cols) % 2 == 0, phi1, phi2)


def _slm_plane_field(target: TargetAmplitude, target_phase: PhasePattern, prop: PropagationSpec) -> np.ndarray:
    if target.grid != prop.grid or target_phase.grid != prop.grid:
        raise GridMismatchError("target, target phase and propagation grids must agree")
    return propagate_array(target.amplitude * np.exp(1j * target_phase.phase), prop.reversed())


def dpac_dual(
    target: TargetAmplitude,
    target_phase: PhasePattern,
    prop: PropagationSpec,
) -> Tuple[PhasePattern, PhasePattern]:
    """Dual-SLM double phase-amplitude coding.

    The complex target is back-propagated to the SLM plane and split into one
    phase-only pattern per SLM.
    """
    phi1, phi2 = dpac_decompose(_slm_plane_field(target, target_phase, prop))
    return PhasePattern(prop.grid, wrap_phase(phi1)), PhasePattern(prop.grid, wrap_phase(phi2))


def dpac_single(target: TargetAmplitude, target_phase: PhasePattern, prop: PropagationSpec) -> PhasePattern:
    """Single-SLM DPAC: both phase-only fields interleaved on a checkerboard."""
    phi1, phi2 = dpac_decompose(_slm_plane_field(target, target_phase, prop))
    return PhasePattern(prop.grid, wrap_phase(checkerboard_interleave(phi1, phi2)))


def model_field(
    phi1: np.ndarray,
    phi2: Optional[np.ndarray],
    prop: PropagationSpec,
    source: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Target-plane field of the idealized model: both SLMs perfect and aligned."""
    src = 1.0 if source is None else source
    u = propagate_array(np.exp(1j * phi1) * src, prop)
    if phi2 is not None:
        u = u + propagate_array(np.exp(1j * phi2) * src, prop)
    return u


def _loss_and_gradient(
    phi1: np.ndarray,
    phi2: Optional[np.ndarray],
    a_target: np.ndarray,
    prop: PropagationSpec,
    source: Optional[np.ndarray],
    amplitude_override: Optional[np.ndarray],
    fixed_scale: Optional[float],
    field_override: Optional[np.ndarray] = None,
) -> LossResult:
    src = 1.0 if source is None else source
    v1 = np.exp(1j * phi1) * src
    v2 = None if phi2 is None else np.exp(1j * phi2) * src
    if field_override is None:
        u = propagate_array(v1, prop)
        if v2 is not None:
            u = u + propagate_array(v2, prop)
    else:
        u = field_override

    field_amp = np.sqrt(u.real**2 + u.imag**2)
    peak = field_amp.max()
    if not peak > 0.0:
        raise DegenerateFieldError("reconstructed field is zero on the whole target plane")
    amp = field_amp if amplitude_override is None else amplitude_override

    if fixed_scale is None:
        energy = float(np.sum(amp * amp))
        if not energy > 0.0:
            raise DegenerateFieldError("captured amplitude is zero on the whole target plane")
        s = float(np.sum(amp * a_target)) / energy
    else:
        s = fixed_scale

    diff = s * amp - a_target
    loss = float(np.mean(diff * diff))

    # dL/dA; the closed-form s is stationary in s, so holding it fixed is exact.
    residual = 2.0 * s * diff / diff.size
    defined = field_amp >= AMPLITUDE_FLOOR * peak
    direction = np.zeros_like(u)
    np.divide(u, field_amp, out=direction, where=defined)
    back = propagate_adjoint_array(residual * direction, prop)

    grad1 = np.imag(np.conj(v1) * back)
    grad2 = None if v2 is None else np.imag(np.conj(v2) * back)
    return LossResult(loss=loss, grad1=grad1, grad2=grad2, s=s, amplitude=amp)


def loss_and_gradient(
    phi1: PhasePattern,
    phi2: Optional[PhasePattern],
    target: TargetAmplitude,
    prop: PropagationSpec,
    amplitude_override: Optional[np.ndarray] = None,
    source: Optional[ComplexField] = None,
    scale: Optional[float] = None,
    field_override: Optional[np.ndarray] = None,
) -> LossResult:
    """Scaled MSE of the dual- (or single-) SLM reconstruction and its phase gradients.

    The forward field is the idealized model. When `amplitude_override` is
    given (camera-in-the-loop), the loss uses that amplitude while the
    gradient still flows backwards through the model. `field_override`
    replaces the model field wherever the field itself enters: the amplitude
    (unless overridden too) and the phase of the cotangent dL/du.

    Args:
        phi1: Phase of SLM 1.
        phi2: Phase of SLM 2, or None for a single SLM.
        target: Target amplitude.
        prop: Model propagation.
        amplitude_override: Captured amplitude replacing |u| in the loss.
        source: Illumination; a unit plane wave when omitted.
        scale: Fixed s; the closed-form least-squares s when omitted.
        field_override: Complex field at the sensor replacing u.

    Raises:
        GridMismatchError: On inconsistent grids or override shape.
        DegenerateFieldError: If the field (or override) vanishes everywhere.
    """
    grids = [phi1.grid, target.grid] + ([phi2.grid] if phi2 is not None else [])
    if source is not None:
        grids.append(source.grid)
    if any(g != prop.grid for g in grids):
        raise GridMismatchError("phase, target, source and propagation grids must agree")
    for name, override in (("amplitude", amplitude_override), ("field", field_override)):
        if override is not None and np.shape(override) != prop.grid.shape:
            raise GridMismatchError(
                f"{name} override has shape {np.shape(override)}, expected {prop.grid.shape}"
            )
    return _loss_and_gradient(
        phi1.phase,
        None if phi2 is None else phi2.phase,
        target.amplitude,
        prop,
        None if source is None else source.data,
        None if amplitude_override is None else np.asarray(amplitude_override, dtype=np.float64),
        scale,
        None if field_override is None else np.asarray(field_override, dtype=np.complex128),
    )


def initial_phases(
    target: TargetAmplitude,
    prop: PropagationSpec,
    config: SolverConfig,
    dual: bool,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Starting phases for gradient descent, deterministic in config.rng_seed."""
    shape = prop.grid.shape
    if config.init_mode == "zero":
        return np.zeros(shape), (np.zeros(shape) if dual else None)
    if config.init_mode == "dpac_seed":
        target_phase = target_plane_phase(prop.grid, prop.wavelength, config)
        if dual:
            p1, p2 = dpac_dual(target, target_phase, prop)
            return p1.phase.copy(), p2.phase.copy()
        return dpac_single(target, target_phase, prop).phase.copy(), None
    rng = np.random.default_rng(config.rng_seed)
    phi1 = rng.uniform(0.0, TWO_PI, shape)
    phi2 = rng.uniform(0.0, TWO_PI, shape) if dual else None
    return phi1, phi2


def _dithered(
    phi1: np.ndarray, phi2: Optional[np.ndarray], config: SolverConfig
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    rng = np.random.default_rng([config.rng_seed, 1])
    d = config.dither
    phi1 = phi1 + rng.uniform(-d, d, phi1.shape)
    if phi2 is not None:
        phi2 = phi2 + rng.uniform(-d, d, phi2.shape)
    return phi1, phi2


def _gradient_descent(
    name: str,
    target: TargetAmplitude,
    prop: PropagationSpec,
    config: SolverConfig,
    dual: bool,
    source: Optional[ComplexField],
    camera: Optional[CaptureBackend],
    checkpoints: Sequence[int],
) -> RunRecord:
    grid = prop.grid
    if target.grid != grid:
        raise GridMismatchError(f"target grid {target.grid} does not match propagation grid {grid}")
    started = time.perf_counter()
    phi1, phi2 = initial_phases(target, prop, config, dual)
    src = None if source is None else source.data
    fixed = config.fixed_scale if config.scale_mode == "fixed" else None
    alpha = config.step_size * grid.size if config.normalize_step else config.step_size
    beta = config.momentum
    wanted = set(checkpoints)
    record = RunRecord(solver=name, config_hash=model_hash(config))
    vel1 = np.zeros_like(phi1)
    vel2 = None if phi2 is None else np.zeros_like(phi2)

    with_field = camera is not None and config.citl_phase == "sensor" and isinstance(camera, FieldCaptureBackend)

    def _capture(p1: np.ndarray, p2: Optional[np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        pair = (PhasePattern(grid, p1), None if p2 is None else PhasePattern(grid, p2))
        if with_field:
            return camera.capture_with_field(*pair)
        return camera.capture(*pair), None

    logger.info(f"{name}: {config.iterations} iterations on {grid.nx}x{grid.ny}, step {alpha:.4g}")
    for k in range(config.iterations):
        override = sensor = None
        if camera is not None:
            intensity, sensor = _capture(phi1, phi2)
            if k in wanted:
                record.snapshots[k] = intensity
            override = np.sqrt(intensity)
        result = _loss_and_gradient(phi1, phi2, target.amplitude, prop, src, override, fixed, sensor)
        if not np.isfinite(result.loss):
            raise SolverAbortedError(f"{name}: non-finite loss {result.loss} at iteration {k}")
        record.losses.append(result.loss)
        record.psnrs.append(psnr(result.amplitude, target, scale=result.s))

        vel1 = beta * vel1 + result.grad1
        phi1 = phi1 - alpha * vel1
        if phi2 is not None:
            vel2 = beta * vel2 + result.grad2
            phi2 = phi2 - alpha * vel2
        if k == 0 and config.dither > 0.0:
            phi1, phi2 = _dithered(phi1, phi2, config)
        if logger.isEnabledFor(logging.DEBUG) and (k + 1) % 50 == 0:
            logger.debug(f"{name}: iteration {k + 1} loss={result.loss:.6g} psnr={record.psnrs[-1]:.2f}")

    record.phi1 = PhasePattern(grid, wrap_phase(phi1))
    record.phi2 = None if phi2 is None else PhasePattern(grid, wrap_phase(phi2))
    if camera is not None:
        intensity, _ = _capture(record.phi1.phase, None if record.phi2 is None else record.phi2.phase)
        if config.iterations in wanted:
            record.snapshots[config.iterations] = intensity
        final_amp = np.sqrt(intensity)
        record.captures = config.iterations + 1
    else:
        u = model_field(record.phi1.phase, None if record.phi2 is None else record.phi2.phase, prop, src)
        final_amp = np.sqrt(u.real**2 + u.imag**2)
    record.reconstruction = final_amp
    energy = float(np.sum(final_amp**2))
    record.scale = float(np.sum(final_amp * target.amplitude)) / energy if energy > 0 else 0.0
    record.runtime = time.perf_counter() - started
    logger.info(
        f"{name}: finished, loss={record.final_loss:.6g} psnr={record.psnrs[-1]:.2f} dB in {record.runtime:.1f}s"
    )
    return record


def sgd_solve(
    target: TargetAmplitude,
    prop: PropagationSpec,
    config: SolverConfig,
    dual: bool,
    source: Optional[ComplexField] = None,
) -> RunRecord:
    """Model-based gradient descent on the idealized dual- or single-SLM model.

    The update is phi <- phi - alpha v with heavy-ball velocity
    v <- momentum v + dL/dphi.

    Raises:
        SolverAbortedError: If the loss becomes non-finite.
    """
    return _gradient_descent("sgd2" if dual else "sgd1", target, prop, config, dual, source, None, ())


def citl_solve(
    target: TargetAmplitude,
    hw: Union[HardwareProfile, CaptureBackend],
    prop: PropagationSpec,
    config: SolverConfig,
    dual: bool,
    checkpoints: Sequence[int] = (),
) -> RunRecord:
    """Camera-in-the-loop gradient descent.

    Each iteration displays the current phases, captures the target plane
    and evaluates the loss on the captured amplitude; the gradient flows
    through the idealized model. With `config.citl_phase == "sensor"` and a
    backend that reports the imaged field, dL/dg is taken at that field, so
    only the SLM Jacobian comes from the model. Captures at the requested iteration
    numbers are kept in `RunRecord.snapshots` (iteration 0 is the
    initialization, `iterations` the final result).

    Args:
        target: Target amplitude.
        hw: Emulated hardware, or any capture backend.
        prop: Model propagation; must share the hardware grid.
        config: Solver settings.
        dual: Optimize both SLMs; otherwise only SLM 1 is lit.
        checkpoints: Iterations whose captures are kept.

    Raises:
        GridMismatchError: If hardware and model grids differ.
        SolverAbortedError: If the loss becomes non-finite.
    """
    camera = EmulatedCamera(hw) if isinstance(hw, HardwareProfile) else hw
    if camera.grid != prop.grid:
        raise GridMismatchError(f"hardware grid {camera.grid} does not match model grid {prop.grid}")
    source = hw.source if isinstance(hw, HardwareProfile) else None
    record = _gradient_descent(
        "citl2" if dual else "citl1", target, prop, config, dual, source, camera, checkpoints
    )
    if isinstance(hw, HardwareProfile):
        record.hardware_hash = dict_hash(hw.describe())
    return record

