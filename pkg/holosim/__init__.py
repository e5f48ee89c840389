from .algorithms import citl_solve, dpac_dual, dpac_single, loss_and_gradient, sgd_solve
from .calibration import apply_alignment, calibrate_hardware, estimate_shift
from .errors import (
    CalibrationError,
    ConfigError,
    DegenerateFieldError,
    GridMismatchError,
    HoloSimError,
    SolverAbortedError,
    TargetLoadError,
)
from .experiments import (
    run_contrast_eval,
    run_efficiency_sweep,
    run_experiment,
    run_fringe_convergence,
    run_misalignment_sweep,
    run_single,
)
from .field import ComplexField, PhasePattern, TargetAmplitude, load_target
from .hardware import EmulatedCamera, HardwareProfile, capture
from .metrics import contrast_from_sinusoid, psnr
from .models import ExperimentConfig, GridSpec, PropagationSpec, SolverConfig
from .presets import load_experiment_config
from .propagation import axial_pixel, propagate, propagate_adjoint

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ComplexField",
    "ConfigError",
    "DegenerateFieldError",
    "EmulatedCamera",
    "ExperimentConfig",
    "GridMismatchError",
    "GridSpec",
    "HardwareProfile",
    "HoloSimError",
    "PhasePattern",
    "PropagationSpec",
    "SolverAbortedError",
    "SolverConfig",
    "TargetAmplitude",
    "TargetLoadError",
    "apply_alignment",
    "axial_pixel",
    "calibrate_hardware",
    "capture",
    "citl_solve",
    "contrast_from_sinusoid",
    "dpac_dual",
    "dpac_single",
    "estimate_shift",
    "load_experiment_config",
    "load_target",
    "loss_and_gradient",
    "propagate",
    "propagate_adjoint",
    "psnr",
    "run_contrast_eval",
    "run_efficiency_sweep",
    "run_experiment",
    "run_fringe_convergence",
    "run_misalignment_sweep",
    "run_single",
    "sgd_solve",
]
