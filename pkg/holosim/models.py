import hashlib
import json
from typing import Annotated, Any, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Method = Literal["dpac1", "dpac2", "sgd1", "sgd2", "citl1", "citl2"]
ExperimentKind = Literal[
    "single_run",
    "efficiency_sweep",
    "misalignment_sweep",
    "fringe_convergence",
    "contrast_eval",
]

# Diffraction efficiency of both SLMs in a misalignment sweep that does not set one.
MISALIGNMENT_ETA = 0.8


class GridSpec(BaseModel):
    """Sampling grid of an SLM or target plane.

    Attributes:
        nx: Pixel count along x (columns).
        ny: Pixel count along y (rows).
        pitch: Pixel pitch in meters (square pixels).
    """
    model_config = ConfigDict(frozen=True)

    nx: int = Field(ge=2)
    ny: int = Field(ge=2)
    pitch: float = Field(gt=0)

    @property
    def shape(self) -> Tuple[int, int]:
        """Array shape (rows, columns)."""
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    def padded(self, factor: int) -> "GridSpec":
        return GridSpec(nx=self.nx * factor, ny=self.ny * factor, pitch=self.pitch)

    def frequencies(self) -> Tuple[np.ndarray, np.ndarray]:
        """Centered spatial frequency axes in cycles per meter.

        Returns:
            (fx, fy), each covering [-1/(2 pitch), 1/(2 pitch)).
        """
        fx = (np.arange(self.nx) - self.nx // 2) / (self.nx * self.pitch)
        fy = (np.arange(self.ny) - self.ny // 2) / (self.ny * self.pitch)
        return fx, fy

    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """Centered pixel coordinates in meters, as (x, y) axes."""
        x = (np.arange(self.nx) - self.nx // 2) * self.pitch
        y = (np.arange(self.ny) - self.ny // 2) * self.pitch
        return x, y


class PropagationSpec(BaseModel):
    """Free-space propagation parameters.

    Attributes:
        wavelength: Wavelength in meters.
        distance: Signed propagation distance in meters.
        grid: The sampling grid of both planes.
        pad_factor: Zero-padding factor applied before the transfer function.
    """
    model_config = ConfigDict(frozen=True)

    wavelength: float = Field(gt=0)
    distance: float
    grid: GridSpec
    pad_factor: Literal[1, 2] = 2

    def with_distance(self, distance: float) -> "PropagationSpec":
        return self.model_copy(update={"distance": float(distance)})

    def reversed(self) -> "PropagationSpec":
        """The same path traversed backwards (distance -z)."""
        return self.with_distance(-self.distance)


class SlmProfile(BaseModel):
    """Hidden physical response of one SLM.

    Attributes:
        eta: Diffraction efficiency in [0, 1].
        phase_levels: Number of drive levels, or "continuous".
        lateral_shift: (dx, dy) displacement of the SLM output field in pixels.
        axial_shift: Extra propagation distance of this SLM in meters.
        tilt: (tx, ty) linear phase ramp in radians per pixel.
        lut_cubic: Coefficients (c1, c2, c3) of the lookup-table nonlinearity
            applied to the normalized phase t = phi / 2pi.
    """
    model_config = ConfigDict(frozen=True)

    eta: float = Field(1.0, ge=0.0, le=1.0)
    phase_levels: Union[Annotated[int, Field(ge=2)], Literal["continuous"]] = 256
    lateral_shift: Tuple[float, float] = (0.0, 0.0)
    axial_shift: float = 0.0
    tilt: Tuple[float, float] = (0.0, 0.0)
    lut_cubic: Tuple[float, float, float] = (1.0, 0.0, 0.0)

    @field_validator("lut_cubic")
    @classmethod
    def _monotone_lut(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        c1, c2, c3 = value
        t = np.linspace(0.0, 1.0, 101)
        if np.any(c1 + 2 * c2 * t + 3 * c3 * t**2 <= 0):
            raise ValueError("lut_cubic must be strictly increasing on [0, 1]")
        return value

    @property
    def is_ideal(self) -> bool:
        """True when the SLM behaves exactly like the idealized model."""
        return (
            self.eta == 1.0
            and self.phase_levels == "continuous"
            and self.lateral_shift == (0.0, 0.0)
            and self.axial_shift == 0.0
            and self.tilt == (0.0, 0.0)
            and self.lut_cubic == (1.0, 0.0, 0.0)
        )


class CameraProfile(BaseModel):
    """Virtual sensor settings.

    Attributes:
        noise_sigma: Std of additive Gaussian intensity noise, as a fraction of peak.
        bit_depth: Sensor bit depth, or "ideal" for no quantization.
        exposure_scale: Gain applied to the optical intensity.
    """
    model_config = ConfigDict(frozen=True)

    noise_sigma: float = Field(0.0, ge=0.0)
    bit_depth: Union[Annotated[int, Field(ge=1, le=32)], Literal["ideal"]] = "ideal"
    exposure_scale: float = Field(1.0, gt=0.0)


class SourceConfig(BaseModel):
    """Illumination u_src incident on both SLMs.

    Attributes:
        kind: "uniform" plane wave or "gaussian" beam.
        amplitude: Peak amplitude.
        waist: 1/e^2 intensity radius in meters for the gaussian beam.
    """
    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform", "gaussian"] = "uniform"
    amplitude: float = Field(1.0, gt=0.0)
    waist: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _waist_for_gaussian(self) -> "SourceConfig":
        if self.kind == "gaussian" and self.waist is None:
            raise ValueError("gaussian source requires a waist")
        return self


class HardwareConfig(BaseModel):
    """Serializable description of the emulated dual-SLM display."""
    model_config = ConfigDict(frozen=True)

    slm1: SlmProfile = SlmProfile()
    slm2: SlmProfile = SlmProfile()
    camera: CameraProfile = CameraProfile()
    source: SourceConfig = SourceConfig()
    pad_factor: Literal[1, 2] = 2
    rng_seed: int = 0


class SolverConfig(BaseModel):
    """Settings of the gradient-descent solvers.

    Attributes:
        iterations: Number of updates.
        step_size: Step size; multiplied by nx*ny when `normalize_step` is set.
        normalize_step: Scale the step by the pixel count of the mean-reduced loss.
        momentum: Heavy-ball coefficient.
        init_mode: Initial phases.
        loss: Loss function.
        scale_mode: "closed_form" least-squares s, or "fixed" s = fixed_scale.
        fixed_scale: The scale factor used with scale_mode "fixed".
        target_phase: Target-plane phase used by DPAC back-propagation.
        target_phase_radius: Curvature radius in meters of the quadratic target phase.
        rng_seed: Seed of the random initialization.
        dither: Half-width in radians of the seeded uniform phase noise added to
            each SLM after the first update. Identical starting phases (init_mode
            "zero") get identical gradients forever without it.
        citl_phase: Where the camera-in-the-loop loss takes the phase of dL/dg:
            "sensor" uses the field the backend imaged when it reports one,
            "model" always uses the idealized model field.
    """
    model_config = ConfigDict(frozen=True)

    iterations: int = Field(500, ge=1)
    step_size: float = Field(1.0, gt=0.0)
    normalize_step: bool = True
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    init_mode: Literal["uniform_random_phase", "zero", "dpac_seed"] = "uniform_random_phase"
    loss: Literal["mse"] = "mse"
    scale_mode: Literal["closed_form", "fixed"] = "closed_form"
    fixed_scale: float = Field(1.0, gt=0.0)
    target_phase: Literal["quadratic", "zero"] = "quadratic"
    target_phase_radius: float = Field(1.0, gt=0.0)
    rng_seed: int = 0
    dither: float = Field(0.0, ge=0.0)
    citl_phase: Literal["sensor", "model"] = "sensor"


class ContrastReport(BaseModel):
    """Weber and Michelson contrast of a captured pattern."""
    model_config = ConfigDict(frozen=True)

    weber: float = Field(ge=0.0)
    michelson: float = Field(ge=0.0, le=1.0)
    i_max: float
    i_min: float

    @classmethod
    def from_extrema(cls, i_max: float, i_min: float) -> "ContrastReport":
        """Builds the report from intensity extrema.

        A non-positive I_min gives an infinite Weber contrast.
        """
        total = i_max + i_min
        michelson = (i_max - i_min) / total if total > 0 else 0.0
        weber = (i_max - i_min) / i_min if i_min > 0 else float("inf")
        return cls(
            weber=max(weber, 0.0),
            michelson=float(np.clip(michelson, 0.0, 1.0)),
            i_max=i_max,
            i_min=i_min,
        )


class AlignmentEstimate(BaseModel):
    """Translation of one SLM's contribution relative to the other, in pixels."""
    model_config = ConfigDict(frozen=True)

    dx: float = 0.0
    dy: float = 0.0
    confidence: float = Field(1.0, ge=0.0, le=1.0)


class ExperimentConfig(BaseModel):
    """One experiment, as read from the JSON config.

    All physical quantities are SI. Sweep values are 1 - eta for the
    efficiency sweep, pixels for lateral and meters for axial offsets.
    """
    model_config = ConfigDict(frozen=True)

    kind: ExperimentKind
    target: Optional[str] = None
    target_pattern: Literal["resolution_chart", "sinusoid", "dot_grid"] = "resolution_chart"
    grating_period: float = Field(16.0, gt=1.0)
    grating_axis: Literal["x", "y"] = "x"
    srgb: bool = False
    grid: GridSpec = GridSpec(nx=256, ny=256, pitch=6.4e-6)
    wavelengths: List[float] = Field(default_factory=lambda: [520e-9], min_length=1)
    channel_eta: Optional[List[float]] = None
    distance: float = 0.1
    methods: List[Method] = Field(default_factory=lambda: ["dpac2", "sgd2", "citl2"])
    sweep_axis: Optional[Literal["efficiency", "lateral", "axial"]] = None
    sweep_values: List[float] = Field(default_factory=list)
    calibrate: bool = False
    checkpoints: List[int] = Field(default_factory=lambda: [0, 30, 100, 500])
    hardware: HardwareConfig = HardwareConfig()
    solver: SolverConfig = SolverConfig()
    output_dir: Optional[str] = None
    workers: Optional[int] = Field(None, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _misalignment_efficiency(cls, data: Any) -> Any:
        # Misalignment sweeps run at MISALIGNMENT_ETA unless an SLM states its own.
        if not isinstance(data, dict) or data.get("kind") != "misalignment_sweep":
            return data
        hardware = data.get("hardware", {})
        if not isinstance(hardware, dict):
            return data
        hardware = dict(hardware)
        for name in ("slm1", "slm2"):
            slm = hardware.get(name, {})
            if isinstance(slm, dict) and "eta" not in slm:
                hardware[name] = {**slm, "eta": MISALIGNMENT_ETA}
        return {**data, "hardware": hardware}

    @field_validator("methods")
    @classmethod
    def _methods_nonempty(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("methods must not be empty")
        return value

    @field_validator("wavelengths")
    @classmethod
    def _positive_wavelengths(cls, value: List[float]) -> List[float]:
        if any(w <= 0 for w in value):
            raise ValueError("wavelengths must be positive")
        return value

    @model_validator(mode="after")
    def _sweep_consistency(self) -> "ExperimentConfig":
        if self.kind in ("efficiency_sweep", "misalignment_sweep") and not self.sweep_values:
            raise ValueError(f"{self.kind} requires non-empty sweep_values")
        if self.kind == "efficiency_sweep":
            if any(not 0.0 <= v < 1.0 for v in self.sweep_values):
                raise ValueError("efficiency sweep values (1 - eta) must lie in [0, 1)")
        if self.kind == "misalignment_sweep" and self.sweep_axis not in ("lateral", "axial"):
            raise ValueError("misalignment_sweep requires sweep_axis 'lateral' or 'axial'")
        if self.kind == "fringe_convergence" and any(not m.startswith("citl") for m in self.methods):
            raise ValueError("fringe_convergence only records camera-in-the-loop methods (citl1, citl2)")
        if self.channel_eta is not None:
            if len(self.channel_eta) != len(self.wavelengths):
                raise ValueError("channel_eta needs one value per wavelength")
            if any(not 0.0 <= e <= 1.0 for e in self.channel_eta):
                raise ValueError("channel_eta values must lie in [0, 1]")
        if any(c < 0 for c in self.checkpoints):
            raise ValueError("checkpoints must be non-negative")
        return self

    def propagation(self, wavelength: float) -> PropagationSpec:
        return PropagationSpec(
            wavelength=wavelength,
            distance=self.distance,
            grid=self.grid,
            pad_factor=self.hardware.pad_factor,
        )


def model_hash(model: BaseModel) -> str:
    """Short, stable content hash of a pydantic model."""
    return hashlib.sha256(model.model_dump_json().encode("utf-8")).hexdigest()[:16]


def dict_hash(payload: dict) -> str:
    """Stable short hash of a JSON-friendly dict."""
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]
