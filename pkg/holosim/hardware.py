"""Emulated dual-SLM display: imperfect SLMs, free-space paths and a virtual camera.

This is the physical system that camera-in-the-loop optimization measures
but never models. Every physical evaluation goes through a `CaptureBackend`.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from .errors import GridMismatchError
from .field import TWO_PI, ComplexField, PhasePattern, fft2c, ifft2c, wrap_phase
from .models import CameraProfile, HardwareConfig, PropagationSpec, SlmProfile, SourceConfig
from .propagation import propagate_array

logger = logging.getLogger(__name__)


def _apply_lut(phase: np.ndarray, slm: SlmProfile) -> np.ndarray:
    c1, c2, c3 = slm.lut_cubic
    if (c1, c2, c3) == (1.0, 0.0, 0.0):
        return phase
    t = wrap_phase(phase) / TWO_PI
    return TWO_PI * (c1 * t + c2 * t**2 + c3 * t**3)


def quantize_phase(phase: np.ndarray, levels) -> np.ndarray:
    """Rounds phases to the nearest of `levels` equispaced values in [0, 2pi)."""
    if levels == "continuous":
        return phase
    step = TWO_PI / levels
    return np.mod(np.round(wrap_phase(phase) / step), levels) * step


def _tilt_ramp(shape: Tuple[int, int], tilt: Tuple[float, float]) -> np.ndarray:
    ny, nx = shape
    tx, ty = tilt
    cols = np.arange(nx) - nx // 2
    rows = np.arange(ny) - ny // 2
    return tx * cols[None, :] + ty * rows[:, None]


def fourier_shift(data: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Translates a sampled field by (dx, dy) pixels with the Fourier shift theorem."""
    ny, nx = data.shape
    kx = (np.arange(nx) - nx // 2) / nx
    ky = (np.arange(ny) - ny // 2) / ny
    ramp = np.exp(-2j * np.pi * (kx[None, :] * dx + ky[:, None] * dy))
    return ifft2c(fft2c(data) * ramp)


def slm_field_array(phase: np.ndarray, slm: SlmProfile, source: np.ndarray) -> np.ndarray:
    """Array-level `slm_field`."""
    phase = quantize_phase(_apply_lut(phase, slm), slm.phase_levels)
    if slm.tilt != (0.0, 0.0):
        phase = phase + _tilt_ramp(phase.shape, slm.tilt)
    if slm.eta == 1.0:
        u = np.exp(1j * phase) * source
    else:
        u = (slm.eta * np.exp(1j * phase) + (1.0 - slm.eta)) * source
    dx, dy = slm.lateral_shift
    if dx != 0.0 or dy != 0.0:
        u = fourier_shift(u, dx, dy)
    return u


def slm_field(phi: PhasePattern, slm: SlmProfile, source: ComplexField) -> ComplexField:
    """Field reflected off an imperfect SLM.

    The drive phase passes the lookup-table nonlinearity and quantization,
    the tilt ramp is added, then u = [eta e^{i phi} + (1 - eta)] u_src and the
    whole field is translated by the lateral shift.

    Raises:
        GridMismatchError: If phase and source grids differ.
    """
    if phi.grid != source.grid:
        raise GridMismatchError(f"phase grid {phi.grid} does not match source grid {source.grid}")
    return source.replace(slm_field_array(phi.phase, slm, source.data))


def make_source(cfg: SourceConfig, prop: PropagationSpec) -> ComplexField:
    """Builds u_src on the propagation grid."""
    grid = prop.grid
    if cfg.kind == "uniform":
        return ComplexField.constant(grid, prop.wavelength, cfg.amplitude)
    x, y = grid.coordinates()
    r2 = x[None, :] ** 2 + y[:, None] ** 2
    return ComplexField(grid, cfg.amplitude * np.exp(-r2 / cfg.waist**2), prop.wavelength)


@dataclass(frozen=True, eq=False)
class HardwareProfile:
    """The hidden physical parameters of the emulated display.

    Attributes:
        slm1: Response of the first SLM.
        slm2: Response of the second SLM.
        camera: Virtual sensor settings.
        source: Illumination u_src.
        prop: Nominal SLM-to-target propagation.
        rng_seed: Seed of the sensor noise.
        source_gains: Per-SLM illumination gain; 0 blocks an SLM.
    """
    slm1: SlmProfile
    slm2: SlmProfile
    camera: CameraProfile
    source: ComplexField
    prop: PropagationSpec
    rng_seed: int = 0
    source_gains: Tuple[float, float] = field(default=(1.0, 1.0))

    def __post_init__(self):
        if self.source.grid != self.prop.grid:
            raise GridMismatchError("source grid and propagation grid disagree")
        for name, slm in (("slm1", self.slm1), ("slm2", self.slm2)):
            dx, dy = slm.lateral_shift
            if abs(dx) > self.prop.grid.nx / 4 or abs(dy) > self.prop.grid.ny / 4:
                raise ValueError(f"{name} lateral shift {slm.lateral_shift} exceeds a quarter of the grid")

    @classmethod
    def from_config(cls, cfg: HardwareConfig, prop: PropagationSpec) -> "HardwareProfile":
        prop = prop.model_copy(update={"pad_factor": cfg.pad_factor})
        return cls(
            slm1=cfg.slm1,
            slm2=cfg.slm2,
            camera=cfg.camera,
            source=make_source(cfg.source, prop),
            prop=prop,
            rng_seed=cfg.rng_seed,
        )

    @property
    def grid(self):
        return self.prop.grid

    def with_slm(self, index: int, **updates) -> "HardwareProfile":
        """Copy with fields of SLM `index` (1 or 2) updated."""
        name = f"slm{index}"
        return replace(self, **{name: getattr(self, name).model_copy(update=updates)})

    def with_eta(self, eta: float) -> "HardwareProfile":
        """Copy with the same diffraction efficiency on both SLMs."""
        return self.with_slm(1, eta=eta).with_slm(2, eta=eta)

    def with_blocked(self, index: Optional[int]) -> "HardwareProfile":
        """Copy with the illumination of SLM `index` blocked (None unblocks both)."""
        gains = (1.0, 1.0)
        if index == 1:
            gains = (0.0, 1.0)
        elif index == 2:
            gains = (1.0, 0.0)
        return replace(self, source_gains=gains)

    def describe(self) -> dict:
        """JSON-friendly summary used for hashing and run metadata."""
        return {
            "slm1": self.slm1.model_dump(),
            "slm2": self.slm2.model_dump(),
            "camera": self.camera.model_dump(),
            "prop": self.prop.model_dump(),
            "rng_seed": self.rng_seed,
            "source_gains": list(self.source_gains),
        }


def _check_phase(phi: PhasePattern, hw: HardwareProfile) -> None:
    if phi.grid != hw.grid:
        raise GridMismatchError(f"phase grid {phi.grid} does not match hardware grid {hw.grid}")


def capture_field(phi1: PhasePattern, phi2: Optional[PhasePattern], hw: HardwareProfile) -> np.ndarray:
    """Noise-free complex field at the target plane, the sum of both SLM paths.

    A missing phi2 models a single-SLM display.
    """
    _check_phase(phi1, hw)
    total = np.zeros(hw.grid.shape, dtype=np.complex128)
    for phi, slm, gain in ((phi1, hw.slm1, hw.source_gains[0]), (phi2, hw.slm2, hw.source_gains[1])):
        if phi is None or gain == 0.0:
            continue
        _check_phase(phi, hw)
        u = slm_field_array(phi.phase, slm, hw.source.data)
        if gain != 1.0:
            u = u * gain
        prop = hw.prop if slm.axial_shift == 0.0 else hw.prop.with_distance(hw.prop.distance + slm.axial_shift)
        total = total + propagate_array(u, prop)
    return total


def capture(
    phi1: PhasePattern,
    phi2: Optional[PhasePattern],
    hw: HardwareProfile,
    call_index: int = 0,
) -> np.ndarray:
    """Intensity recorded by the virtual camera.

    I = exposure |u|^2 of `capture_field`, plus seeded Gaussian noise drawn from the stream
    (rng_seed, call_index), clamped at zero and quantized to the sensor bit
    depth with the noise-free peak as full scale.

    Raises:
        GridMismatchError: If a phase grid differs from the hardware grid.
    """
    return sensor_image(capture_field(phi1, phi2, hw), hw, call_index)


def sensor_image(u: np.ndarray, hw: HardwareProfile, call_index: int = 0) -> np.ndarray:
    """What the camera records when the field `u` reaches the sensor."""
    intensity = u.real**2 + u.imag**2
    if hw.camera.exposure_scale != 1.0:
        intensity = hw.camera.exposure_scale * intensity
    peak = float(intensity.max())
    if hw.camera.noise_sigma > 0.0:
        rng = np.random.default_rng([hw.rng_seed, call_index])
        intensity = intensity + rng.normal(0.0, hw.camera.noise_sigma * peak, intensity.shape)
        intensity = np.maximum(intensity, 0.0)
    if hw.camera.bit_depth != "ideal" and peak > 0.0:
        levels = 2**hw.camera.bit_depth - 1
        intensity = np.round(np.clip(intensity / peak, 0.0, 1.0) * levels) / levels * peak
    return intensity


def captured_amplitude(
    phi1: PhasePattern,
    phi2: Optional[PhasePattern],
    hw: HardwareProfile,
    call_index: int = 0,
) -> np.ndarray:
    """Square root of `capture`, the amplitude the CITL loss consumes."""
    return np.sqrt(capture(phi1, phi2, hw, call_index))


class CaptureBackend(Protocol):
    """Anything that can display two phase patterns and return a captured intensity."""

    @property
    def grid(self): ...

    def capture(self, phi1: PhasePattern, phi2: Optional[PhasePattern]) -> np.ndarray: ...


@runtime_checkable
class FieldCaptureBackend(Protocol):
    """A backend that also reports the complex field it imaged (an emulator, or a phase-measuring sensor)."""

    @property
    def grid(self): ...

    def capture(self, phi1: PhasePattern, phi2: Optional[PhasePattern]) -> np.ndarray: ...

    def capture_with_field(
        self, phi1: PhasePattern, phi2: Optional[PhasePattern]
    ) -> Tuple[np.ndarray, np.ndarray]: ...


class EmulatedCamera:
    """`CaptureBackend` backed by the hardware emulator.

    Each capture draws its noise from the next stream index, so a run owns
    its own RNG sequence and runs never share state.
    """

    def __init__(self, hw: HardwareProfile, first_index: int = 0):
        self.hw = hw
        self.captures = first_index

    @property
    def grid(self):
        return self.hw.grid

    def capture(self, phi1: PhasePattern, phi2: Optional[PhasePattern]) -> np.ndarray:
        return self.capture_with_field(phi1, phi2)[0]

    def capture_with_field(
        self, phi1: PhasePattern, phi2: Optional[PhasePattern]
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Recorded intensity and the noise-free field at the sensor."""
        u = capture_field(phi1, phi2, self.hw)
        intensity = sensor_image(u, self.hw, call_index=self.captures)
        self.captures += 1
        return intensity, u
