"""Field and grid value types, the centered unitary FFT, and target images."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import fft as sfft

from .errors import GridMismatchError, TargetLoadError
from .models import GridSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _check_shape(grid: GridSpec, array: np.ndarray, what: str) -> None:
    if array.shape != grid.shape:
        raise GridMismatchError(f"{what} has shape {array.shape}, grid expects {grid.shape}")


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A sampled complex optical field.

    Attributes:
        grid: The sampling grid.
        data: Complex amplitudes, shape (ny, nx).
        wavelength: Wavelength in meters.
    """
    grid: GridSpec
    data: np.ndarray
    wavelength: float

    def __post_init__(self):
        data = _frozen(self.data, np.complex128)
        _check_shape(self.grid, data, "field data")
        if not np.all(np.isfinite(data)):
            raise ValueError("field data must be finite")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        object.__setattr__(self, "data", data)

    def replace(self, data: np.ndarray) -> "ComplexField":
        """A field on the same grid and wavelength with new samples."""
        return ComplexField(self.grid, data, self.wavelength)

    @property
    def intensity(self) -> np.ndarray:
        return self.data.real**2 + self.data.imag**2

    @classmethod
    def constant(cls, grid: GridSpec, wavelength: float, value: complex = 1.0) -> "ComplexField":
        return cls(grid, np.full(grid.shape, value, dtype=np.complex128), wavelength)


@dataclass(frozen=True, eq=False)
class PhasePattern:
    """An SLM phase pattern in radians, shape (ny, nx)."""
    grid: GridSpec
    phase: np.ndarray

    def __post_init__(self):
        phase = _frozen(self.phase, np.float64)
        _check_shape(self.grid, phase, "phase")
        if not np.all(np.isfinite(phase)):
            raise ValueError("phase must be finite")
        object.__setattr__(self, "phase", phase)

    def wrapped(self) -> "PhasePattern":
        """Canonical representation with every value in [0, 2pi)."""
        return PhasePattern(self.grid, wrap_phase(self.phase))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "PhasePattern":
        return cls(grid, np.zeros(grid.shape))


@dataclass(frozen=True, eq=False)
class TargetAmplitude:
    """Target image amplitude, max-normalized to 1."""
    grid: GridSpec
    amplitude: np.ndarray

    def __post_init__(self):
        amplitude = _frozen(self.amplitude, np.float64)
        _check_shape(self.grid, amplitude, "target amplitude")
        if not np.all(np.isfinite(amplitude)):
            raise ValueError("target amplitude must be finite")
        if amplitude.min() < 0.0 or amplitude.max() > 1.0:
            raise ValueError("target amplitude must lie in [0, 1]")
        object.__setattr__(self, "amplitude", amplitude)

    @classmethod
    def from_amplitude(cls, grid: GridSpec, amplitude: np.ndarray) -> "TargetAmplitude":
        """Normalizes a non-negative amplitude image by its maximum.

        Raises:
            TargetLoadError: If the image is zero everywhere.
        """
        amplitude = np.clip(np.asarray(amplitude, dtype=np.float64), 0.0, None)
        peak = amplitude.max()
        if not peak > 0.0:
            raise TargetLoadError("target is zero everywhere; the scale factor is undefined")
        return cls(grid, amplitude / peak)

    @classmethod
    def from_intensity(cls, grid: GridSpec, intensity: np.ndarray) -> "TargetAmplitude":
        return cls.from_amplitude(grid, np.sqrt(np.clip(intensity, 0.0, None)))


def wrap_phase(phase: np.ndarray) -> np.ndarray:
    """Wraps phase values into [0, 2pi)."""
    wrapped = np.mod(np.asarray(phase, dtype=np.float64), TWO_PI)
    # np.mod can round tiny negatives up to exactly 2pi.
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def fft2c(data: np.ndarray) -> np.ndarray:
    """Unitary 2D DFT of an array with the DC sample at index n//2."""
    return sfft.fftshift(sfft.fft2(sfft.ifftshift(data, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))


def ifft2c(data: np.ndarray) -> np.ndarray:
    """Inverse of `fft2c`."""
    return sfft.fftshift(sfft.ifft2(sfft.ifftshift(data, axes=(-2, -1)), norm="ortho"), axes=(-2, -1))


def fft2_centered(field: ComplexField) -> ComplexField:
    """Unitary, centered 2D Fourier transform of a field.

    The returned field lives on the frequency grid: sample (k_y, k_x) holds
    the coefficient of frequency ((k_x - nx//2)/(nx pitch), (k_y - ny//2)/(ny pitch)).
    """
    return field.replace(fft2c(field.data))


def ifft2_centered(spectrum: ComplexField) -> ComplexField:
    """Inverse of `fft2_centered`."""
    return spectrum.replace(ifft2c(spectrum.data))


def srgb_to_linear(values: np.ndarray) -> np.ndarray:
    """Decodes sRGB-encoded values in [0, 1] to linear intensity."""
    return np.where(values <= 0.04045, values / 12.92, ((values + 0.055) / 1.055) ** 2.4)


def _read_channels(path: Path) -> List[np.ndarray]:
    """Reads an image as a list of linear [0, 1] float channels."""
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode in ("I;16", "I;16B", "I;16L", "I"):
                data = np.asarray(img, dtype=np.float64)
                return [data / 65535.0]
            if img.mode == "L":
                return [np.asarray(img, dtype=np.float64) / 255.0]
            if img.mode == "F":
                return [np.asarray(img, dtype=np.float64)]
            rgb = img.convert("RGB")
            data = np.asarray(rgb, dtype=np.float64) / 255.0
            return [data[..., c] for c in range(3)]
    except (FileNotFoundError, UnidentifiedImageError, OSError) as e:
        raise TargetLoadError(f"cannot read target image {path}: {e}") from e


def fit_to_grid(image: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Downscales an image to fit the grid (keeping aspect) and centers it on a zero canvas."""
    h, w = image.shape
    if h > grid.ny or w > grid.nx:
        scale = min(grid.ny / h, grid.nx / w)
        new_w = max(1, min(grid.nx, int(round(w * scale))))
        new_h = max(1, min(grid.ny, int(round(h * scale))))
        resized = Image.fromarray(image.astype(np.float32)).resize(
            (new_w, new_h), Image.Resampling.BILINEAR
        )
        image = np.clip(np.asarray(resized, dtype=np.float64), 0.0, None)
        h, w = image.shape
    canvas = np.zeros(grid.shape)
    top = (grid.ny - h) // 2
    left = (grid.nx - w) // 2
    canvas[top:top + h, left:left + w] = image
    return canvas


def load_target_channels(path: Union[str, Path], grid: GridSpec, srgb: bool = False) -> List[TargetAmplitude]:
    """Loads every channel of an image as an independent target.

    Args:
        path: PNG or PGM file, 8 or 16 bit, grayscale or color.
        grid: The target grid.
        srgb: Decode sRGB gamma before taking the square root.

    Returns:
        One target per channel (one for grayscale, three for color).

    Raises:
        TargetLoadError: If the file is unreadable or a channel is all black.
    """
    targets = []
    for channel in _read_channels(Path(path)):
        intensity = srgb_to_linear(channel) if srgb else channel
        intensity = fit_to_grid(intensity, grid)
        targets.append(TargetAmplitude.from_intensity(grid, intensity))
    logger.debug(f"Loaded {len(targets)} target channel(s) from {path}")
    return targets


def load_target(
    path: Union[str, Path],
    grid: GridSpec,
    channel: Optional[int] = None,
    srgb: bool = False,
) -> TargetAmplitude:
    """Loads a target image as a max-normalized amplitude.

    Color images yield the requested channel; with no channel given, the
    channels' linear intensities are averaged.

    Raises:
        TargetLoadError: If the file is unreadable or the image is all black.
    """
    channels = _read_channels(Path(path))
    if channel is not None and not 0 <= channel < len(channels):
        raise TargetLoadError(f"{path} has no channel {channel}")
    if srgb:
        channels = [srgb_to_linear(c) for c in channels]
    intensity = channels[channel] if channel is not None else np.mean(channels, axis=0)
    return TargetAmplitude.from_intensity(grid, fit_to_grid(intensity, grid))


def save_png(path: Union[str, Path], intensity: np.ndarray) -> Path:
    """Writes an 8-bit grayscale PNG of the intensity clamped to [0, 1]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.round(np.clip(intensity, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(pixels).save(path)
    return path


def save_rgb_png(path: Union[str, Path], channels: List[np.ndarray]) -> Path:
    """Stacks three intensity images into an 8-bit RGB PNG."""
    if len(channels) != 3:
        raise ValueError("an RGB composite needs exactly three channels")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stacked = np.stack([np.clip(c, 0.0, 1.0) for c in channels], axis=-1)
    Image.fromarray(np.round(stacked * 255.0).astype(np.uint8)).save(path)
    return path


def resolution_chart(grid: GridSpec) -> TargetAmplitude:
    """Procedural bar chart: triplets of bars of decreasing width on a dark field.

    Vertical triplets fill the upper half, horizontal triplets the lower half.
    """
    img = np.zeros(grid.shape)
    unit = max(min(grid.nx, grid.ny) / 256.0, 0.25)
    widths = [w for w in (12, 9, 6, 4, 3, 2, 1) if int(round(w * unit)) >= 1]
    margin = max(int(round(8 * unit)), 1)
    half = grid.ny // 2
    x = margin
    for w in widths:
        bar = max(int(round(w * unit)), 1)
        length = max(half - 2 * margin, 1)
        if x + 5 * bar > grid.nx - margin:
            break
        for k in range(3):
            x0 = x + 2 * k * bar
            img[margin:margin + length, x0:x0 + bar] = 1.0
            r0 = half + x0
            img[r0:r0 + bar, margin:margin + length] = 1.0
        x += 6 * bar + margin
    # Frame so every chart has content even on tiny grids.
    edge = max(int(round(2 * unit)), 1)
    img[:edge, :] = img[-edge:, :] = 0.5
    img[:, :edge] = img[:, -edge:] = 0.5
    return TargetAmplitude.from_amplitude(grid, img)


def sinusoid_grating(grid: GridSpec, period: float, axis: str = "x", offset: float = 0.5, depth: float = 0.5) -> TargetAmplitude:
    """Target whose intensity is offset + depth*cos(2 pi t / period) along an axis (pixels)."""
    t = np.arange(grid.nx if axis == "x" else grid.ny, dtype=np.float64)
    profile = offset + depth * np.cos(TWO_PI * t / period)
    intensity = np.broadcast_to(profile[None, :] if axis == "x" else profile[:, None], grid.shape)
    return TargetAmplitude.from_intensity(grid, intensity)


def dot_grid(grid: GridSpec, spacing: int = 16, sigma: float = 1.5) -> TargetAmplitude:
    """Regular lattice of Gaussian dots."""
    y, x = np.mgrid[0:grid.ny, 0:grid.nx].astype(np.float64)
    dx = np.mod(x - spacing / 2.0, spacing) - spacing / 2.0
    dy = np.mod(y - spacing / 2.0, spacing) - spacing / 2.0
    return TargetAmplitude.from_amplitude(grid, np.exp(-(dx**2 + dy**2) / (2.0 * sigma**2)))
