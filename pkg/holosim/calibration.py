"""Inter-SLM registration: sub-pixel shift estimation and phase pre-compensation."""
import logging
from typing import Tuple

import numpy as np
from scipy import fft as sfft
from scipy import ndimage
from scipy.signal import windows

from .errors import CalibrationError
from .field import TWO_PI, PhasePattern, wrap_phase
from .hardware import HardwareProfile, capture, fourier_shift
from .models import AlignmentEstimate, GridSpec, PropagationSpec
from .propagation import propagate_array

logger = logging.getLogger(__name__)

MIN_CONFIDENCE = 0.1


def _peak_offset(left: float, center: float, right: float) -> float:
    """Vertex of the parabola through three samples, fitted on their logs when possible.

    The log fit is exact for a Gaussian peak.
    """
    if left > 0 and center > 0 and right > 0:
        left, center, right = np.log(left), np.log(center), np.log(right)
    denom = left - 2.0 * center + right
    if denom >= 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def _correlate(a: np.ndarray, b: np.ndarray, sigma: float) -> Tuple[float, float, float]:
    """Windowed, Gaussian-weighted phase correlation; returns (dx, dy, confidence)."""
    ny, nx = a.shape
    # Hann apodization keeps the image border out of the cross-power spectrum.
    window = windows.hann(ny, sym=False)[:, None] * windows.hann(nx, sym=False)[None, :]
    cross = sfft.fft2((b - b.mean()) * window) * np.conj(sfft.fft2((a - a.mean()) * window))
    magnitude = np.abs(cross)
    if not magnitude.max() > 0.0:
        raise CalibrationError("calibration images carry no structure")
    normalized = cross / (magnitude + 1e-3 * magnitude.max())
    # Mean removal leaves DC undefined; count it as a perfect match.
    normalized[0, 0] = 1.0

    fx = sfft.fftfreq(nx)
    fy = sfft.fftfreq(ny)
    weight = np.exp(-2.0 * np.pi**2 * sigma**2 * (fx[None, :] ** 2 + fy[:, None] ** 2))
    corr = np.real(sfft.ifft2(normalized * weight))
    ideal = weight.sum() / weight.size

    py, px = np.unravel_index(int(np.argmax(corr)), corr.shape)
    peak = corr[py, px]
    off_y = _peak_offset(corr[(py - 1) % ny, px], peak, corr[(py + 1) % ny, px])
    off_x = _peak_offset(corr[py, (px - 1) % nx], peak, corr[py, (px + 1) % nx])
    dy = (py - ny if py > ny // 2 else py) + off_y
    dx = (px - nx if px > nx // 2 else px) + off_x
    return float(dx), float(dy), float(np.clip(peak / ideal, 0.0, 1.0))


def estimate_shift(
    img_a: np.ndarray,
    img_b: np.ndarray,
    sigma: float = 1.5,
    min_confidence: float = MIN_CONFIDENCE,
) -> AlignmentEstimate:
    """Estimates the translation carrying img_a onto img_b.

    Phase correlation of Hann-windowed images whose cross-power spectrum is
    weighted by a Gaussian low-pass of spatial width `sigma` px, so the
    correlation peak is a sampled Gaussian; a parabola through the logs of the
    three samples around the integer maximum gives the sub-pixel position on
    each axis. The window pulls the peak slightly toward zero, so img_a is
    Fourier-shifted by the first estimate and the small residual is added.

    Args:
        img_a: Reference intensity image.
        img_b: Displaced intensity image.
        sigma: Width of the correlation peak in pixels.
        min_confidence: Smallest acceptable normalized peak height.

    Returns:
        (dx, dy) such that img_b(x, y) ~ img_a(x - dx, y - dy), and the peak
        height relative to a perfect match.

    Raises:
        CalibrationError: If the images carry no structure or the confidence is too low.
    """
    a = np.asarray(img_a, dtype=np.float64)
    b = np.asarray(img_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"images must be 2D and equally sized, got {a.shape} and {b.shape}")
    dx, dy, confidence = _correlate(a, b, sigma)
    if confidence < min_confidence:
        raise CalibrationError(f"calibration failed: correlation confidence {confidence:.3f} < {min_confidence}")
    res_x, res_y, _ = _correlate(np.real(fourier_shift(a, dx, dy)), b, sigma)
    dx, dy = dx + res_x, dy + res_y
    logger.debug(f"Estimated shift dx={dx:.3f} dy={dy:.3f} confidence={confidence:.3f}")
    return AlignmentEstimate(dx=float(dx), dy=float(dy), confidence=confidence)


def apply_alignment(phi: PhasePattern, est: AlignmentEstimate) -> PhasePattern:
    """Pre-shifts a phase pattern by (-dx, -dy) to cancel a measured displacement.

    e^{i phi} is resampled bilinearly (edge values extended) and the result's
    argument is wrapped into [0, 2pi).
    """
    if est.dx == 0.0 and est.dy == 0.0:
        return phi
    carrier = np.exp(1j * phi.phase)
    offset = (-est.dy, -est.dx)
    real = ndimage.shift(carrier.real, offset, order=1, mode="nearest")
    imag = ndimage.shift(carrier.imag, offset, order=1, mode="nearest")
    return PhasePattern(phi.grid, wrap_phase(np.arctan2(imag, real)))


def calibration_dots(
    grid: GridSpec,
    seed: int = 0,
    spacing: float = 10.0,
    sigma: float = 2.0,
    margin: int = 32,
) -> np.ndarray:
    """Randomly placed Gaussian dots with unit peak, `margin` pixels away from the edges."""
    rng = np.random.default_rng(seed)
    margin = min(margin, grid.nx // 4, grid.ny // 4)
    width, height = grid.nx - 2 * margin, grid.ny - 2 * margin
    count = max(int(width * height / spacing**2), 1)
    impulses = np.zeros(grid.shape)
    rows = rng.integers(margin, margin + height, count)
    cols = rng.integers(margin, margin + width, count)
    impulses[rows, cols] = 1.0
    dots = ndimage.gaussian_filter(impulses, sigma, mode="constant")
    return dots / dots.max()


def calibration_phase(prop: PropagationSpec, seed: int = 0) -> PhasePattern:
    """Phase-only hologram of `calibration_dots` for the nominal propagation.

    The dots carry seeded random phases and are propagated back to the SLM
    plane; the hologram keeps the argument. Its image is the dots under
    speckle, all of it formed by the SLM itself, so a displaced SLM moves the
    whole image with it.
    """
    rng = np.random.default_rng([seed, 1])
    dots = calibration_dots(prop.grid, seed=seed)
    spread = dots * np.exp(1j * rng.uniform(0.0, TWO_PI, dots.shape))
    return PhasePattern(prop.grid, wrap_phase(np.angle(propagate_array(spread, prop.reversed()))))


def _pattern_capture(hw: HardwareProfile, index: int, pattern: PhasePattern) -> np.ndarray:
    flat = PhasePattern.zeros(hw.grid)
    lit = hw.with_blocked(2 if index == 1 else 1)
    pair = (pattern, flat) if index == 1 else (flat, pattern)
    return capture(pair[0], pair[1], lit)


def calibrate_hardware(hw: HardwareProfile, seed: int = 0) -> Tuple[AlignmentEstimate, np.ndarray, np.ndarray]:
    """Measures where SLM 2 lands relative to SLM 1 on the target plane.

    Each SLM in turn displays the dot hologram while the other is blocked,
    and the two captures are registered against each other.

    Returns:
        The estimate and the two captures it was computed from.

    Raises:
        CalibrationError: If the two contributions do not correlate.
    """
    pattern = calibration_phase(hw.prop, seed=seed)
    img1 = _pattern_capture(hw, 1, pattern)
    img2 = _pattern_capture(hw, 2, pattern)
    est = estimate_shift(img1, img2)
    logger.info(f"Calibrated SLM 2 offset: dx={est.dx:.3f} px dy={est.dy:.3f} px (confidence {est.confidence:.2f})")
    return est, img1, img2
