"""Image-quality and contrast metrics."""
import logging
from typing import Literal, Optional, Tuple, Union

import numpy as np
from scipy import fft as sfft

from .field import TargetAmplitude
from .models import ContrastReport

logger = logging.getLogger(__name__)

PSNR_INF = float("inf")


def closed_form_scale(amplitude: np.ndarray, target: np.ndarray) -> float:
    """Least-squares optimal s for s*amplitude ~ target (0 for a black amplitude)."""
    denom = float(np.sum(amplitude * amplitude))
    if denom <= 0.0:
        return 0.0
    return float(np.sum(amplitude * target)) / denom


def psnr(
    reconstruction: np.ndarray,
    target: Union[TargetAmplitude, np.ndarray],
    mode: Literal["amplitude", "intensity"] = "intensity",
    rescale: bool = True,
    scale: Optional[float] = None,
) -> float:
    """Peak signal-to-noise ratio in dB against a max-normalized target.

    Args:
        reconstruction: Reconstructed amplitude image.
        target: Target amplitude (peak 1).
        mode: Compare amplitudes, or intensities (squares of both).
        rescale: Multiply the reconstruction by the closed-form s first.
        scale: Use this s instead of computing it (implies rescale).

    Returns:
        10 log10(1 / MSE), or +inf when the MSE is zero.
    """
    a_target = target.amplitude if isinstance(target, TargetAmplitude) else np.asarray(target, dtype=np.float64)
    recon = np.asarray(reconstruction, dtype=np.float64)
    if recon.shape != a_target.shape:
        raise ValueError(f"reconstruction shape {recon.shape} does not match target {a_target.shape}")
    if scale is not None:
        recon = scale * recon
    elif rescale:
        recon = closed_form_scale(recon, a_target) * recon
    if mode == "intensity":
        recon, a_target = recon**2, a_target**2
    mse = float(np.mean((recon - a_target) ** 2))
    if mse == 0.0:
        return PSNR_INF
    return 10.0 * np.log10(1.0 / mse)


def contrast_from_sinusoid(captured: np.ndarray, period: float, axis: Literal["x", "y"] = "x") -> ContrastReport:
    """Weber and Michelson contrast of a captured sinusoidal pattern.

    The image is averaged across the orthogonal axis; each full period of the
    resulting profile contributes its 5th percentile (lower sample) and 95th
    percentile (higher sample), and the extrema are the means of those.

    Raises:
        ValueError: If fewer than three full periods fit in the image.
    """
    captured = np.asarray(captured, dtype=np.float64)
    profile = captured.mean(axis=0) if axis == "x" else captured.mean(axis=1)
    if period <= 1 or period > profile.size:
        raise ValueError(f"period {period} px does not fit in a profile of {profile.size} px")
    n_periods = int(np.floor(profile.size / period))
    if n_periods < 3:
        raise ValueError(f"need at least 3 full periods along {axis}, got {n_periods}")
    highs, lows = [], []
    for k in range(n_periods):
        start = int(round(k * period))
        stop = int(round((k + 1) * period))
        segment = profile[start:stop]
        lows.append(np.percentile(segment, 5, method="lower"))
        highs.append(np.percentile(segment, 95, method="higher"))
    i_max = float(np.mean(highs))
    i_min = float(np.mean(lows))
    if i_min <= 1e-12 * max(i_max, 0.0):
        i_min = 0.0
    report = ContrastReport.from_extrema(i_max, i_min)
    logger.debug(f"Contrast over {n_periods} periods: michelson={report.michelson:.4f} weber={report.weber:.4g}")
    return report


def fringe_spectrum_peak(intensity: np.ndarray, axis: Literal["x", "y"] = "x") -> Tuple[int, float]:
    """Dominant non-DC frequency of the profile along an axis.

    Returns:
        (bin index in cycles per profile length, ratio of the peak magnitude to
        the largest bin outside the peak and its two neighbours).
    """
    profile = intensity.mean(axis=0) if axis == "x" else intensity.mean(axis=1)
    spectrum = np.abs(sfft.rfft(profile - profile.mean()))
    spectrum[0] = 0.0
    peak = int(np.argmax(spectrum))
    others = spectrum.copy()
    others[max(peak - 1, 0):peak + 2] = 0.0
    runner_up = float(others.max())
    ratio = float(spectrum[peak] / runner_up) if runner_up > 0 else PSNR_INF
    return peak, ratio
