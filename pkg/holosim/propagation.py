"""Angular spectrum propagation and its exact adjoint."""
import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from .errors import GridMismatchError
from .field import ComplexField, fft2c, ifft2c
from .models import PropagationSpec


def transfer_function(fx: np.ndarray, fy: np.ndarray, wavelength: float, distance: float) -> np.ndarray:
    """Angular spectrum transfer function H(fx, fy).

    H = exp(i 2pi/lambda sqrt(1 - (lambda fx)^2 - (lambda fy)^2) z) for
    sqrt(fx^2 + fy^2) < 1/lambda and 0 for evanescent frequencies.
    """
    fx, fy = np.broadcast_arrays(np.asarray(fx, dtype=np.float64), np.asarray(fy, dtype=np.float64))
    arg = 1.0 - (wavelength * fx) ** 2 - (wavelength * fy) ** 2
    propagating = fx**2 + fy**2 < 1.0 / wavelength**2
    H = np.zeros(fx.shape, dtype=np.complex128)
    k = 2.0 * np.pi / wavelength
    H[propagating] = np.exp(1j * k * np.sqrt(arg[propagating]) * distance)
    return H


@lru_cache(maxsize=64)
def asm_transfer(spec: PropagationSpec) -> np.ndarray:
    """Transfer function sampled on the (padded) centered frequency grid.

    Masks are memoized per spec and returned read-only.
    """
    fx, fy = spec.grid.padded(spec.pad_factor).frequencies()
    H = transfer_function(fx[None, :], fy[:, None], spec.wavelength, spec.distance)
    H.setflags(write=False)
    return H


def axial_pixel(spec: PropagationSpec) -> float:
    """Axial distance over which the steepest propagating ray walks one pixel sideways.

    The largest angle the grid samples is asin(lambda / (2 pitch)), so one
    pixel of walk-off takes about 2 pitch^2 / lambda of extra distance.
    Axial offsets quoted in pixels use this unit.
    """
    return 2.0 * spec.grid.pitch**2 / spec.wavelength


def _pad_window(spec: PropagationSpec) -> Tuple[slice, slice]:
    ny, nx = spec.grid.shape
    NY, NX = ny * spec.pad_factor, nx * spec.pad_factor
    top, left = (NY - ny) // 2, (NX - nx) // 2
    return slice(top, top + ny), slice(left, left + nx)


def _pad(data: np.ndarray, spec: PropagationSpec) -> np.ndarray:
    if spec.pad_factor == 1:
        return data
    padded = np.zeros((spec.grid.ny * spec.pad_factor, spec.grid.nx * spec.pad_factor), dtype=np.complex128)
    padded[_pad_window(spec)] = data
    return padded


def _crop(data: np.ndarray, spec: PropagationSpec) -> np.ndarray:
    if spec.pad_factor == 1:
        return data
    return data[_pad_window(spec)]


def propagate_array(data: np.ndarray, spec: PropagationSpec) -> np.ndarray:
    """Array-level `propagate` without field validation (solver hot path)."""
    return _crop(ifft2c(fft2c(_pad(data, spec)) * asm_transfer(spec)), spec)


def propagate_adjoint_array(data: np.ndarray, spec: PropagationSpec) -> np.ndarray:
    """Array-level `propagate_adjoint`.

    Crop and pad are each other's adjoints, so the adjoint keeps the
    structure of the forward map with conj(H).
    """
    return _crop(ifft2c(fft2c(_pad(data, spec)) * np.conj(asm_transfer(spec))), spec)


def _check(field: ComplexField, spec: PropagationSpec) -> None:
    if field.grid != spec.grid:
        raise GridMismatchError(f"field grid {field.grid} does not match propagation grid {spec.grid}")
    if not math.isclose(field.wavelength, spec.wavelength, rel_tol=1e-12):
        raise GridMismatchError(
            f"field wavelength {field.wavelength} does not match propagation wavelength {spec.wavelength}"
        )


def propagate(field: ComplexField, spec: PropagationSpec) -> ComplexField:
    """Propagates a field over spec.distance with the angular spectrum method.

    With pad_factor 2 the field is zero-padded before filtering and cropped
    afterwards; pad_factor 1 is the plain circular-convolution ASM.

    Raises:
        GridMismatchError: If the field grid or wavelength differ from `spec`.
    """
    _check(field, spec)
    return field.replace(propagate_array(field.data, spec))


def propagate_adjoint(cotangent: ComplexField, spec: PropagationSpec) -> ComplexField:
    """Applies the conjugate transpose of `propagate(., spec)`.

    Raises:
        GridMismatchError: If the field grid or wavelength differ from `spec`.
    """
    _check(cotangent, spec)
    return cotangent.replace(propagate_adjoint_array(cotangent.data, spec))
