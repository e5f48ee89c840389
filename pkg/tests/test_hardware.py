import numpy as np
import pytest
from pydantic import ValidationError

from holosim.errors import GridMismatchError
from holosim.field import TWO_PI, ComplexField, PhasePattern, wrap_phase
from holosim.hardware import (
    EmulatedCamera,
    FieldCaptureBackend,
    capture,
    capture_field,
    captured_amplitude,
    fourier_shift,
    quantize_phase,
    slm_field,
)
from holosim.metrics import fringe_spectrum_peak
from holosim.models import GridSpec, PropagationSpec, SlmProfile
from holosim.propagation import propagate_array

from conftest import PERFECT_SLM, make_hardware

GREEN = 520e-9


def _source(grid):
    return ComplexField.constant(grid, GREEN, 1.0)


def test_perfect_mirror(grid32):
    out = slm_field(PhasePattern.zeros(grid32), PERFECT_SLM, _source(grid32))
    np.testing.assert_allclose(out.data, 1.0, atol=1e-15)


def test_zero_efficiency_ignores_the_phase(grid32, rng):
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    out = slm_field(phi, SlmProfile(eta=0.0, phase_levels="continuous"), _source(grid32))
    np.testing.assert_allclose(out.data, 1.0, atol=1e-15)


def test_half_efficiency_pi_phase_cancels(grid32):
    phi = PhasePattern(grid32, np.full(grid32.shape, np.pi))
    out = slm_field(phi, SlmProfile(eta=0.5, phase_levels="continuous"), _source(grid32))
    np.testing.assert_allclose(out.data, 0.0, atol=1e-15)


def test_quantization_rounds_to_nearest_level(rng):
    np.testing.assert_allclose(quantize_phase(np.array([0.8]), 4), [np.pi / 2])
    assert quantize_phase(np.array([TWO_PI - 1e-9]), 256)[0] == 0.0
    phase = rng.uniform(0, TWO_PI, 1000)
    error = np.angle(np.exp(1j * (quantize_phase(phase, 256) - phase)))
    assert np.abs(error).max() <= np.pi / 256 + 1e-12
    assert quantize_phase(phase, "continuous") is phase


def test_integer_fourier_shift_is_a_roll(grid32, rng):
    data = rng.normal(size=grid32.shape) + 1j * rng.normal(size=grid32.shape)
    np.testing.assert_allclose(fourier_shift(data, 3, -2), np.roll(data, (-2, 3), axis=(0, 1)), atol=1e-12)


def test_lateral_shift_moves_the_slm_output(grid32, rng):
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    source = _source(grid32)
    aligned = slm_field(phi, PERFECT_SLM, source).data
    shifted = slm_field(phi, PERFECT_SLM.model_copy(update={"lateral_shift": (2.0, 0.0)}), source).data
    np.testing.assert_allclose(shifted, np.roll(aligned, 2, axis=1), atol=1e-12)


def test_tilt_adds_a_linear_ramp(grid32):
    slm = PERFECT_SLM.model_copy(update={"tilt": (0.1, 0.0)})
    out = slm_field(PhasePattern.zeros(grid32), slm, _source(grid32)).data
    steps = np.angle(out[:, 1:] / out[:, :-1])
    np.testing.assert_allclose(steps, 0.1, atol=1e-12)


def test_lut_must_be_monotone():
    with pytest.raises(ValidationError):
        SlmProfile(lut_cubic=(-1.0, 0.0, 0.0))
    SlmProfile(lut_cubic=(0.9, 0.15, -0.05))


def test_lut_distorts_the_displayed_phase(grid32):
    phi = PhasePattern(grid32, np.full(grid32.shape, np.pi))
    slm = SlmProfile(phase_levels="continuous", lut_cubic=(0.5, 0.5, 0.0))
    out = slm_field(phi, slm, _source(grid32)).data
    # t = 0.5 maps to 0.375 of a full turn
    np.testing.assert_allclose(out, np.exp(1j * TWO_PI * 0.375), atol=1e-12)


def test_flat_phases_give_uniform_intensity_without_padding():
    grid = GridSpec(nx=16, ny=16, pitch=6.4e-6)
    prop = PropagationSpec(wavelength=GREEN, distance=0.05, grid=grid, pad_factor=1)
    hw = make_hardware(prop)
    flat = PhasePattern.zeros(grid)
    np.testing.assert_allclose(capture(flat, flat, hw), 4.0, rtol=1e-12)
    np.testing.assert_allclose(capture(flat, flat, hw.with_blocked(2)), 1.0, rtol=1e-12)
    np.testing.assert_allclose(capture(flat, None, hw), 1.0, rtol=1e-12)
    np.testing.assert_allclose(captured_amplitude(flat, flat, hw), 2.0, rtol=1e-12)


def test_single_slm_equals_blocking_the_second(perfect_hw, grid32, rng):
    phi1 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    phi2 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    np.testing.assert_array_equal(capture(phi1, None, perfect_hw), capture(phi1, phi2, perfect_hw.with_blocked(2)))


def test_axial_shift_lengthens_the_second_path(prop32, grid32, rng):
    hw = make_hardware(prop32).with_slm(2, axial_shift=0.003).with_blocked(1)
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    expected = propagate_array(np.exp(1j * phi.phase), prop32.with_distance(0.023))
    np.testing.assert_allclose(capture_field(PhasePattern.zeros(grid32), phi, hw), expected, atol=1e-12)


def test_identical_slms_capture_symmetrically(perfect_hw, grid32, rng):
    a = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    b = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    np.testing.assert_allclose(capture(a, b, perfect_hw), capture(b, a, perfect_hw), atol=1e-12)


def _offset(phi: PhasePattern, c: float) -> PhasePattern:
    return PhasePattern(phi.grid, wrap_phase(phi.phase + c))


def test_global_phase_offset_is_invisible_only_at_full_efficiency(prop32, grid32, rng):
    phi1 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    phi2 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    perfect = make_hardware(prop32)
    np.testing.assert_allclose(
        capture(_offset(phi1, 1.3), _offset(phi2, 1.3), perfect), capture(phi1, phi2, perfect), atol=1e-9
    )

    half = SlmProfile(eta=0.5, phase_levels="continuous")
    leaky = make_hardware(prop32, half, half)
    shifted = capture(_offset(phi1, np.pi / 2), _offset(phi2, np.pi / 2), leaky)
    assert not np.allclose(shifted, capture(phi1, phi2, leaky), atol=1e-3)


def test_captured_amplitude_is_the_magnitude_of_the_summed_paths(perfect_hw, prop32, grid32, rng):
    phi1 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    phi2 = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    g1 = propagate_array(np.exp(1j * phi1.phase), prop32)
    g2 = propagate_array(np.exp(1j * phi2.phase), prop32)
    np.testing.assert_allclose(captured_amplitude(phi1, phi2, perfect_hw), np.abs(g1 + g2), atol=1e-12)


def test_noise_is_seeded_per_capture(prop32, grid32, rng):
    hw = make_hardware(prop32, noise_sigma=0.01)
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    first = capture(phi, phi, hw, call_index=0)
    np.testing.assert_array_equal(first, capture(phi, phi, hw, call_index=0))
    assert not np.array_equal(first, capture(phi, phi, hw, call_index=1))
    assert first.min() >= 0.0


def test_bit_depth_quantizes_intensity(prop32, grid32, rng):
    hw = make_hardware(prop32, bit_depth=1)
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    values = np.unique(capture(phi, phi, hw))
    assert len(values) <= 2
    assert values.min() == 0.0


def test_exposure_scales_intensity(prop32, grid32, rng):
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))
    plain = capture(phi, phi, make_hardware(prop32))
    doubled = capture(phi, phi, make_hardware(prop32, exposure_scale=2.0))
    np.testing.assert_allclose(doubled, 2.0 * plain, rtol=1e-12)


def test_grid_mismatch_and_oversized_shift(perfect_hw):
    with pytest.raises(GridMismatchError):
        capture(PhasePattern.zeros(GridSpec(nx=16, ny=16, pitch=6.4e-6)), None, perfect_hw)
    with pytest.raises(ValueError):
        perfect_hw.with_slm(2, lateral_shift=(9.0, 0.0))


def test_emulated_camera_counts_captures(perfect_hw, grid32):
    camera = EmulatedCamera(perfect_hw)
    flat = PhasePattern.zeros(grid32)
    camera.capture(flat, flat)
    camera.capture(flat, None)
    assert camera.captures == 2
    assert camera.grid == grid32


def test_emulated_camera_reports_the_imaged_field(prop32, grid32, rng):
    hw = make_hardware(prop32, noise_sigma=0.01)
    camera = EmulatedCamera(hw, first_index=3)
    phi = PhasePattern(grid32, rng.uniform(0, TWO_PI, grid32.shape))

    intensity, u = camera.capture_with_field(phi, phi)

    assert isinstance(camera, FieldCaptureBackend)
    assert camera.captures == 4
    np.testing.assert_array_equal(intensity, capture(phi, phi, hw, call_index=3))
    np.testing.assert_array_equal(u, capture_field(phi, phi, hw))


def test_tilted_second_slm_draws_fringes():
    grid = GridSpec(nx=64, ny=64, pitch=6.4e-6)
    prop = PropagationSpec(wavelength=GREEN, distance=0.005, grid=grid)
    hw = make_hardware(prop, PERFECT_SLM, PERFECT_SLM.model_copy(update={"tilt": (TWO_PI / 16, 0.0)}))
    flat = PhasePattern.zeros(grid)
    peak, ratio = fringe_spectrum_peak(capture(flat, flat, hw))
    assert peak == 4
    assert ratio > 2
