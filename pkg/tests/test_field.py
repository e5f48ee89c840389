import numpy as np
import pytest
from PIL import Image

from holosim.errors import GridMismatchError, TargetLoadError
from holosim.field import (
    TWO_PI,
    ComplexField,
    PhasePattern,
    TargetAmplitude,
    dot_grid,
    fft2_centered,
    fft2c,
    ifft2_centered,
    ifft2c,
    load_target,
    load_target_channels,
    resolution_chart,
    save_png,
    sinusoid_grating,
    srgb_to_linear,
    wrap_phase,
)
from holosim.models import GridSpec


def test_complex_field_rejects_wrong_shape(grid32):
    with pytest.raises(GridMismatchError):
        ComplexField(grid32, np.ones((16, 32)), 520e-9)


def test_complex_field_rejects_non_finite(grid32):
    data = np.ones(grid32.shape, dtype=complex)
    data[3, 4] = np.nan
    with pytest.raises(ValueError):
        ComplexField(grid32, data, 520e-9)


def test_complex_field_is_read_only(grid32):
    field = ComplexField.constant(grid32, 520e-9, 1.0)
    with pytest.raises(ValueError):
        field.data[0, 0] = 2.0


def test_rectangular_grid_shape_is_rows_by_columns():
    grid = GridSpec(nx=48, ny=16, pitch=1e-6)
    assert grid.shape == (16, 48)
    assert PhasePattern.zeros(grid).phase.shape == (16, 48)


def test_wrap_phase_range():
    values = np.array([-1e-17, -np.pi, 0.0, TWO_PI, 3 * TWO_PI + 0.5, 7.0])
    wrapped = wrap_phase(values)
    assert np.all(wrapped >= 0.0) and np.all(wrapped < TWO_PI)
    assert wrapped[0] == 0.0
    assert wrapped[3] == 0.0
    np.testing.assert_allclose(wrapped[4], 0.5, atol=1e-12)


def test_phase_pattern_wrapped(grid32, rng):
    phi = PhasePattern(grid32, rng.uniform(-20, 20, grid32.shape)).wrapped()
    assert phi.phase.min() >= 0.0 and phi.phase.max() < TWO_PI


def test_centered_fft_is_unitary_and_centered(rng):
    x = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    X = fft2c(x)
    np.testing.assert_allclose(np.linalg.norm(X), np.linalg.norm(x), rtol=1e-12)
    np.testing.assert_allclose(ifft2c(X), x, atol=1e-12)
    dc = fft2c(np.ones((16, 16)))
    assert np.unravel_index(np.argmax(np.abs(dc)), dc.shape) == (8, 8)
    np.testing.assert_allclose(dc[8, 8], 16.0, rtol=1e-12)


def test_centered_fft_of_a_field_keeps_grid_and_wavelength(grid32, rng):
    field = ComplexField(grid32, np.exp(1j * rng.uniform(0.0, TWO_PI, grid32.shape)), 520e-9)
    spectrum = fft2_centered(field)
    assert spectrum.grid == grid32
    assert spectrum.wavelength == 520e-9
    np.testing.assert_allclose(spectrum.data, fft2c(field.data), atol=1e-12)
    np.testing.assert_allclose(ifft2_centered(spectrum).data, field.data, atol=1e-12)


def test_target_normalized_to_unit_peak(grid32, rng):
    target = TargetAmplitude.from_amplitude(grid32, 3.0 * rng.uniform(size=grid32.shape))
    assert target.amplitude.max() == pytest.approx(1.0)
    assert target.amplitude.min() >= 0.0


def test_black_target_raises(grid32):
    with pytest.raises(TargetLoadError):
        TargetAmplitude.from_amplitude(grid32, np.zeros(grid32.shape))


def test_target_out_of_range_rejected(grid32):
    with pytest.raises(ValueError):
        TargetAmplitude(grid32, np.full(grid32.shape, 1.5))


def test_load_grayscale_png_uses_sqrt_of_linear_value(tmp_path, grid32):
    pixels = np.full((32, 32), 64, dtype=np.uint8)
    pixels[10, 10] = 255
    path = tmp_path / "target.png"
    Image.fromarray(pixels).save(path)

    target = load_target(path, grid32)

    assert target.amplitude[10, 10] == pytest.approx(1.0)
    assert target.amplitude[0, 0] == pytest.approx(np.sqrt(64 / 255))


def test_load_16bit_png(tmp_path, grid32):
    pixels = np.full((32, 32), 16384, dtype=np.uint16)
    pixels[0, 0] = 65535
    path = tmp_path / "deep.png"
    Image.fromarray(pixels).save(path)

    target = load_target(path, grid32)

    assert target.amplitude[5, 5] == pytest.approx(np.sqrt(16384 / 65535), rel=1e-6)


def test_small_image_is_centered_on_the_grid(tmp_path, grid32):
    path = tmp_path / "small.png"
    Image.fromarray(np.full((8, 8), 200, dtype=np.uint8)).save(path)

    target = load_target(path, grid32)

    assert target.amplitude[12:20, 12:20].min() == pytest.approx(1.0)
    assert target.amplitude[:12].max() == 0.0


def test_large_image_is_downscaled_to_fit(tmp_path, grid32):
    path = tmp_path / "large.png"
    Image.fromarray(np.full((64, 128), 255, dtype=np.uint8)).save(path)

    target = load_target(path, grid32)

    assert target.amplitude.shape == (32, 32)
    assert target.amplitude[16, 16] == pytest.approx(1.0, abs=1e-6)
    assert target.amplitude[0, 16] == 0.0


def test_color_image_channels(tmp_path, grid32):
    rgb = np.zeros((32, 32, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    rgb[..., 1] = 128
    rgb[..., 2] = 32
    path = tmp_path / "rgb.png"
    Image.fromarray(rgb).save(path)

    channels = load_target_channels(path, grid32)
    assert len(channels) == 3
    blue = load_target(path, grid32, channel=2)
    np.testing.assert_allclose(blue.amplitude, 1.0)
    with pytest.raises(TargetLoadError):
        load_target(path, grid32, channel=3)


def test_srgb_decoding_changes_mid_gray(tmp_path, grid32):
    pixels = np.full((32, 32), 128, dtype=np.uint8)
    pixels[0, 0] = 255
    path = tmp_path / "gray.png"
    Image.fromarray(pixels).save(path)

    linear = load_target(path, grid32)
    decoded = load_target(path, grid32, srgb=True)

    assert decoded.amplitude[5, 5] < linear.amplitude[5, 5]
    assert decoded.amplitude[5, 5] ** 2 == pytest.approx(0.2158605, rel=1e-4)


def test_srgb_color_average_decodes_each_channel_before_mixing(tmp_path, grid32):
    rgb = np.zeros((32, 32, 3), dtype=np.uint8)
    rgb[...] = (255, 0, 128)
    rgb[0, 0] = (255, 255, 255)
    path = tmp_path / "rgb.png"
    Image.fromarray(rgb).save(path)

    target = load_target(path, grid32, srgb=True)

    expected = np.mean(srgb_to_linear(np.array([1.0, 0.0, 128 / 255])))
    assert target.amplitude[5, 5] ** 2 == pytest.approx(expected, rel=1e-9)
    assert target.amplitude[5, 5] ** 2 != pytest.approx(srgb_to_linear(np.mean([1.0, 0.0, 128 / 255])), rel=1e-3)


def test_saved_target_reloads_to_the_same_amplitude(tmp_path, grid32, rng):
    intensity = rng.uniform(0.0, 1.0, grid32.shape)
    intensity[0, 0] = 1.0
    first = load_target(save_png(tmp_path / "a.png", intensity), grid32)
    second = load_target(save_png(tmp_path / "b.png", first.amplitude**2), grid32)

    np.testing.assert_array_equal(first.amplitude, second.amplitude)
    with Image.open(tmp_path / "a.png") as a, Image.open(tmp_path / "b.png") as b:
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))


def test_missing_or_corrupt_target_raises(tmp_path, grid32):
    with pytest.raises(TargetLoadError):
        load_target(tmp_path / "nope.png", grid32)
    bogus = tmp_path / "bogus.png"
    bogus.write_text("not an image")
    with pytest.raises(TargetLoadError):
        load_target(bogus, grid32)


def test_save_png_writes_8bit(tmp_path):
    path = save_png(tmp_path / "out" / "img.png", np.linspace(-0.5, 1.5, 64).reshape(8, 8))
    with Image.open(path) as img:
        data = np.asarray(img)
    assert data.dtype == np.uint8
    assert data.min() == 0 and data.max() == 255


def test_sinusoid_grating_intensity_profile(grid32):
    target = sinusoid_grating(grid32, period=8, axis="x")
    x = np.arange(32)
    np.testing.assert_allclose(target.amplitude[5] ** 2, 0.5 + 0.5 * np.cos(TWO_PI * x / 8), atol=1e-12)
    vertical = sinusoid_grating(grid32, period=8, axis="y")
    np.testing.assert_allclose(vertical.amplitude[:, 3], target.amplitude[3], atol=1e-12)


def test_procedural_targets_are_valid(grid32):
    for target in (resolution_chart(grid32), dot_grid(grid32, spacing=8)):
        assert target.amplitude.max() == pytest.approx(1.0)
        assert target.amplitude.min() >= 0.0
    chart = resolution_chart(GridSpec(nx=256, ny=256, pitch=6.4e-6))
    assert np.isclose(chart.amplitude, 0.5).any()
    assert (chart.amplitude == 0.0).mean() > 0.3
