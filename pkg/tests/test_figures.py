"""Desk-scale reproductions of the headline results. Run with `pytest -m slow`."""
import numpy as np
import pytest
from PIL import Image

from holosim.calibration import calibrate_hardware
from holosim.experiments import run_experiment
from holosim.field import TWO_PI, PhasePattern
from holosim.hardware import capture
from holosim.metrics import fringe_spectrum_peak
from holosim.models import GridSpec, PropagationSpec
from holosim.presets import build_config, deep_merge, preset_payload
from holosim.propagation import axial_pixel
from holosim.results import read_results_csv

from conftest import GREEN, PERFECT_SLM, PITCH, make_hardware

pytestmark = pytest.mark.slow

OFFSETS = [0.0, 0.25, 0.5, 1.0, 2.0]


def _preset(name, **overrides):
    return build_config(deep_merge(preset_payload(name), overrides))


def _psnr_by(result, key):
    return {(row["method"], row[key]): row["psnr"] for row in result.rows}


def test_dpac_degrades_steadily_with_efficiency(tmp_path):
    values = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    cfg = _preset("fig2", methods=["dpac2"], sweep_values=values)
    psnr = _psnr_by(run_experiment(cfg, out_dir=tmp_path, workers=2), "one_minus_eta")
    curve = [psnr[("dpac2", v)] for v in values]
    assert all(a > b for a, b in zip(curve, curve[1:]))


def test_dual_citl_holds_its_quality_as_efficiency_drops(tmp_path):
    cfg = _preset("fig2", methods=["dpac2", "sgd2", "citl2"], sweep_values=[0.0, 0.2, 0.5])
    psnr = _psnr_by(run_experiment(cfg, out_dir=tmp_path / "dual", workers=2), "one_minus_eta")
    single = _preset("fig2", methods=["citl1"], sweep_values=[0.2])
    psnr.update(_psnr_by(run_experiment(single, out_dir=tmp_path / "single", workers=1), "one_minus_eta"))

    assert psnr[("citl2", 0.0)] == psnr[("sgd2", 0.0)]
    assert psnr[("citl2", 0.0)] - psnr[("citl2", 0.5)] < 3.0
    assert psnr[("citl2", 0.2)] > psnr[("citl1", 0.2)] > psnr[("sgd2", 0.2)] > psnr[("dpac2", 0.2)]
    assert psnr[("citl2", 0.5)] > psnr[("sgd2", 0.5)]
    assert psnr[("citl2", 0.5)] > psnr[("dpac2", 0.5)]


def test_fringes_fade_as_the_loop_converges(tmp_path):
    cfg = _preset("fig3")
    result = run_experiment(cfg, out_dir=tmp_path, workers=1)
    psnr = {row["iteration"]: row["psnr"] for row in result.rows}

    assert psnr[500] > psnr[100] > psnr[30]
    assert len(read_results_csv(tmp_path / "trace_citl2_520nm.csv")) == 500
    with Image.open(tmp_path / "capture_citl2_520nm_iter0000.png") as img:
        first = np.asarray(img, dtype=np.float64)
    peak, ratio = fringe_spectrum_peak(first)
    assert peak == 4
    assert ratio > 2


def test_tilt_fringes_are_visible_before_optimization():
    grid = GridSpec(nx=256, ny=256, pitch=PITCH)
    prop = PropagationSpec(wavelength=GREEN, distance=0.1, grid=grid)
    tilted = PERFECT_SLM.model_copy(update={"tilt": (TWO_PI / 64, 0.0)})
    hw = make_hardware(prop, PERFECT_SLM, tilted)

    flat = PhasePattern.zeros(grid)
    peak, _ = fringe_spectrum_peak(capture(flat, flat, hw))
    assert peak == 4


def test_dual_citl_has_the_best_grating_contrast_in_every_channel(tmp_path):
    result = run_experiment(_preset("table1"), out_dir=tmp_path, workers=3)
    michelson = {(row["method"], row["wavelength"]): row["michelson"] for row in result.rows}
    for wavelength in (638e-9, 520e-9, 450e-9):
        assert michelson[("citl2", wavelength)] > michelson[("citl1", wavelength)] > michelson[("sgd1", wavelength)]


@pytest.mark.parametrize("dx,dy", [(0.75, 0.25), (1.5, 0.0)])
def test_calibration_at_desk_scale(dx, dy):
    grid = GridSpec(nx=256, ny=256, pitch=PITCH)
    prop = PropagationSpec(wavelength=GREEN, distance=0.1, grid=grid)
    shifted = PERFECT_SLM.model_copy(update={"lateral_shift": (dx, dy)})
    est, _, _ = calibrate_hardware(make_hardware(prop, PERFECT_SLM, shifted))
    assert est.dx == pytest.approx(dx, abs=0.1)
    assert est.dy == pytest.approx(dy, abs=0.1)


def test_calibration_helps_model_based_dpac(tmp_path):
    payload = {"methods": ["dpac2"], "sweep_values": [1.0]}
    plain = run_experiment(_preset("fig5", **payload), out_dir=tmp_path / "plain", workers=1).rows[0]
    fixed = run_experiment(_preset("fig5", calibrate=True, **payload), out_dir=tmp_path / "calib", workers=1).rows[0]
    assert fixed["psnr"] > plain["psnr"]


def test_dual_citl_tolerates_lateral_misalignment(tmp_path):
    cfg = _preset("fig5", sweep_values=OFFSETS)
    psnr = _psnr_by(run_experiment(cfg, out_dir=tmp_path, workers=3), "offset")

    for offset in OFFSETS[1:]:
        assert psnr[("citl2", offset)] > psnr[("dpac2", offset)]
        assert psnr[("citl2", offset)] > psnr[("sgd2", offset)]
    drop = {m: psnr[(m, 0.0)] - psnr[(m, 1.0)] for m in ("dpac2", "sgd2", "citl2")}
    assert drop["citl2"] < 5.0
    assert drop["citl2"] < drop["sgd2"] < drop["dpac2"]


def test_dual_citl_tolerates_axial_misalignment(tmp_path):
    unit = axial_pixel(PropagationSpec(wavelength=GREEN, distance=0.1, grid=GridSpec(nx=256, ny=256, pitch=PITCH)))
    offsets = [f * unit for f in (0.25, 0.5, 1.0, 2.0, 4.0)]
    cfg = _preset("fig5", sweep_axis="axial", sweep_values=offsets)
    rows = run_experiment(cfg, out_dir=tmp_path, workers=3).rows

    assert not [row for row in rows if row["status"] != "ok"]
    for i in range(len(offsets)):
        at = {row["method"]: row["psnr"] for row in rows if row["offset"] == pytest.approx(offsets[i])}
        assert at["citl2"] > at["dpac2"]
        assert at["citl2"] > at["sgd2"]
