import numpy as np
import pytest

from holosim.field import TargetAmplitude
from holosim.hardware import HardwareProfile
from holosim.models import CameraProfile, GridSpec, HardwareConfig, PropagationSpec, SlmProfile

PITCH = 6.4e-6
GREEN = 520e-9

PERFECT_SLM = SlmProfile(eta=1.0, phase_levels="continuous")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid32():
    return GridSpec(nx=32, ny=32, pitch=PITCH)


@pytest.fixture
def prop32(grid32):
    return PropagationSpec(wavelength=GREEN, distance=0.02, grid=grid32, pad_factor=2)


@pytest.fixture
def random_target(grid32, rng):
    return TargetAmplitude.from_amplitude(grid32, rng.uniform(0.05, 1.0, grid32.shape))


def make_hardware(prop: PropagationSpec, slm1: SlmProfile = PERFECT_SLM, slm2: SlmProfile = PERFECT_SLM, **camera):
    cfg = HardwareConfig(slm1=slm1, slm2=slm2, camera=CameraProfile(**camera), pad_factor=prop.pad_factor)
    return HardwareProfile.from_config(cfg, prop)


@pytest.fixture
def perfect_hw(prop32):
    return make_hardware(prop32)


def small_experiment(kind: str, **overrides) -> dict:
    """A fast experiment payload on a 32x32 grid."""
    payload = {
        "kind": kind,
        "grid": {"nx": 32, "ny": 32, "pitch": PITCH},
        "wavelengths": [GREEN],
        "distance": 0.02,
        "methods": ["dpac2", "sgd2", "citl2"],
        "hardware": {
            "slm1": {"phase_levels": "continuous"},
            "slm2": {"phase_levels": "continuous"},
        },
        "solver": {"iterations": 15},
    }
    payload.update(overrides)
    return payload
