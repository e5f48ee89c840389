"""Built-in experiment presets at desk scale (256x256, 6.4 um pitch, z = 10 cm)."""
import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import ValidationError

from .errors import ConfigError
from .field import TWO_PI
from .models import ExperimentConfig

logger = logging.getLogger(__name__)


_DESK_GRID = {"nx": 256, "ny": 256, "pitch": 6.4e-6}

PRESETS: Dict[str, Dict[str, Any]] = {
    # PSNR against diffraction efficiency.
    "fig2": {
        "kind": "efficiency_sweep",
        "grid": _DESK_GRID,
        "wavelengths": [520e-9],
        "distance": 0.1,
        "methods": ["dpac2", "sgd2", "citl1", "citl2"],
        "sweep_axis": "efficiency",
        "sweep_values": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        # Continuous levels so perfect hardware matches the model exactly at 1 - eta = 0.
        "hardware": {"slm1": {"phase_levels": "continuous"}, "slm2": {"phase_levels": "continuous"}},
        "solver": {"iterations": 500},
    },
    # PSNR against lateral displacement of SLM 2 at eta = 0.8.
    "fig5": {
        "kind": "misalignment_sweep",
        "grid": _DESK_GRID,
        "wavelengths": [520e-9],
        "distance": 0.1,
        "methods": ["dpac2", "sgd2", "citl2"],
        "sweep_axis": "lateral",
        "sweep_values": [0.0, 0.25, 0.5, 1.0, 2.0],
        "hardware": {"slm1": {"eta": 0.8}, "slm2": {"eta": 0.8}},
        "solver": {"iterations": 500},
    },
    # Fringes of a tilted SLM 2 washing out as the loop converges.
    "fig3": {
        "kind": "fringe_convergence",
        "grid": _DESK_GRID,
        "wavelengths": [520e-9],
        "distance": 0.1,
        "methods": ["citl2"],
        "checkpoints": [0, 30, 100, 500],
        "hardware": {"slm1": {"eta": 0.8}, "slm2": {"eta": 0.8, "tilt": [TWO_PI / 64.0, 0.0]}},
        # Flat phases for the first capture, then independent random phases per SLM.
        "solver": {"iterations": 500, "init_mode": "zero", "dither": TWO_PI / 2.0},
    },
    # Grating contrast per color channel, blue with the lowest efficiency.
    "table1": {
        "kind": "contrast_eval",
        "grid": _DESK_GRID,
        "wavelengths": [638e-9, 520e-9, 450e-9],
        "channel_eta": [0.85, 0.8, 0.7],
        "distance": 0.1,
        "methods": ["sgd1", "citl1", "citl2"],
        "target_pattern": "sinusoid",
        "grating_period": 16.0,
        "solver": {"iterations": 500},
    },
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively layers `override` on top of `base` (nested dicts merge, other values replace)."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        location = ".".join(str(p) for p in err["loc"]) or "config"
        parts.append(f"{location}: {err['msg']}")
    return "; ".join(parts)


def build_config(payload: Dict[str, Any]) -> ExperimentConfig:
    """Validates a raw config mapping.

    Raises:
        ConfigError: With every offending field named.
    """
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {_describe(exc)}") from exc


def preset_payload(name: str) -> Dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    preset: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """Reads an experiment config: a preset, a JSON file layered on it, then overrides.

    Raises:
        ConfigError: If the file is unreadable, not JSON, or fails validation.
    """
    payload: Dict[str, Any] = preset_payload(preset) if preset else {}
    if path is not None:
        try:
            loaded = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must contain a JSON object")
        payload = deep_merge(payload, loaded)
    if not payload:
        raise ConfigError("either a config file or a preset is required")
    if overrides:
        payload = deep_merge(payload, overrides)
    cfg = build_config(payload)
    logger.debug(f"Loaded {cfg.kind} config (preset={preset}, file={path})")
    return cfg
