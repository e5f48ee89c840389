import logging
import os
from pathlib import Path
from typing import Dict, Optional

BASE_DIR = Path(__file__).resolve().parent.parent
SETTINGS_FILE = BASE_DIR / "settings.txt"

logger = logging.getLogger(__name__)


def settings_path() -> Path:
    """Returns the settings file in effect (HOLOSIM_SETTINGS overrides the default)."""
    override = os.getenv("HOLOSIM_SETTINGS")
    return Path(override) if override else SETTINGS_FILE


def load_config(path: Optional[Path] = None) -> Dict[str, str]:
    """Loads process settings from a key=value file.

    Lines that are empty, start with '#', or do not contain '=' are ignored.
    A missing file yields an empty mapping.

    Args:
        path: The settings file to read. Defaults to `settings_path()`.

    Returns:
        A dictionary containing the configuration keys and values.
    """
    config: Dict[str, str] = {}
    path = path or settings_path()
    if not path.exists():
        return config
    with path.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#") or "=" not in line:
                continue
            key, value = line.split("=", 1)
            config[key.strip()] = value.strip()
    return config


def get_setting(key: str, default: str, config: Optional[Dict[str, str]] = None) -> str:
    """Looks a setting up in the environment first, then in the settings file."""
    if key in os.environ:
        return os.environ[key]
    config = load_config() if config is None else config
    return config.get(key, default)


def _as_int(value: str, default: int) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        logger.warning(f"Ignoring non-integer setting value {value!r}")
        return default


config = load_config()

HOLOSIM_ENV = get_setting("HOLOSIM_ENV", "dev", config)
LOG_LEVEL = get_setting("LOG_LEVEL", "INFO", config).upper()
DEFAULT_WORKERS = max(1, _as_int(get_setting("DEFAULT_WORKERS", "1", config), 1))
OUTPUT_DIR = Path(get_setting("OUTPUT_DIR", "results", config))
