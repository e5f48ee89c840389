import logging
from pathlib import Path
from typing import Optional

import click

from logging_setup import configure_logging

from . import config
from .errors import HoloSimError
from .experiments import RUNNERS
from .presets import PRESETS, load_experiment_config

logger = logging.getLogger(__name__)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level.")
def cli(verbose: bool) -> None:
    """Dual-SLM holography simulator."""
    level = logging.DEBUG if verbose else getattr(logging, config.LOG_LEVEL, logging.INFO)
    configure_logging(service_name="holosim", env=config.HOLOSIM_ENV, level=level)


@cli.command()
@click.argument("config_path", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), help="Output directory.")
@click.option("--workers", type=click.IntRange(min=1), help="Parallel sweep workers.")
@click.option("--seed", type=int, help="Seed for solver initialization and sensor noise.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Start from a built-in experiment.")
@click.option("--srgb/--no-srgb", default=None, help="Decode the target image from sRGB gamma.")
def run(
    config_path: Optional[Path],
    out_dir: Optional[Path],
    workers: Optional[int],
    seed: Optional[int],
    preset: Optional[str],
    srgb: Optional[bool],
) -> None:
    """Runs the experiment in CONFIG_PATH (JSON), optionally layered on a preset."""
    overrides = {}
    if seed is not None:
        overrides = {"solver": {"rng_seed": seed}, "hardware": {"rng_seed": seed}}
    if srgb is not None:
        overrides["srgb"] = srgb
    try:
        cfg = load_experiment_config(config_path, preset=preset, overrides=overrides)
        result = RUNNERS[cfg.kind](cfg, out_dir=out_dir, workers=workers)
    except HoloSimError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"{cfg.kind}: {len(result.rows)} row(s), {len(result.failed)} failed -> {result.output_dir}")


@cli.command("presets")
def list_presets() -> None:
    """Lists the built-in experiment presets."""
    for name in sorted(PRESETS):
        click.echo(f"{name}\t{PRESETS[name]['kind']}")


def main() -> None:
    cli(prog_name="holosim")
