import click

from ..services.experiments import arun_calibrate
from .common import SWEEP_OPTIONS, apply_options, build_config, emit


@click.command("calibrate")
@apply_options(SWEEP_OPTIONS)
def calibrate(output, db_path, **params) -> None:
    """d, w, sigma, E, Delta_2 va epsilon(delta) jadvali."""
    config = build_config(**params)
    emit("calibrate", config, arun_calibrate, output, db_path)


def get_calibrate_command() -> click.Command:
    return calibrate
