import logging

import click

from ..services.experiments import arun_frequency
from .common import SPACE_OPTIONS, SWEEP_OPTIONS, WORKLOAD_OPTIONS, apply_options, build_config, emit

logger = logging.getLogger(__name__)


@click.command("frequency")
@apply_options(WORKLOAD_OPTIONS + SWEEP_OPTIONS + SPACE_OPTIONS)
def frequency(output, db_path, **params) -> None:
    """ARE of (private) Count-Min / CountSketch over the space x rho grid."""
    config = build_config(**params)
    emit("frequency", config, arun_frequency, output, db_path)


def get_frequency_command() -> click.Command:
    return frequency
