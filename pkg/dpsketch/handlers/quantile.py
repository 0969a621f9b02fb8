import logging

import click

from ..services.experiments import arun_quantile
from .common import QUANTILE_OPTIONS, SWEEP_OPTIONS, WORKLOAD_OPTIONS, apply_options, build_config, emit

logger = logging.getLogger(__name__)


@click.command("quantile")
@apply_options(WORKLOAD_OPTIONS + SWEEP_OPTIONS + QUANTILE_OPTIONS)
def quantile(output, db_path, **params) -> None:
    """Average rank error of the dyadic sketch at m evenly spaced quantiles."""
    if not params.get("variants"):
        # private dyadic sketches are CountSketch only
        params["variants"] = ("cs",)
    config = build_config(**params)
    if config.exact_mode:
        logger.info("Exact dyadic counters: noise and hashing disabled")
    emit("quantile", config, arun_quantile, output, db_path)


def get_quantile_command() -> click.Command:
    return quantile
