import click

from ..services.experiments import arun_topk
from .common import SPACE_OPTIONS, SWEEP_OPTIONS, WORKLOAD_OPTIONS, apply_options, build_config, emit


@click.command("topk")
@apply_options(WORKLOAD_OPTIONS + SWEEP_OPTIONS + SPACE_OPTIONS)
def topk(output, db_path, **params) -> None:
    """Top-k F1 score of (private) sketches."""
    config = build_config(**params)
    emit("topk", config, arun_topk, output, db_path)


def get_topk_command() -> click.Command:
    return topk
