import click

from ..services.experiments import arun_adversarial
from .common import SWEEP_OPTIONS, apply_options, build_config, emit


@click.command("adversarial")
@apply_options(SWEEP_OPTIONS)
@click.option("--universe-bits", type=int, default=16, show_default=True, help="Universe searched for colliders.")
@click.option("--trials", type=int, default=200, show_default=True, help="Independent hash/noise draws.")
@click.option("--rows", "adversarial_rows", type=int, default=5, show_default=True, help="Sketch depth (odd).")
@click.option("--cols", "adversarial_cols", type=int, default=32, show_default=True, help="Sketch width.")
def adversarial(output, db_path, **params) -> None:
    """Worst-case database check: median |f_hat - f_tilde| against sigma."""
    if not params.get("rhos"):
        params["rhos"] = ("1.0",)
    config = build_config(**params)
    emit("adversarial", config, arun_adversarial, output, db_path)


def get_adversarial_command() -> click.Command:
    return adversarial
