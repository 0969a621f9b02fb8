import logging

import click

from .config import get_settings
from .handlers.adversarial import get_adversarial_command
from .handlers.calibrate import get_calibrate_command
from .handlers.frequency import get_frequency_command
from .handlers.history import get_history_command
from .handlers.quantile import get_quantile_command
from .handlers.topk import get_topk_command


@click.group()
@click.option("--verbose", "-v", is_flag=True, default=False, help="Debug logging.")
def cli(verbose: bool) -> None:
    """Differentially private linear sketches: experiment harness."""
    try:
        settings = get_settings()
    except RuntimeError as exc:
        raise click.ClickException(str(exc)) from exc
    level = "DEBUG" if verbose else settings.log_level
    # CSV stdout ga, loglar stderr ga
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="[%(asctime)s] [%(levelname)s] %(name)s: %(message)s",
        force=True,
    )


cli.add_command(get_frequency_command())
cli.add_command(get_topk_command())
cli.add_command(get_quantile_command())
cli.add_command(get_calibrate_command())
cli.add_command(get_adversarial_command())
cli.add_command(get_history_command())


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
