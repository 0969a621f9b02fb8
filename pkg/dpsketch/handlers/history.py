import logging

import click

from ..config import get_settings
from ..db.database import get_detailed_stats, get_run_results, init_db

logger = logging.getLogger(__name__)


@click.command("history")
@click.option("--db", "db_path", default=None, help="sqlite results ledger (default: DPSKETCH_DB_PATH).")
@click.option("--limit", type=int, default=5, show_default=True, help="Recent runs to show.")
@click.option("--run", "run_id", type=int, default=None, help="Print the stored result rows of one run.")
def history(db_path, limit, run_id) -> None:
    """Ledger statistikasi: tajribalar va oxirgi ishga tushirishlar."""
    db_path = db_path or get_settings().db_path
    if not db_path:
        raise click.ClickException("no ledger configured; pass --db or set DPSKETCH_DB_PATH")

    init_db(db_path)
    if run_id is not None:
        _show_run(run_id)
        return

    stats = get_detailed_stats(limit=limit)

    text_lines = [
        "Results ledger",
        f"Runs (total): {stats['runs_count']}",
        f"Successful: {stats['success_count']} ({stats['success_rate']}%)",
        f"Result rows: {stats['results_count']}",
    ]

    # Tajribalar bo'yicha
    if stats["experiment_stats"]:
        text_lines.append("")
        text_lines.append("Runs per experiment:")
        for experiment, count in stats["experiment_stats"]:
            text_lines.append(f"  {experiment}: {count}")

    # Oxirgi ishga tushirishlar
    if stats["recent_runs"]:
        text_lines.append("")
        text_lines.append("Recent runs:")
        for run_id, experiment, status, row_count, started_at in stats["recent_runs"]:
            text_lines.append(f"  #{run_id} {experiment} {status} rows={row_count} at {started_at}")

    click.echo("\n".join(text_lines))
    logger.debug(f"History shown for {db_path}")


def _show_run(run_id: int) -> None:
    rows = get_run_results(run_id)
    if not rows:
        raise click.ClickException(f"run #{run_id} has no stored results")

    text_lines = [f"Run #{run_id}: {len(rows)} result rows", "variant,private,rho,space_kb,metric,value"]
    text_lines.extend(",".join(row) for row in rows)
    click.echo("\n".join(text_lines))


def get_history_command() -> click.Command:
    return history
