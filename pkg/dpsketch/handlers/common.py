import asyncio
import dataclasses
import logging
import sys
from typing import Any, Awaitable, Callable, Dict, List, Optional, Sequence, Tuple

import click

from ..config import get_settings
from ..db.database import init_db, log_results, log_run_finished, log_run_started
from ..services.cache import configure_cache
from ..services.experiments import (
    DEFAULT_M,
    DEFAULT_RHOS,
    DEFAULT_SPACE_KB,
    ExperimentConfig,
    write_csv,
)
from ..services.workload import Source
from ..sketches.linear_sketch import Variant

logger = logging.getLogger(__name__)

Rows = List[Dict[str, str]]


def parse_rho(raw: str) -> Optional[float]:
    """`none` -> None (privatsiz), aks holda musbat son."""
    token = raw.strip().lower()
    if token in ("none", "inf", "nonprivate"):
        return None
    try:
        value = float(token)
    except ValueError as exc:
        raise click.BadParameter(f"expected a positive number or 'none', got {raw!r}") from exc
    if not value > 0:
        raise click.BadParameter(f"rho must be positive, got {raw!r}")
    return value


def _rhos(raw: Sequence[str]) -> Tuple[Optional[float], ...]:
    if not raw:
        return DEFAULT_RHOS
    parsed = [parse_rho(r) for r in raw]
    # non-private baseline is always part of the sweep
    ordered = [None] + sorted({r for r in parsed if r is not None})
    return tuple(ordered)


def _variants(raw: Sequence[str]) -> Tuple[Variant, ...]:
    if not raw:
        return (Variant.COUNT_MIN, Variant.COUNT_SKETCH)
    return tuple(sorted({Variant.parse(v) for v in raw}, key=lambda v: v.value))


WORKLOAD_OPTIONS = [
    click.option("--dataset", type=click.Choice(["zipf", "file"]), default="zipf", show_default=True,
                 help="Synthetic Zipf stream or a trace file."),
    click.option("--file", "file_path", default=None,
                 help="Trace path or http(s) URL with `<id>,<+1|-1>` lines."),
    click.option("--n", type=int, default=100_000, show_default=True, help="Zipf stream length."),
    click.option("--universe-bits", type=int, default=16, show_default=True, help="Universe is [0, 2^B)."),
    click.option("--zipf-s", type=float, default=1.1, show_default=True, help="Zipf exponent."),
    click.option("--p-del", type=float, default=0.0, show_default=True,
                 help="Fraction of delete operations, in [0, 0.5)."),
]

SWEEP_OPTIONS = [
    click.option("--gamma", type=float, default=0.01, show_default=True, help="Accuracy parameter."),
    click.option("--beta", type=float, default=0.01, show_default=True, help="Failure probability."),
    click.option("--rho", "rhos", multiple=True,
                 help="zCDP budget; repeatable, 'none' for the non-private baseline."),
    click.option("--delta", type=float, default=1e-6, show_default=True,
                 help="delta used when reporting (epsilon, delta)-DP."),
    click.option("--variant", "variants", multiple=True, type=click.Choice(["cm", "cs"]),
                 help="Sketch variant; repeatable (default: both)."),
    click.option("--repeats", type=int, default=5, show_default=True, help="Independent runs per cell."),
    click.option("--seed", type=int, default=None, help="Master seed (default: DPSKETCH_SEED)."),
    click.option("--workers", type=int, default=None, help="Concurrent repeats (default: DPSKETCH_WORKERS)."),
    click.option("--output", "output", type=click.Path(dir_okay=False, writable=True), default=None,
                 help="CSV destination (default: stdout)."),
    click.option("--db", "db_path", default=None, help="sqlite results ledger (default: DPSKETCH_DB_PATH)."),
]

SPACE_OPTIONS = [
    click.option("--space-kb", "space_kb", multiple=True, type=float,
                 help=f"Space budget per sketch in KB; repeatable (default: {', '.join(map(str, DEFAULT_SPACE_KB))})."),
    click.option("--k", type=int, default=10, show_default=True, help="Top-k size."),
]

QUANTILE_OPTIONS = [
    click.option("--m", "m_values", multiple=True, type=int,
                 help="Number of evenly spaced quantiles; repeatable (default: 1..10)."),
    click.option("--exact-mode", is_flag=True, default=False, help="Use exact dyadic counters."),
    click.option("--level-beta", type=float, default=None, help="Per-level failure probability."),
    click.option("--amplify-beta", type=float, default=None,
                 help="Multiply per-level rows by ceil(ln(1/beta))."),
]


def apply_options(options: Sequence[Callable]) -> Callable:
    def decorator(fn: Callable) -> Callable:
        for option in reversed(options):
            fn = option(fn)
        return fn
    return decorator


def build_config(**params: Any) -> ExperimentConfig:
    """CLI bayroqlari + Settings dan ExperimentConfig yig'ish."""
    try:
        settings = get_settings()
    except RuntimeError as exc:
        raise click.ClickException(str(exc)) from exc
    max_bytes = settings.cache_max_mb * 1024 * 1024 if settings.cache_max_mb else None
    configure_cache(settings.cache_size, settings.cache_ttl, max_bytes=max_bytes)

    seed = params.pop("seed", None)
    workers = params.pop("workers", None)
    config = ExperimentConfig(
        dataset=Source(params.pop("dataset", "zipf")),
        file=params.pop("file_path", None),
        rhos=_rhos(params.pop("rhos", ())),
        variants=_variants(params.pop("variants", ())),
        space_kb=tuple(params.pop("space_kb", ())) or DEFAULT_SPACE_KB,
        m_values=tuple(params.pop("m_values", ())) or DEFAULT_M,
        seed=settings.seed if seed is None else seed,
        workers=settings.workers if workers is None else workers,
        http_timeout=settings.http_timeout,
    )
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    overrides = {k: v for k, v in params.items() if k in known and v is not None}
    return dataclasses.replace(config, **overrides)


def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    data = {
        f.name: getattr(config, f.name)
        for f in dataclasses.fields(config)
        if not f.name.startswith("_")
    }
    data["dataset"] = config.dataset.value
    data["variants"] = [v.value for v in config.variants]
    return data


def _resolve_db(db_path: Optional[str]) -> Optional[str]:
    return db_path or get_settings().db_path


def emit(
    experiment: str,
    config: ExperimentConfig,
    runner: Callable[[ExperimentConfig], Awaitable[Rows]],
    output: Optional[str],
    db_path: Optional[str],
) -> Rows:
    """Tajribani bajarish, CSV yozish va ledger'ga qayd etish."""
    db_path = _resolve_db(db_path)
    run_id = None
    if db_path:
        init_db(db_path)
        run_id = log_run_started(experiment, config_to_dict(config), config.seed)

    logger.info(f"Running {experiment} (repeats={config.repeats}, workers={config.workers}, seed={config.seed})")
    try:
        rows = asyncio.run(runner(config))
    except (ValueError, RuntimeError) as exc:
        if run_id is not None:
            log_run_finished(run_id, "failed", error_message=str(exc))
        raise click.ClickException(str(exc)) from exc

    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            write_csv(rows, fh)
        logger.info(f"Wrote {len(rows)} rows to {output}")
    else:
        write_csv(rows, sys.stdout)

    if run_id is not None:
        log_results(run_id, rows)
        log_run_finished(run_id, "success", row_count=len(rows))
    return rows
