"""Frequency, top-k, quantile and calibration sweeps emitting long-format CSV rows."""

import asyncio
import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Hashable, Iterable, List, Optional, TextIO, Tuple

import numpy as np

from ..sketches.dp_linear_sketch import new_private
from ..sketches.dp_mechanism import (
    PrivacyBudget,
    PrivacyParamsError,
    calibrate_sigma,
    l2_sensitivity,
    noise_bound_E,
    zcdp_to_dp,
)
from ..sketches.dyadic_quantile import DyadicParams, DyadicParamsError, new_dyadic, quantile_error_bound
from ..sketches.linear_sketch import SketchParams, SketchParamsError, Variant, merge, new_nonprivate
from .cache import cache_workload, get_cached_workload
from .evaluation import ExactSummary, adversarial_lowerbound_check, are, avg_rank_error, exact_counts, f1_topk
from .runner import RepeatTask, run_tasks
from .workload import (
    Source,
    Stream,
    StreamSpec,
    StreamSpecError,
    build_stream,
    close_http_client,
    fetch_stream,
    get_http_client,
    is_remote,
    load_stream,
)

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "experiment", "variant", "private", "rho", "beta", "gamma", "space_kb",
    "universe_bits", "n", "repeats", "seed", "metric", "value",
]
DEFAULT_SPACE_KB: Tuple[float, ...] = (9.2, 18.4, 36.8, 73.7, 147.3)
DEFAULT_RHOS: Tuple[Optional[float], ...] = (None, 0.1, 1.0, 10.0)
DEFAULT_M: Tuple[int, ...] = tuple(range(1, 11))


class ConfigError(ValueError):
    """Tajriba konfiguratsiyasi noto'g'ri."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: Source = Source.ZIPF
    file: Optional[str] = None
    n: int = 100_000
    universe_bits: int = 16
    zipf_s: float = 1.1
    p_del: float = 0.0
    gamma: float = 0.01
    beta: float = 0.01
    rhos: Tuple[Optional[float], ...] = DEFAULT_RHOS
    delta: float = 1e-6
    space_kb: Tuple[float, ...] = DEFAULT_SPACE_KB
    variants: Tuple[Variant, ...] = (Variant.COUNT_MIN, Variant.COUNT_SKETCH)
    k: int = 10
    m_values: Tuple[int, ...] = DEFAULT_M
    repeats: int = 5
    seed: int = 0
    exact_mode: bool = False
    workers: int = 4
    level_beta: Optional[float] = None
    amplify_beta: Optional[float] = None
    trials: int = 200
    adversarial_rows: int = 5
    adversarial_cols: int = 32
    http_timeout: float = 30.0
    _base_stream: Optional[Stream] = field(default=None, compare=False, repr=False)

    def validate(self) -> "ExperimentConfig":
        """Konfiguratsiyani tekshirish; xato bo'lsa ConfigError."""
        if self.repeats < 1:
            raise ConfigError(f"--repeats must be >= 1, got {self.repeats}")
        if self.workers < 1:
            raise ConfigError(f"--workers must be >= 1, got {self.workers}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"--gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 < self.beta < 1.0:
            raise ConfigError(f"--beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"--delta must lie in (0, 1), got {self.delta}")
        if not self.rhos:
            raise ConfigError("at least one privacy setting is required")
        for rho in self.rhos:
            if rho is not None and not rho > 0:
                raise ConfigError(f"--rho must be positive, got {rho}")
        if not self.space_kb or any(s <= 0 for s in self.space_kb):
            raise ConfigError("--space-kb values must be positive")
        if self.k < 1:
            raise ConfigError(f"--k must be >= 1, got {self.k}")
        if not self.m_values or any(m < 1 for m in self.m_values):
            raise ConfigError("--m values must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.dataset is Source.FILE and not self.file:
            raise ConfigError("--dataset file needs --file PATH")
        try:
            self.stream_spec(0)
        except StreamSpecError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def stream_spec(self, stream_seed: int) -> StreamSpec:
        return StreamSpec(
            source=self.dataset,
            n=self.n,
            universe_bits=self.universe_bits,
            zipf_s=self.zipf_s,
            p_del=self.p_del,
            seed=stream_seed,
            path=self.file,
        )


@dataclass(frozen=True)
class RepeatSeeds:
    stream: int
    hashing: int
    noise: int


def repeat_seeds(seed: int, repeat: int) -> RepeatSeeds:
    """Har bir takrorlash uchun mustaqil seedlar."""
    state = np.random.SeedSequence([seed, repeat]).generate_state(3, dtype=np.uint64)
    return RepeatSeeds(*(int(s) for s in state))


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".10g")


def _row(config: ExperimentConfig, experiment: str, variant: str, rho: Optional[float],
         gamma: float, space_kb: float, metric: str, value) -> Dict[str, str]:
    return {
        "experiment": experiment,
        "variant": variant,
        "private": _fmt(rho is not None),
        "rho": _fmt(rho),
        "beta": _fmt(config.beta),
        "gamma": _fmt(gamma),
        "space_kb": _fmt(round(space_kb, 4)),
        "universe_bits": _fmt(config.universe_bits),
        "n": _fmt(config.n),
        "repeats": _fmt(config.repeats),
        "seed": _fmt(config.seed),
        "metric": metric,
        "value": _fmt(value),
    }


def _sort_key(row: Dict[str, str]) -> tuple:
    rho = -1.0 if row["rho"] == "none" else float(row["rho"])
    return (
        row["experiment"], row["variant"], row["private"], rho,
        float(row["space_kb"]), row["metric"],
    )


def sorted_rows(rows: Iterable[Dict[str, str]]) -> List[Dict[str, str]]:
    return sorted(rows, key=_sort_key)


def write_csv(rows: Iterable[Dict[str, str]], fh: TextIO) -> None:
    """Natijalarni CSV ko'rinishida yozish."""
    writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


async def _load_base_stream(config: ExperimentConfig) -> Optional[Stream]:
    if config.dataset is not Source.FILE:
        return None
    if config._base_stream is not None:
        return config._base_stream
    if is_remote(config.file):
        try:
            client = await get_http_client(timeout=config.http_timeout)
            return await fetch_stream(
                config.file,
                universe_bits=config.universe_bits,
                client=client,
                timeout=config.http_timeout,
            )
        finally:
            await close_http_client()
    return await asyncio.to_thread(load_stream, config.file, config.universe_bits)


def _fingerprint(stream: Optional[Stream]) -> Optional[str]:
    if stream is None:
        return None
    digest = hashlib.sha1(stream.items.tobytes())
    digest.update(stream.values.tobytes())
    return digest.hexdigest()


def _workload(config: ExperimentConfig, repeat: int, base: Optional[Stream]) -> Tuple[Stream, ExactSummary]:
    """Takrorlash uchun stream va oracle (keshdan yoki yangidan)."""
    seeds = repeat_seeds(config.seed, repeat)
    spec = config.stream_spec(seeds.stream)
    key: Hashable = ("workload", spec, repeat, _fingerprint(base))
    cached = get_cached_workload(key)
    if cached is not None:
        return cached
    stream = build_stream(spec, base=base)
    summary = exact_counts(stream)
    if summary.sorted_items.size == 0:
        raise ConfigError("the workload has no item with positive net count")
    cache_workload(key, (stream, summary))
    return stream, summary


async def _collect(config: ExperimentConfig, tasks: List[RepeatTask]) -> Dict[Hashable, List[float]]:
    """Run every repeat task; group values by cell in repeat order."""
    results = await run_tasks(tasks, max_concurrent=config.workers)
    grouped: Dict[Hashable, Dict[int, float]] = {}
    for (_, repeat), cells in results.items():
        for cell, value in cells.items():
            grouped.setdefault(cell, {})[repeat] = value
    return {cell: [per_repeat[r] for r in sorted(per_repeat)] for cell, per_repeat in grouped.items()}


def _mean(values: List[float]) -> float:
    return math.fsum(values) / len(values)


def _sketch_cells(config: ExperimentConfig, metric: str, repeat: int, variant: Variant,
                  space_kb: float, base: Optional[Stream]) -> Dict[Hashable, float]:
    stream, summary = _workload(config, repeat, base)
    if metric == "f1" and summary.sorted_items.size < config.k:
        raise ConfigError(
            f"--k {config.k} exceeds the {summary.sorted_items.size} distinct items in the workload"
        )
    seeds = repeat_seeds(config.seed, repeat)
    params = SketchParams.from_space(space_kb, config.beta, variant)
    baseline = new_nonprivate(params, seeds.hashing).update_many(stream.items, stream.values)

    cells: Dict[Hashable, float] = {}
    for rho in config.rhos:
        if rho is None:
            sketch = baseline
        else:
            # noise-only sketch + baseline counts == private sketch fed the stream
            noise_only = new_private(params, PrivacyBudget(rho), seeds.hashing, seeds.noise)
            sketch = merge(noise_only, baseline)
        if metric == "are":
            value = are(sketch.query_many, summary)
        else:
            value = f1_topk(sketch.query_many, summary, config.k)
        cells[(variant.value, rho, space_kb, params.gamma)] = value
    return cells


async def _sketch_sweep(config: ExperimentConfig, experiment: str, metric: str) -> List[Dict[str, str]]:
    config.validate()
    base = await _load_base_stream(config)
    if base is not None:
        config = replace(config, n=len(base))
    tasks = []
    for repeat in range(config.repeats):
        def job(repeat=repeat):
            cells: Dict[Hashable, float] = {}
            for variant in config.variants:
                for space_kb in config.space_kb:
                    cells.update(_sketch_cells(config, metric, repeat, variant, space_kb, base))
            return cells
        tasks.append(RepeatTask(key=(experiment, repeat), fn=job))

    grouped = await _collect(config, tasks)
    metric_name = "are" if metric == "are" else f"f1_top{config.k}"
    rows = [
        _row(config, experiment, variant, rho, gamma, space_kb, metric_name, _mean(values))
        for (variant, rho, space_kb, gamma), values in grouped.items()
    ]
    return sorted_rows(rows)


async def arun_frequency(config: ExperimentConfig) -> List[Dict[str, str]]:
    return await _sketch_sweep(config, "frequency", "are")


async def arun_topk(config: ExperimentConfig) -> List[Dict[str, str]]:
    return await _sketch_sweep(config, "topk", "f1")


def _dyadic_params(config: ExperimentConfig, variant: Variant, rho: Optional[float]) -> DyadicParams:
    try:
        return DyadicParams.build(
            config.universe_bits,
            config.gamma,
            variant=variant,
            private=rho is not None,
            rho=rho,
            level_beta=config.level_beta,
            amplify_beta=config.amplify_beta,
        )
    except DyadicParamsError as exc:
        raise ConfigError(str(exc)) from exc


def _quantile_cells(config: ExperimentConfig, repeat: int, base: Optional[Stream]) -> Dict[Hashable, float]:
    stream, summary = _workload(config, repeat, base)
    seeds = repeat_seeds(config.seed, repeat)
    cells: Dict[Hashable, float] = {}
    variants = config.variants[:1] if config.exact_mode else config.variants
    settings: List[Optional[float]] = [None] if config.exact_mode else list(config.rhos)
    for variant in variants:
        for rho in settings:
            params = _dyadic_params(config, variant, rho)
            sketch = new_dyadic(params, seeds.hashing, seeds.noise, exact=config.exact_mode)
            sketch.update_many(stream.items, stream.values)
            label = "exact" if config.exact_mode else variant.value
            for m in config.m_values:
                value = avg_rank_error(sketch.rank_many, summary, m)
                cells[(label, rho, params.space_bytes / 1024, f"avg_rank_error_m{m}")] = value
    return cells


async def arun_quantile(config: ExperimentConfig) -> List[Dict[str, str]]:
    config.validate()
    if not config.exact_mode:
        for variant in config.variants:
            if variant is Variant.COUNT_MIN and any(r is not None for r in config.rhos):
                raise ConfigError("private dyadic sketches need --variant cs")
    base = await _load_base_stream(config)
    if base is not None:
        config = replace(config, n=len(base))
    tasks = [
        RepeatTask(key=("quantile", r), fn=lambda r=r: _quantile_cells(config, r, base))
        for r in range(config.repeats)
    ]
    grouped = await _collect(config, tasks)
    rows = [
        _row(config, "quantile", label, rho, config.gamma, space_kb, metric, _mean(values))
        for (label, rho, space_kb, metric), values in grouped.items()
    ]
    if not config.exact_mode:
        for variant in config.variants:
            for rho in config.rhos:
                params = _dyadic_params(config, variant, rho)
                bound = quantile_error_bound(params, config.n)
                rows.append(_row(config, "quantile", variant.value, rho, config.gamma,
                                 params.space_bytes / 1024, "error_bound", bound))
    return sorted_rows(rows)


def calibration_rows(config: ExperimentConfig) -> List[Dict[str, str]]:
    """d, w, sigma, E, Delta_2 va epsilon(delta) jadvali."""
    config.validate()
    rows = []
    for variant in config.variants:
        try:
            params = SketchParams.from_accuracy(config.gamma, config.beta, variant)
        except SketchParamsError as exc:
            raise ConfigError(str(exc)) from exc
        space_kb = params.space_bytes / 1024
        for rho in config.rhos:
            if rho is None:
                continue
            budget = PrivacyBudget(rho)
            try:
                table = {
                    "d": params.rows,
                    "w": params.cols,
                    "sigma": calibrate_sigma(params.rows, budget),
                    "E": noise_bound_E(params.rows, params.cols, params.beta, budget),
                    "delta2": l2_sensitivity(params.rows),
                    "epsilon": zcdp_to_dp(budget, config.delta),
                }
            except PrivacyParamsError as exc:
                raise ConfigError(str(exc)) from exc
            rows.extend(
                _row(config, "calibrate", variant.value, rho, params.gamma, space_kb, metric, value)
                for metric, value in table.items()
            )
    return sorted_rows(rows)


async def arun_calibrate(config: ExperimentConfig) -> List[Dict[str, str]]:
    return calibration_rows(config)


def adversarial_rows(config: ExperimentConfig) -> List[Dict[str, str]]:
    """Quyi chegara tekshiruvi natijalari."""
    config.validate()
    try:
        params = SketchParams(
            gamma=1.0 / config.adversarial_cols if config.adversarial_cols > 1 else 0.5,
            beta=config.beta,
            variant=Variant.COUNT_SKETCH,
            rows=config.adversarial_rows,
            cols=config.adversarial_cols,
        )
    except SketchParamsError as exc:
        raise ConfigError(str(exc)) from exc
    rows = []
    for rho in config.rhos:
        budget = PrivacyBudget(rho) if rho is not None else None
        report = adversarial_lowerbound_check(
            params, budget, config.trials, universe_bits=config.universe_bits, seed=config.seed,
        )
        ratio = report.median_deviation / report.sigma if report.sigma > 0 else 0.0
        table = {
            "median_deviation": report.median_deviation,
            "sigma": report.sigma,
            "median_over_sigma": ratio,
            "successes": report.successes,
            "skipped": report.skipped,
        }
        rows.extend(
            _row(config, "adversarial", Variant.COUNT_SKETCH.value, rho, params.gamma,
                 params.space_bytes / 1024, metric, value)
            for metric, value in table.items()
        )
    return sorted_rows(rows)


def run_frequency(config: ExperimentConfig) -> List[Dict[str, str]]:
    return asyncio.run(arun_frequency(config))


def run_topk(config: ExperimentConfig) -> List[Dict[str, str]]:
    return asyncio.run(arun_topk(config))


def run_quantile(config: ExperimentConfig) -> List[Dict[str, str]]:
    return asyncio.run(arun_quantile(config))


def run_calibrate(config: ExperimentConfig) -> List[Dict[str, str]]:
    return calibration_rows(config)


async def arun_adversarial(config: ExperimentConfig) -> List[Dict[str, str]]:
    return await asyncio.to_thread(adversarial_rows, config)


def run_adversarial(config: ExperimentConfig) -> List[Dict[str, str]]:
    return adversarial_rows(config)


def with_stream(config: ExperimentConfig, stream: Stream) -> ExperimentConfig:
    """Tayyor streamni FILE manbasi sifatida biriktirish (testlar uchun)."""
    return replace(config, dataset=Source.FILE, file=config.file or "<memory>", _base_stream=stream)
