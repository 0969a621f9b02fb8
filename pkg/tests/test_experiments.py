import io
import math
from dataclasses import replace

import numpy as np
import pytest

from dpsketch.services.cache import clear_cache
from dpsketch.services.experiments import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    adversarial_rows,
    calibration_rows,
    repeat_seeds,
    run_frequency,
    run_quantile,
    run_topk,
    sorted_rows,
    with_stream,
    write_csv,
)
from dpsketch.services.runner import RepeatFailedError
from dpsketch.services.workload import Source, Stream
from dpsketch.sketches.linear_sketch import Variant

SMALL = dict(n=2000, universe_bits=10, repeats=2, space_kb=(9.2,), rhos=(None, 1.0), workers=2)


def _csv(rows):
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def _cells(rows, metric):
    return {
        (row["variant"], row["rho"], row["space_kb"]): float(row["value"])
        for row in rows
        if row["metric"] == metric
    }


@pytest.fixture(autouse=True)
def fresh_cache():
    clear_cache()
    yield
    clear_cache()


def test_repeat_seeds_are_deterministic_and_distinct():
    a = repeat_seeds(7, 0)
    assert a == repeat_seeds(7, 0)
    assert a != repeat_seeds(7, 1)
    assert a != repeat_seeds(8, 0)
    assert len({a.stream, a.hashing, a.noise}) == 3
    assert all(0 <= s < 2 ** 64 for s in (a.stream, a.hashing, a.noise))


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(repeats=0).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(rhos=(None, -1.0)).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(dataset=Source.FILE).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(p_del=0.7).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=-1).validate()
    assert ExperimentConfig().validate() == ExperimentConfig()


def test_frequency_rows_and_header():
    rows = run_frequency(ExperimentConfig(**SMALL))
    assert len(rows) == 4
    assert {row["metric"] for row in rows} == {"are"}
    assert {(row["variant"], row["rho"], row["private"]) for row in rows} == {
        ("cm", "none", "false"), ("cm", "1", "true"),
        ("cs", "none", "false"), ("cs", "1", "true"),
    }
    for row in rows:
        assert row["repeats"] == "2"
        assert row["n"] == "2000"
        assert row["universe_bits"] == "10"
        assert float(row["value"]) >= 0.0
    text = _csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert len(text.splitlines()) == 5


def test_frequency_is_byte_identical_across_runs():
    config = ExperimentConfig(**{**SMALL, "repeats": 1, "p_del": 0.1})
    first = _csv(run_frequency(config))
    clear_cache()
    second = _csv(run_frequency(config))
    third = _csv(run_frequency(replace(config, workers=1)))
    assert first == second == third


def test_different_seed_changes_results():
    a = run_frequency(ExperimentConfig(**SMALL, seed=1))
    b = run_frequency(ExperimentConfig(**SMALL, seed=2))
    assert [r["value"] for r in a] != [r["value"] for r in b]


def test_baseline_rows_without_rho():
    rows = run_topk(ExperimentConfig(**{**SMALL, "rhos": (None,), "k": 5}))
    assert {row["rho"] for row in rows} == {"none"}
    assert {row["metric"] for row in rows} == {"f1_top5"}


def test_topk_rejects_k_above_distinct_items():
    config = with_stream(ExperimentConfig(**SMALL), Stream.inserts([1, 2, 2, 3]))
    with pytest.raises(RepeatFailedError, match="exceeds"):
        run_topk(config)


def test_in_memory_stream_reports_its_length():
    items = np.repeat(np.arange(20), np.arange(20, 0, -1))
    stream = Stream.inserts(items)
    rows = run_topk(with_stream(ExperimentConfig(**SMALL), stream))
    assert {row["n"] for row in rows} == {str(len(stream))}
    # 20 ids with distinct counts in ~200 buckets per row
    assert all(float(row["value"]) == 1.0 for row in rows if row["variant"] == "cm" and row["rho"] == "none")


def test_in_memory_streams_do_not_share_cache_entries():
    config = ExperimentConfig(**{**SMALL, "rhos": (None,), "variants": (Variant.COUNT_MIN,)})
    spread = run_frequency(with_stream(config, Stream.inserts(np.arange(600) % 300)))
    narrow = run_frequency(with_stream(config, Stream.inserts(np.arange(600) % 7)))
    assert spread[0]["n"] == narrow[0]["n"] == "600"
    assert float(spread[0]["value"]) > 0.0
    assert float(narrow[0]["value"]) == 0.0


def test_sorted_rows_order():
    rows = run_frequency(ExperimentConfig(**{**SMALL, "space_kb": (18.4, 9.2)}))
    assert rows == sorted_rows(reversed(rows))
    keys = [(r["variant"], r["rho"], float(r["space_kb"])) for r in rows]
    assert keys[:4] == [("cm", "none", 9.2), ("cm", "none", 18.4), ("cm", "1", 9.2), ("cm", "1", 18.4)]


def test_quantile_exact_mode_has_zero_error():
    config = ExperimentConfig(
        n=3000, universe_bits=8, p_del=0.2, repeats=2, exact_mode=True,
        m_values=(1, 5, 10), variants=(Variant.COUNT_MIN,),
    )
    rows = run_quantile(config)
    assert {row["variant"] for row in rows} == {"exact"}
    assert {row["metric"] for row in rows} == {f"avg_rank_error_m{m}" for m in (1, 5, 10)}
    assert all(float(row["value"]) == 0.0 for row in rows)


def test_quantile_rows_and_bounds():
    config = ExperimentConfig(
        n=2000, universe_bits=8, gamma=0.1, repeats=2, rhos=(None, 1.0),
        m_values=(1, 2), variants=(Variant.COUNT_SKETCH,),
    )
    rows = run_quantile(config)
    errors = [r for r in rows if r["metric"].startswith("avg_rank_error")]
    bounds = {r["rho"]: float(r["value"]) for r in rows if r["metric"] == "error_bound"}
    assert len(errors) == 4
    assert set(bounds) == {"none", "1"}
    assert bounds["1"] > bounds["none"]


def test_private_count_min_quantile_rejected():
    with pytest.raises(ConfigError, match="cs"):
        run_quantile(ExperimentConfig(**SMALL))


def test_calibration_table():
    config = ExperimentConfig(gamma=0.01, beta=0.01, rhos=(None, 1.0), delta=1e-6)
    rows = calibration_rows(config)
    table = {(r["variant"], r["metric"]): float(r["value"]) for r in rows}
    assert all(r["rho"] == "1" for r in rows)
    assert table[("cm", "d")] == 6
    assert table[("cs", "d")] == 7
    assert table[("cm", "w")] == table[("cs", "w")] == 100
    assert table[("cm", "sigma")] == pytest.approx(2.4494897, rel=1e-8)
    assert 12.19 <= table[("cm", "E")] < 12.20
    assert table[("cm", "delta2")] == pytest.approx(math.sqrt(12), rel=1e-8)
    assert table[("cm", "epsilon")] == pytest.approx(1 + 2 * math.sqrt(math.log(1e6)), rel=1e-8)
    assert {r["space_kb"] for r in rows if r["variant"] == "cm"} == {"4.6875"}


def test_calibration_large_rho_shrinks_noise():
    rows = calibration_rows(ExperimentConfig(rhos=(1e12,), variants=(Variant.COUNT_SKETCH,)))
    table = {r["metric"]: float(r["value"]) for r in rows}
    assert table["sigma"] < 1e-5
    assert table["E"] < 1e-4


def test_adversarial_rows_small():
    config = ExperimentConfig(rhos=(None, 1.0), trials=10, universe_bits=12, seed=3)
    rows = adversarial_rows(config)
    table = {(r["rho"], r["metric"]): float(r["value"]) for r in rows}
    assert table[("none", "median_deviation")] == 0.0
    assert table[("none", "sigma")] == 0.0
    assert table[("1", "sigma")] == pytest.approx(math.sqrt(5), rel=1e-8)
    assert table[("1", "successes")] + table[("1", "skipped")] == 10


# Desk-scale runs: Zipf s=1.1, 2^16 universe, 10^5 updates, 5 repeats.

@pytest.mark.slow
def test_private_countsketch_are_tracks_nonprivate():
    rows = run_frequency(ExperimentConfig(variants=(Variant.COUNT_SKETCH,)))
    cells = _cells(rows, "are")
    for (variant, rho, space), value in cells.items():
        if rho != "none":
            assert value <= 1.2 * cells[(variant, "none", space)]


@pytest.mark.slow
def test_private_count_min_are_grows_as_budget_shrinks():
    rows = run_frequency(ExperimentConfig(variants=(Variant.COUNT_MIN,), space_kb=(147.3,)))
    cells = _cells(rows, "are")
    space = next(iter(cells))[2]
    assert cells[("cm", "10", space)] < cells[("cm", "1", space)] < cells[("cm", "0.1", space)]


@pytest.mark.slow
def test_private_count_min_finds_exact_top10():
    rows = run_topk(ExperimentConfig(variants=(Variant.COUNT_MIN,), space_kb=(73.7, 147.3)))
    assert len(rows) == 8
    assert all(float(row["value"]) == 1.0 for row in rows)


@pytest.mark.slow
def test_private_count_min_top10_tracks_nonprivate_at_every_space():
    rows = run_topk(ExperimentConfig(variants=(Variant.COUNT_MIN,)))
    cells = _cells(rows, "f1_top10")
    assert len({space for _, _, space in cells}) > 2
    for (variant, rho, space), value in cells.items():
        assert value >= cells[(variant, "none", space)] - 0.02


@pytest.mark.slow
def test_private_dyadic_rank_error_below_gamma_n():
    config = ExperimentConfig(variants=(Variant.COUNT_SKETCH,), rhos=(None, 0.1, 1.0, 10.0))
    rows = run_quantile(config)
    by_rho = {}
    for row in rows:
        if row["metric"].startswith("avg_rank_error"):
            by_rho.setdefault(row["rho"], []).append(float(row["value"]))
    assert sorted(len(errors) for errors in by_rho.values()) == [10] * 4
    for rho, errors in by_rho.items():
        if rho != "none":
            assert max(errors) < 1000
        # flat in the number of queried quantiles
        assert max(errors) / min(errors) < 3


@pytest.mark.slow
def test_adversarial_median_doubles_with_sigma():
    config = ExperimentConfig(rhos=(1.0, 0.25), trials=200, seed=5)
    table = {(r["rho"], r["metric"]): float(r["value"]) for r in adversarial_rows(config)}
    sigma = table[("1", "sigma")]
    assert 0.3 * sigma <= table[("1", "median_deviation")] <= 3 * sigma
    ratio = table[("0.25", "median_deviation")] / table[("1", "median_deviation")]
    assert ratio == pytest.approx(2.0, rel=0.3)
