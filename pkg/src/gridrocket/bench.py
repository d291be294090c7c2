"""Scaling benchmark harness and per-watt efficiency arithmetic.

The default grid varies one parameter at a time around fixed standard
values, mirroring the instance-count / series-length / kernel-count
scaling methodology at desk scale.  Only feature generation is timed;
kernel generation and data synthesis happen outside the clock.
"""

import csv
import json
import time
from dataclasses import asdict, dataclass

from . import engine
from .data import synth_random
from .kernels import GenOptions, generate_bank

SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "varied",
    "n_instances",
    "l_series",
    "n_kernels",
    "wall_seconds",
    "dot_products",
    "dot_products_per_second",
    "speedup",
    "nominal_watts_a",
    "nominal_watts_b",
    "per_watt_gain",
    "error",
]

DESK_STANDARD = {"n_instances": 100, "l_series": 1000, "n_kernels": 1000}
DESK_VARIATIONS = {
    "n_instances": [50, 100, 200, 400],
    "l_series": [250, 500, 1000, 2000],
    "n_kernels": [250, 500, 1000, 2000],
}


@dataclass
class BenchRow:
    varied: str
    n_instances: int
    l_series: int
    n_kernels: int
    wall_seconds: float = 0.0
    dot_products: int = 0
    dot_products_per_second: float = 0.0
    speedup: float | None = None
    nominal_watts_a: float | None = None
    nominal_watts_b: float | None = None
    per_watt_gain: float | None = None
    error: str = ""

    def point(self):
        return (self.varied, self.n_instances, self.l_series, self.n_kernels)


def per_watt_gain(speedup: float, watts_a: float, watts_b: float) -> float:
    """Efficiency gain of device a over baseline device b.

    A speedup measured between devices of unequal nominal power is scaled
    by the power ratio: ``speedup * watts_b / watts_a``.
    """
    if watts_a <= 0 or watts_b <= 0:
        raise ValueError("nominal watts must be positive")
    return speedup * watts_b / watts_a


def _measure_point(
    n_instances, l_series, n_kernels, seed, limits, precision, include_mpv
) -> BenchRow:
    row = BenchRow("", n_instances, l_series, n_kernels)
    bank = generate_bank(l_series, 1, n_kernels, GenOptions(seed=seed))
    dataset = synth_random(n_instances, 1, l_series, seed + 1)
    try:
        start = time.perf_counter()
        _, stats = engine.transform_with_stats(
            dataset, bank, limits=limits, include_mpv=include_mpv, precision=precision
        )
        row.wall_seconds = time.perf_counter() - start
        row.dot_products = stats.total_dot_products
        row.dot_products_per_second = row.dot_products / row.wall_seconds
    except engine.CapacityError as exc:
        row.error = str(exc)
    return row


def warmup(precision: str = "single", include_mpv: bool = False) -> None:
    """Compile the engine kernels outside any timed region."""
    bank = generate_bank(32, 1, 4, GenOptions(seed=0))
    dataset = synth_random(2, 1, 32, 0)
    engine.transform(dataset, bank, include_mpv=include_mpv, precision=precision)


def run_grid(
    standard: dict | None = None,
    variations: dict | None = None,
    seed: int = 0,
    limits: engine.GridLimits | None = None,
    precision: str = "single",
    include_mpv: bool = False,
    progress=None,
) -> list:
    """Time one transform per grid point, one varied parameter at a time."""
    standard = dict(DESK_STANDARD if standard is None else standard)
    variations = dict(DESK_VARIATIONS if variations is None else variations)
    unknown = set(variations) - set(DESK_STANDARD)
    if unknown:
        raise ValueError(f"unknown grid parameters: {sorted(unknown)}")
    warmup(precision=precision, include_mpv=include_mpv)
    rows = []
    for param, values in variations.items():
        for value in values:
            point = dict(standard)
            point[param] = value
            row = _measure_point(
                point["n_instances"],
                point["l_series"],
                point["n_kernels"],
                seed,
                limits,
                precision,
                include_mpv,
            )
            row.varied = param
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows


def attach_comparison(rows, baseline_rows, watts_a=None, watts_b=None) -> None:
    """Fill speedup (baseline wall / our wall) and per-watt columns in place.

    ``watts_a`` is the nominal power of the device behind ``rows``;
    ``watts_b`` that of the baseline device.
    """
    baseline = {row.point(): row for row in baseline_rows}
    for row in rows:
        other = baseline.get(row.point())
        if other is None or row.error or other.error or row.wall_seconds <= 0:
            continue
        row.speedup = other.wall_seconds / row.wall_seconds
        if watts_a is not None and watts_b is not None:
            row.nominal_watts_a = watts_a
            row.nominal_watts_b = watts_b
            row.per_watt_gain = per_watt_gain(row.speedup, watts_a, watts_b)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            record = asdict(row)
            writer.writerow([_format_cell(record[col]) for col in CSV_COLUMNS])


def read_csv(path) -> list:
    rows = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}, wanted {CSV_COLUMNS}")
        for record in reader:
            rows.append(
                BenchRow(
                    varied=record["varied"],
                    n_instances=int(record["n_instances"]),
                    l_series=int(record["l_series"]),
                    n_kernels=int(record["n_kernels"]),
                    wall_seconds=float(record["wall_seconds"]),
                    dot_products=int(record["dot_products"]),
                    dot_products_per_second=float(record["dot_products_per_second"]),
                    speedup=float(record["speedup"]) if record["speedup"] else None,
                    nominal_watts_a=(
                        float(record["nominal_watts_a"]) if record["nominal_watts_a"] else None
                    ),
                    nominal_watts_b=(
                        float(record["nominal_watts_b"]) if record["nominal_watts_b"] else None
                    ),
                    per_watt_gain=(
                        float(record["per_watt_gain"]) if record["per_watt_gain"] else None
                    ),
                    error=record["error"],
                )
            )
    return rows


def write_json(rows, path) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "rows": [asdict(row) for row in rows]}
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def read_json(path) -> list:
    with open(path) as f:
        payload = json.load(f)
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError("unsupported benchmark schema version")
    return [BenchRow(**record) for record in payload["rows"]]


def doubling_ratios(rows) -> dict:
    """Wall-time ratios between consecutive sizes of each varied parameter."""
    ratios = {}
    for param in sorted({row.varied for row in rows}):
        series = sorted(
            (row for row in rows if row.varied == param and not row.error),
            key=lambda row: getattr(row, param),
        )
        pairs = []
        for prev, cur in zip(series, series[1:]):
            pairs.append(
                (
                    getattr(prev, param),
                    getattr(cur, param),
                    cur.wall_seconds / prev.wall_seconds,
                )
            )
        ratios[param] = pairs
    return ratios
