"""Seeded Monte Carlo experiments and plot-ready data export.

A sweep walks a grid of mean-CNR points (dB), draws ``n_realizations``
channels per point from independent substreams of one root seed, runs the
requested algorithms and averages their totals. Records serialize to CSV
or JSON with a fixed column set; identical specs produce byte-identical
output. Realizations are processed sequentially in index order, so the
reduction order (and therefore the last floating-point bit) never depends
on scheduling.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .allocator import (
    LoadingConfig,
    allocate,
    ber,
    effective_alpha,
    scalarize,
)
from .analytic import AnalyticParams, avg_power, avg_throughput
from .baselines import (
    ExhaustiveConfig,
    equal_bit_power_loading,
    exhaustive_search,
    greedy_margin_adaptive,
    uniform_power_bit_loading,
)
from .channel import FadingModel, average_snr_db, generate_rayleigh

__all__ = [
    "ALGORITHMS",
    "ExperimentSpec",
    "SweepRecord",
    "GapRecord",
    "GapStudyResult",
    "run_sweep",
    "run_gap_study",
    "run_compare",
    "emit",
    "read_records",
    "load_record_schema",
    "CSV_HEADER",
]

ALGORITHMS = ("proposed", "exhaustive", "uniform_power", "equal_bit", "greedy")

CSV_HEADER = (
    "algorithm,snr_db,avg_throughput_bits,avg_power_mw,avg_ber,"
    "alpha_used_mean,analytic_throughput_bits,analytic_power_mw"
)

_COLUMNS = CSV_HEADER.split(",")


@dataclass(frozen=True)
class ExperimentSpec:
    """One reproducible experiment.

    ``snr_grid`` holds mean-CNR points in dB; each point fixes the noise
    variance at mean_gain / mean_cnr, so the CNR distribution is
    exponential with mean 10**(dB/10). ``snr_definition`` selects what the
    snr_db column reports: "received" averages the per-subcarrier received
    SNR P*C of the algorithm's own allocations (zero on nulled
    subcarriers), "mean_cnr" reports the grid point itself.
    """

    n_subcarriers: int = 128
    n_realizations: int = 10_000
    seed: int = 1
    snr_grid: tuple = tuple(np.linspace(0.0, 40.0, 10))
    loading: LoadingConfig = field(default_factory=LoadingConfig)
    algorithms: tuple = ("proposed",)
    output_path: str | None = None
    b_max: int = 8
    snr_definition: str = "received"
    mean_gain: float = 1.0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError(f"n_subcarriers must be >= 1, got {self.n_subcarriers}")
        if self.n_realizations < 1:
            raise ValueError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if len(self.snr_grid) == 0:
            raise ValueError("snr_grid must be non-empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        if not self.algorithms:
            raise ValueError("algorithms must be non-empty")
        if "exhaustive" in self.algorithms and self.n_subcarriers > 8:
            raise ValueError("exhaustive search is limited to 8 subcarriers")
        if self.snr_definition not in ("received", "mean_cnr"):
            raise ValueError('snr_definition must be "received" or "mean_cnr"')
        if self.mean_gain <= 0:
            raise ValueError(f"mean_gain must be > 0, got {self.mean_gain}")


@dataclass
class SweepRecord:
    """Averaged results of one algorithm at one sweep point.

    ``analytic_throughput`` and ``analytic_power`` are filled only on
    proposed-algorithm rows of unconstrained runs, where the closed forms
    apply; ``alpha_used_mean`` is None on baseline rows. ``snr_db`` is None
    when nothing was transmitted anywhere (no received SNR exists).
    """

    algorithm: str
    snr_db: float | None
    avg_throughput: float
    avg_power: float
    avg_ber: float
    alpha_used_mean: float | None
    analytic_throughput: float | None = None
    analytic_power: float | None = None


@dataclass
class GapRecord:
    """Proposed-vs-oracle objectives for one seeded instance."""

    snr_db: float
    seed: int
    objective_proposed: float
    objective_oracle: float
    rel_gap: float


@dataclass
class GapStudyResult:
    records: list
    mean_rel_gap: float
    max_rel_gap: float


def _realizations(spec, point_index, noise_variance):
    model = FadingModel(spec.mean_gain)
    return [
        generate_rayleigh(
            spec.n_subcarriers, model, noise_variance, [spec.seed, point_index, trial]
        )
        for trial in range(spec.n_realizations)
    ]


def _pooled_ber(allocations, realizations, ber_th):
    """Mean achieved BER over every active subcarrier of every trial."""
    total = 0.0
    count = 0
    for alloc, chan in zip(allocations, realizations):
        mask = np.asarray(alloc.bits) > 0
        if mask.any():
            achieved = ber(
                np.asarray(alloc.powers)[mask],
                np.asarray(alloc.bits)[mask],
                chan.cnr[mask],
            )
            total += float(np.sum(achieved))
            count += int(mask.sum())
    return total / count if count else 0.0


def _record(spec, db, name, allocations, realizations, ber_th):
    if spec.snr_definition == "mean_cnr":
        snr_db = db
    else:
        snr_db = average_snr_db(allocations, realizations)
        if not math.isfinite(snr_db):
            snr_db = None
    alphas = [a.alpha_used for a in allocations]
    alpha_mean = float(np.mean(alphas)) if not any(map(math.isnan, alphas)) else None
    return SweepRecord(
        algorithm=name,
        snr_db=snr_db,
        avg_throughput=float(np.mean([a.total_bits for a in allocations])),
        avg_power=float(np.mean([a.total_power for a in allocations])),
        avg_ber=_pooled_ber(allocations, realizations, ber_th),
        alpha_used_mean=alpha_mean,
    )


def run_sweep(spec):
    """Run the requested algorithms over the sweep grid.

    Baselines are matched to the proposed algorithm at each point: the
    uniform-power budget is the proposed mean total power, and the
    equal-bit/greedy target is the proposed mean total bits rounded to a
    uniform integer of at least 2 per subcarrier. Analytic columns attach
    to proposed rows when no budget is set. Deterministic given the spec.
    """
    loading = spec.loading
    records = []
    for pi, db in enumerate(spec.snr_grid):
        mean_cnr = 10.0 ** (db / 10.0)
        noise_variance = spec.mean_gain / mean_cnr
        chans = _realizations(spec, pi, noise_variance)
        proposed = [allocate(chan, loading) for chan in chans]
        by_name = {"proposed": proposed}
        if "exhaustive" in spec.algorithms:
            ex = ExhaustiveConfig(spec.b_max)
            by_name["exhaustive"] = [exhaustive_search(c, loading, ex) for c in chans]
        if {"uniform_power", "equal_bit", "greedy"} & set(spec.algorithms):
            budget = float(np.mean([a.total_power for a in proposed]))
            mean_bits = float(np.mean([a.total_bits for a in proposed]))
            b_eq = max(2, round(mean_bits / spec.n_subcarriers))
            target = spec.n_subcarriers * b_eq
            if "uniform_power" in spec.algorithms:
                by_name["uniform_power"] = [
                    uniform_power_bit_loading(c, budget, loading.ber_th) for c in chans
                ]
            if "equal_bit" in spec.algorithms:
                by_name["equal_bit"] = [
                    equal_bit_power_loading(c, target, loading.ber_th) for c in chans
                ]
            if "greedy" in spec.algorithms:
                by_name["greedy"] = [
                    greedy_margin_adaptive(c, target, loading.ber_th) for c in chans
                ]
        for name in spec.algorithms:
            rec = _record(spec, db, name, by_name[name], chans, loading.ber_th)
            if name == "proposed" and loading.p_th is None:
                params = AnalyticParams(
                    alpha=effective_alpha(loading.alpha0, loading.power_scale),
                    ber_th=loading.ber_th,
                    rate=noise_variance / spec.mean_gain,
                    n=spec.n_subcarriers,
                )
                rec.analytic_throughput = avg_throughput(params)
                rec.analytic_power = avg_power(params)
            records.append(rec)
    return records


def run_gap_study(spec):
    """Proposed-vs-exhaustive objectives on small seeded instances.

    Requires 4, 6 or 8 subcarriers and an active power budget. Both
    objectives are scalarized at the initial weight (the oracle optimizes
    exactly that objective, so it lower-bounds the proposed value on every
    instance). The relative gap divides by the oracle objective, or falls
    back to the absolute gap when the oracle objective is zero.
    """
    if spec.n_subcarriers not in (4, 6, 8):
        raise ValueError("gap study requires 4, 6 or 8 subcarriers")
    if spec.loading.p_th is None:
        raise ValueError("gap study requires a power budget")
    loading = spec.loading
    ex = ExhaustiveConfig(spec.b_max)
    records = []
    for pi, db in enumerate(spec.snr_grid):
        mean_cnr = 10.0 ** (db / 10.0)
        noise_variance = spec.mean_gain / mean_cnr
        for trial in range(spec.n_realizations):
            chan = generate_rayleigh(
                spec.n_subcarriers,
                FadingModel(spec.mean_gain),
                noise_variance,
                [spec.seed, pi, trial],
            )
            prop = allocate(chan, loading)
            orac = exhaustive_search(chan, loading, ex)
            obj_p = scalarize(loading.alpha0, prop, loading.power_scale)
            obj_o = scalarize(loading.alpha0, orac, loading.power_scale)
            rel = (obj_p - obj_o) / abs(obj_o) if obj_o != 0.0 else obj_p - obj_o
            records.append(
                GapRecord(
                    snr_db=db,
                    seed=trial,
                    objective_proposed=obj_p,
                    objective_oracle=obj_o,
                    rel_gap=rel,
                )
            )
    gaps = [r.rel_gap for r in records]
    return GapStudyResult(
        records=records,
        mean_rel_gap=float(np.mean(gaps)),
        max_rel_gap=float(np.max(gaps)),
    )


def run_compare(spec):
    """Sweep the proposed algorithm against the matched baselines.

    The proposed algorithm is always included; baselines default to all
    three reconstructions unless ``spec.algorithms`` names a subset.
    """
    baselines = tuple(
        name
        for name in ("exhaustive", "uniform_power", "equal_bit", "greedy")
        if name in spec.algorithms
    ) or ("uniform_power", "equal_bit", "greedy")
    names = ("proposed",) + baselines
    inner = ExperimentSpec(
        n_subcarriers=spec.n_subcarriers,
        n_realizations=spec.n_realizations,
        seed=spec.seed,
        snr_grid=spec.snr_grid,
        loading=spec.loading,
        algorithms=names,
        b_max=spec.b_max,
        snr_definition=spec.snr_definition,
        mean_gain=spec.mean_gain,
    )
    return run_sweep(inner)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def _json_value(value):
    if value is None or isinstance(value, str):
        return value
    v = float(value)
    return v if math.isfinite(v) else None


def _row(record):
    return [
        record.algorithm,
        record.snr_db,
        record.avg_throughput,
        record.avg_power,
        record.avg_ber,
        record.alpha_used_mean,
        record.analytic_throughput,
        record.analytic_power,
    ]


def emit(records, path, format="csv"):
    """Write sweep records to ``path`` as CSV or JSON.

    CSV uses the fixed header of :data:`CSV_HEADER`, empty cells for absent
    values, and repr-formatted floats so a parse returns the exact doubles.
    JSON is an array of objects with the same field names and null for
    absent values. The one asymmetry: a non-finite snr_db (nothing
    transmitted) round-trips through CSV but becomes null in JSON, which
    cannot carry infinities.
    """
    if not records:
        raise ValueError("records must be non-empty")
    if format not in ("csv", "json"):
        raise ValueError(f'format must be "csv" or "json", got {format!r}')
    try:
        if format == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(_COLUMNS)
                for record in records:
                    writer.writerow([_cell(v) for v in _row(record)])
        else:
            payload = [
                {col: _json_value(v) for col, v in zip(_COLUMNS, _row(record))}
                for record in records
            ]
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, allow_nan=False)
                fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _parse_cell(text):
    return None if text == "" else float(text)


def read_records(path, format=None):
    """Parse a file written by :func:`emit` back into SweepRecords."""
    if format is None:
        format = "json" if str(path).endswith(".json") else "csv"
    try:
        if format == "csv":
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                if header != _COLUMNS:
                    raise ValueError(f"unexpected header {header}")
                rows = [
                    [row[0]] + [_parse_cell(cell) for cell in row[1:]] for row in reader
                ]
        else:
            with open(path) as fh:
                payload = json.load(fh)
            rows = [[obj[col] for col in _COLUMNS] for obj in payload]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    return [
        SweepRecord(
            algorithm=row[0],
            snr_db=row[1],
            avg_throughput=row[2],
            avg_power=row[3],
            avg_ber=row[4],
            alpha_used_mean=row[5],
            analytic_throughput=row[6],
            analytic_power=row[7],
        )
        for row in rows
    ]


def load_record_schema():
    """The JSON schema that emitted JSON record arrays conform to."""
    text = (
        importlib.resources.files("mcbitload")
        .joinpath("schemas/sweep_records.schema.json")
        .read_text()
    )
    return json.loads(text)
