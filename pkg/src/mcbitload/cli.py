"""Command-line front end.

Subcommands: ``allocate`` (one realization, printed), ``sweep`` (averages
over a mean-CNR grid), ``gap`` (proposed vs exhaustive objectives),
``compare`` (proposed vs baseline reconstructions), ``analytic``
(closed-form averages only) and ``verify`` (first-order optimality report).

Every knob can come from a flat key=value config file (``--config``); flags
override file values, which override defaults. Exit codes: 0 success, 2
configuration error, 3 infeasible instance, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .allocator import LoadingConfig, allocate, solve_continuous
from .analytic import AnalyticParams, avg_power, avg_throughput
from .channel import FadingModel, generate_rayleigh
from .errors import InfeasibleError
from .harness import (
    ALGORITHMS,
    ExperimentSpec,
    emit,
    run_compare,
    run_gap_study,
    run_sweep,
)
from .kkt import check_kkt

__all__ = ["main"]

# sentinel distinguishing "budget explicitly lifted" from "not provided"
_UNCONSTRAINED = object()

_DEFAULTS = {
    "n_subcarriers": 128,
    "n_realizations": 10_000,
    "seed": 1,
    "snr_grid": tuple(np.linspace(0.0, 40.0, 10)),
    "alpha0": 0.5,
    "ber_th": 1e-4,
    "p_th": None,
    "epsilon": 1e-9,
    "power_scale": 1.0,
    "alpha_tol": 1e-6,
    "algorithms": ("proposed",),
    "output_path": None,
    "format": "csv",
    "b_max": 8,
    "snr_definition": "received",
    "mean_gain": 1.0,
}

_COMMAND_DEFAULTS = {
    "gap": {"n_subcarriers": 4, "n_realizations": 100, "p_th": 0.005, "snr_grid": (40.0,)},
    "compare": {"algorithms": ALGORITHMS[:1] + ALGORITHMS[2:]},
}


def _parse_budget(text):
    if text.lower() in ("none", "inf", "unconstrained"):
        return _UNCONSTRAINED
    value = float(text)
    if value <= 0:
        raise ValueError(f"power budget must be positive or 'none', got {text}")
    return value


def _parse_grid(text):
    return tuple(float(part) for part in text.split(",") if part.strip() != "")


def _parse_algorithms(text):
    return tuple(part.strip() for part in text.split(",") if part.strip() != "")


_CONFIG_PARSERS = {
    "n_subcarriers": int,
    "n_realizations": int,
    "seed": int,
    "snr_grid": _parse_grid,
    "alpha0": float,
    "ber_th": float,
    "p_th": _parse_budget,
    "epsilon": float,
    "power_scale": float,
    "alpha_tol": float,
    "algorithms": _parse_algorithms,
    "output_path": str,
    "format": str,
    "b_max": int,
    "snr_definition": str,
    "mean_gain": float,
}


def _read_config(path):
    with open(path) as fh:
        lines = fh.readlines()
    values = {}
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {body!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_PARSERS[key](raw.strip())
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _add_common_flags(sub):
    sub.add_argument("--config", metavar="PATH", help="flat key=value config file")
    sub.add_argument("--subcarriers", type=int, metavar="N", help="subcarrier count")
    sub.add_argument("--realizations", type=int, metavar="R", help="channel draws per point")
    sub.add_argument("--seed", type=int, metavar="S", help="root seed")
    sub.add_argument("--alpha", type=float, metavar="A", help="initial weight in (0, 1)")
    sub.add_argument("--ber-th", type=float, metavar="B", help="BER threshold in (0, 0.2)")
    sub.add_argument(
        "--power-budget",
        type=_parse_budget,
        metavar="MW|none",
        help="total power budget in mW, or 'none'",
    )
    sub.add_argument("--epsilon", type=float, metavar="MW", help="budget feasibility band")
    sub.add_argument("--power-scale", type=float, metavar="S", help="objective power scale")
    sub.add_argument("--alpha-tol", type=float, metavar="T", help="bisection tolerance")
    sub.add_argument("--snr-grid", type=_parse_grid, metavar="DB,DB,...", help="mean-CNR grid")
    sub.add_argument(
        "--snr-definition",
        choices=("received", "mean_cnr"),
        help="what the snr_db column reports",
    )
    sub.add_argument("--mean-gain", type=float, metavar="G", help="mean channel power gain")
    sub.add_argument("--b-max", type=int, metavar="B", help="exhaustive search depth")
    sub.add_argument(
        "--algorithms", type=_parse_algorithms, metavar="A,B,...", help="algorithms to run"
    )
    sub.add_argument("--output", metavar="PATH", help="write results here")
    sub.add_argument("--format", choices=("csv", "json"), help="output format")
    sub.add_argument("--fast", action="store_true", help="100 realizations unless overridden")


_FLAG_TO_KEY = {
    "subcarriers": "n_subcarriers",
    "realizations": "n_realizations",
    "seed": "seed",
    "alpha": "alpha0",
    "ber_th": "ber_th",
    "power_budget": "p_th",
    "epsilon": "epsilon",
    "power_scale": "power_scale",
    "alpha_tol": "alpha_tol",
    "snr_grid": "snr_grid",
    "snr_definition": "snr_definition",
    "mean_gain": "mean_gain",
    "b_max": "b_max",
    "algorithms": "algorithms",
    "output": "output_path",
    "format": "format",
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="mcbitload",
        description="Bit and power loading experiments for multicarrier links.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    helps = {
        "allocate": "load one channel realization and print the allocation",
        "sweep": "average the loading algorithms over a mean-CNR grid",
        "gap": "compare proposed and exhaustive objectives on small instances",
        "compare": "run the proposed algorithm against matched baselines",
        "analytic": "evaluate the closed-form fading averages",
        "verify": "check first-order optimality at continuous solutions",
    }
    for name, text in helps.items():
        _add_common_flags(subs.add_parser(name, help=text))
    return parser


def _settings(args):
    merged = dict(_DEFAULTS)
    merged.update(_COMMAND_DEFAULTS.get(args.command, {}))
    explicit = set()
    if args.config:
        file_values = _read_config(args.config)
        merged.update(file_values)
        explicit |= set(file_values)
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag)
        if value is not None:
            merged[key] = value
            explicit.add(key)
    if args.fast and "n_realizations" not in explicit:
        merged["n_realizations"] = 100
    if merged["p_th"] is _UNCONSTRAINED:
        merged["p_th"] = None
    return merged


def _loading(cfg):
    return LoadingConfig(
        alpha0=cfg["alpha0"],
        ber_th=cfg["ber_th"],
        p_th=cfg["p_th"],
        epsilon=cfg["epsilon"],
        power_scale=cfg["power_scale"],
        alpha_tol=cfg["alpha_tol"],
    )


def _spec(cfg, algorithms=None):
    return ExperimentSpec(
        n_subcarriers=cfg["n_subcarriers"],
        n_realizations=cfg["n_realizations"],
        seed=cfg["seed"],
        snr_grid=cfg["snr_grid"],
        loading=_loading(cfg),
        algorithms=algorithms if algorithms is not None else cfg["algorithms"],
        output_path=cfg["output_path"],
        b_max=cfg["b_max"],
        snr_definition=cfg["snr_definition"],
        mean_gain=cfg["mean_gain"],
    )


def _print_records(records, cfg):
    if cfg["output_path"]:
        emit(records, cfg["output_path"], cfg["format"])
        print(f"wrote {len(records)} records to {cfg['output_path']}")
    else:
        from .harness import _COLUMNS, _cell, _row

        writer = csv.writer(sys.stdout)
        writer.writerow(_COLUMNS)
        for record in records:
            writer.writerow([_cell(v) for v in _row(record)])


def _cmd_allocate(cfg):
    db = cfg["snr_grid"][0]
    noise_variance = cfg["mean_gain"] / 10.0 ** (db / 10.0)
    chan = generate_rayleigh(
        cfg["n_subcarriers"], FadingModel(cfg["mean_gain"]), noise_variance, [cfg["seed"], 0, 0]
    )
    alloc = allocate(chan, _loading(cfg))
    print(f"mean CNR {db:g} dB, {cfg['n_subcarriers']} subcarriers, seed {cfg['seed']}")
    print(
        f"alpha_used={alloc.alpha_used:.9f} total_bits={alloc.total_bits} "
        f"total_power={alloc.total_power:.9g} mW objective={alloc.objective:.9g} "
        f"iterations={alloc.bisection_iterations}"
    )
    if cfg["output_path"]:
        payload = {
            "cnr": [repr(c) for c in chan.cnr],
            "bits": alloc.bits.tolist(),
            "powers_mw": [repr(p) for p in alloc.powers],
            "alpha_used": alloc.alpha_used,
            "total_bits": alloc.total_bits,
            "total_power_mw": alloc.total_power,
            "objective": alloc.objective,
            "bisection_iterations": alloc.bisection_iterations,
        }
        try:
            if cfg["format"] == "json":
                with open(cfg["output_path"], "w") as fh:
                    json.dump(payload, fh, indent=2)
                    fh.write("\n")
            else:
                with open(cfg["output_path"], "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(["subcarrier", "cnr", "bits", "power_mw"])
                    for i in range(chan.n):
                        writer.writerow(
                            [i, repr(chan.cnr[i]), int(alloc.bits[i]), repr(alloc.powers[i])]
                        )
        except OSError as exc:
            raise OSError(f"cannot write {cfg['output_path']}: {exc}") from exc
        print(f"wrote allocation to {cfg['output_path']}")
    else:
        print(f"{'i':>4} {'cnr':>14} {'bits':>4} {'power_mw':>14}")
        for i in range(chan.n):
            print(f"{i:>4} {chan.cnr[i]:>14.6g} {int(alloc.bits[i]):>4} {alloc.powers[i]:>14.6g}")
    return 0


def _cmd_sweep(cfg):
    _print_records(run_sweep(_spec(cfg)), cfg)
    return 0


def _cmd_compare(cfg):
    _print_records(run_compare(_spec(cfg)), cfg)
    return 0


def _cmd_gap(cfg):
    result = run_gap_study(_spec(cfg))
    header = ["snr_db", "seed", "objective_proposed", "objective_oracle", "rel_gap"]
    rows = [
        [r.snr_db, r.seed, repr(r.objective_proposed), repr(r.objective_oracle), repr(r.rel_gap)]
        for r in result.records
    ]
    if cfg["output_path"]:
        try:
            with open(cfg["output_path"], "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(rows)
        except OSError as exc:
            raise OSError(f"cannot write {cfg['output_path']}: {exc}") from exc
        print(f"wrote {len(rows)} rows to {cfg['output_path']}")
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)
    print(
        f"instances={len(result.records)} mean_rel_gap={result.mean_rel_gap:.6g} "
        f"max_rel_gap={result.max_rel_gap:.6g}"
    )
    return 0


def _cmd_analytic(cfg):
    loading = _loading(cfg)
    from .allocator import effective_alpha

    rows = []
    for db in cfg["snr_grid"]:
        rate = 1.0 / 10.0 ** (db / 10.0)
        params = AnalyticParams(
            alpha=effective_alpha(loading.alpha0, loading.power_scale),
            ber_th=loading.ber_th,
            rate=rate,
            n=cfg["n_subcarriers"],
        )
        rows.append([db, avg_throughput(params), avg_power(params)])
    header = ["snr_db", "analytic_throughput_bits", "analytic_power_mw"]
    if cfg["output_path"]:
        try:
            if cfg["format"] == "json":
                payload = [dict(zip(header, row)) for row in rows]
                with open(cfg["output_path"], "w") as fh:
                    json.dump(payload, fh, indent=2, allow_nan=False)
                    fh.write("\n")
            else:
                with open(cfg["output_path"], "w", newline="") as fh:
                    writer = csv.writer(fh)
                    writer.writerow(header)
                    writer.writerows([[repr(float(v)) for v in row] for row in rows])
        except OSError as exc:
            raise OSError(f"cannot write {cfg['output_path']}: {exc}") from exc
        print(f"wrote {len(rows)} rows to {cfg['output_path']}")
    else:
        print(f"{'snr_db':>8} {'throughput_bits':>16} {'power_mw':>14}")
        for db, thr, pw in rows:
            print(f"{db:>8.3f} {thr:>16.6g} {pw:>14.6g}")
    return 0


def _cmd_verify(cfg):
    loading = _loading(cfg)
    db = cfg["snr_grid"][0]
    noise_variance = cfg["mean_gain"] / 10.0 ** (db / 10.0)
    model = FadingModel(cfg["mean_gain"])
    worst = 0.0
    min_lambda = float("inf")
    failures = 0
    from .allocator import effective_alpha

    alpha = effective_alpha(loading.alpha0, loading.power_scale)
    for trial in range(cfg["n_realizations"]):
        chan = generate_rayleigh(
            cfg["n_subcarriers"], model, noise_variance, [cfg["seed"], 0, trial]
        )
        solution = solve_continuous(alpha, chan, loading.ber_th)
        report = check_kkt(alpha, solution, chan, loading.ber_th)
        worst = max(worst, report.max_abs_residual)
        if report.lambda_.size:
            min_lambda = min(min_lambda, float(report.lambda_.min()))
        failures += 0 if report.passed else 1
    status = "pass" if failures == 0 else "FAIL"
    print(
        f"checked {cfg['n_realizations']} continuous solutions at alpha={alpha:g}, "
        f"mean CNR {db:g} dB"
    )
    print(
        f"max |residual|/alpha = {worst:.3e}, min multiplier = "
        f"{min_lambda if min_lambda != float('inf') else 'n/a'}, "
        f"failures = {failures} -> {status}"
    )
    return 0


_COMMANDS = {
    "allocate": _cmd_allocate,
    "sweep": _cmd_sweep,
    "gap": _cmd_gap,
    "compare": _cmd_compare,
    "analytic": _cmd_analytic,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = _settings(args)
        return _COMMANDS[args.command](cfg)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
