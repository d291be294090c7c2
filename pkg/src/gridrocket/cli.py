"""Command-line interface.

Subcommands: gen-kernels, transform, fit, predict, bench, report.
Exit codes: 0 success, 2 usage or input error, 3 capacity error.

Engine settings can come from a key=value config file (see ``--config``);
command-line flags override config values.  Recognized keys:
``precision``, ``workers_per_cell``, ``max_x``, ``max_y``,
``memory_budget_bytes``, ``devices``.
"""

import argparse
import sys
import time

import numpy as np

from . import bench as bench_mod
from . import engine, ridge
from ._binio import FormatError
from .data import ParseError, load_dataset, synth_two_class, write_ts
from .features import FeatureMatrix
from .kernels import GenOptions, KernelBank, generate_bank
from .plots import render_scaling_figures

_CONFIG_KEYS = {
    "precision": str,
    "workers_per_cell": int,
    "max_x": int,
    "max_y": int,
    "memory_budget_bytes": int,
    "devices": int,
}


def load_config(path) -> dict:
    """Parse a key = value config file; '#' starts a comment."""
    config = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"expected key = value, got {line!r}", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ParseError(f"unknown config key {key!r}", lineno)
            try:
                config[key] = _CONFIG_KEYS[key](value)
            except ValueError:
                raise ParseError(f"bad value for {key!r}: {value!r}", lineno) from None
    return config


def _engine_settings(args) -> dict:
    """Merge defaults, config file, and explicit flags."""
    settings = {
        "precision": "single",
        "workers_per_cell": 1024,
        "max_x": 2**31 - 1,
        "max_y": 65535,
        "memory_budget_bytes": 1 << 30,
        "devices": 1,
    }
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    for key in settings:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _limits(settings) -> engine.GridLimits:
    return engine.GridLimits(
        max_x=settings["max_x"],
        max_y=settings["max_y"],
        workers_per_cell=settings["workers_per_cell"],
        memory_budget_bytes=settings["memory_budget_bytes"],
    )


def _add_engine_flags(parser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--precision", choices=["single", "double"], default=None)
    parser.add_argument("--workers", dest="workers_per_cell", type=int, default=None)
    parser.add_argument("--max-x", dest="max_x", type=int, default=None)
    parser.add_argument("--max-y", dest="max_y", type=int, default=None)
    parser.add_argument(
        "--memory-budget", dest="memory_budget_bytes", type=int, default=None
    )
    parser.add_argument("--devices", type=int, default=None)


def _load_labels(path) -> list:
    with open(path) as f:
        return [line.strip() for line in f if line.strip()]


def _int_list(text) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}")


def _float_list(text) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}")


def cmd_gen_kernels(args) -> int:
    options = GenOptions(
        center_weights=not args.no_center, include_mpv=args.mpv, seed=args.seed
    )
    bank = generate_bank(args.l_series, args.channels, args.count, options)
    bank.save(args.out)
    if args.json_dump:
        bank.dump_json(args.json_dump)
    print(f"wrote {bank.count} kernels for l_series={bank.l_series} to {args.out}")
    return 0


def _resolve_bank(args, dataset) -> KernelBank:
    if args.bank:
        bank = KernelBank.load(args.bank)
    else:
        if args.kernels is None:
            raise ValueError("either --bank or --kernels is required")
        options = GenOptions(center_weights=not args.no_center, seed=args.seed)
        bank = generate_bank(dataset.l_series, dataset.n_channels, args.kernels, options)
    return bank


def cmd_transform(args) -> int:
    settings = _engine_settings(args)
    dataset = load_dataset(args.data, csv_labels=args.csv_labels)
    bank = _resolve_bank(args, dataset)
    start = time.perf_counter()
    if settings["devices"] > 1:
        matrix = engine.transform_sharded(
            dataset,
            bank,
            settings["devices"],
            limits=_limits(settings),
            include_mpv=args.mpv,
            precision=settings["precision"],
        )
    else:
        matrix = engine.transform(
            dataset,
            bank,
            limits=_limits(settings),
            include_mpv=args.mpv,
            precision=settings["precision"],
        )
    elapsed = time.perf_counter() - start
    matrix.save(args.out)
    if args.csv:
        matrix.to_csv(args.csv)
    print(
        f"transformed {matrix.n_instances} instances x {matrix.values.shape[1]} features "
        f"({settings['precision']}) in {elapsed:.3f}s -> {args.out}"
    )
    return 0


def cmd_fit(args) -> int:
    matrix = FeatureMatrix.load(args.features)
    if args.labels:
        labels = _load_labels(args.labels)
    elif args.data:
        dataset = load_dataset(args.data, csv_labels=args.csv_labels)
        if dataset.labels is None:
            raise ValueError(f"{args.data} carries no labels")
        labels = dataset.labels
    else:
        raise ValueError("either --labels or --data is required")
    if len(labels) != matrix.n_instances:
        raise ValueError(
            f"{len(labels)} labels for {matrix.n_instances} feature rows"
        )
    if args.alpha_grid:
        alpha, scores = ridge.select_alpha(
            matrix, labels, args.alpha_grid, val_fraction=args.val_fraction, seed=args.seed
        )
        print(f"selected alpha={alpha:g} from grid " + ", ".join(
            f"{a:g}:{scores[a]:.4f}" for a in args.alpha_grid
        ))
    else:
        alpha = args.alpha
    model = ridge.fit(matrix, labels, alpha=alpha)
    model.save(args.out)
    train_acc = ridge.accuracy(ridge.predict(model, matrix), labels)
    print(f"training accuracy {train_acc:.4f} (alpha={alpha:g}) -> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = ridge.RidgeModel.load(args.model)
    matrix = FeatureMatrix.load(args.features)
    predicted = ridge.predict(model, matrix)
    with open(args.out, "w") as f:
        for label in predicted:
            f.write(f"{label}\n")
    print(f"wrote {len(predicted)} predictions -> {args.out}")
    if args.truth:
        truth = _load_labels(args.truth)
        acc = ridge.accuracy(predicted, truth)
        print(f"accuracy {acc:.4f}")
    return 0


def cmd_bench(args) -> int:
    settings = _engine_settings(args)
    standard = {
        "n_instances": args.standard_instances,
        "l_series": args.standard_length,
        "n_kernels": args.standard_kernels,
    }
    variations = {}
    if args.vary_instances:
        variations["n_instances"] = args.vary_instances
    if args.vary_lengths:
        variations["l_series"] = args.vary_lengths
    if args.vary_kernels:
        variations["n_kernels"] = args.vary_kernels
    if not variations:
        variations = bench_mod.DESK_VARIATIONS
    rows = bench_mod.run_grid(
        standard=standard,
        variations=variations,
        seed=args.seed,
        limits=_limits(settings),
        precision=settings["precision"],
        include_mpv=args.mpv,
        progress=lambda row: print(
            f"  {row.varied}={getattr(row, row.varied)}: "
            + (f"{row.wall_seconds:.3f}s" if not row.error else f"capacity: {row.error}")
        ),
    )
    if args.baseline:
        baseline = bench_mod.read_csv(args.baseline)
        bench_mod.attach_comparison(rows, baseline, args.watts_a, args.watts_b)
    csv_path = args.out_prefix + ".csv"
    json_path = args.out_prefix + ".json"
    bench_mod.write_csv(rows, csv_path)
    bench_mod.write_json(rows, json_path)
    print(f"wrote {len(rows)} rows -> {csv_path}, {json_path}")
    return 0


def cmd_report(args) -> int:
    rows = bench_mod.read_csv(args.bench)
    baseline = bench_mod.read_csv(args.baseline) if args.baseline else None
    if baseline is not None:
        bench_mod.attach_comparison(rows, baseline, args.watts_a, args.watts_b)
    figures = render_scaling_figures(rows, args.out_dir, baseline_rows=baseline, stem=args.stem)
    summary_path = f"{args.out_dir.rstrip('/')}/{args.stem}_report.csv"
    bench_mod.write_csv(rows, summary_path)
    for param, pairs in bench_mod.doubling_ratios(rows).items():
        for low, high, ratio in pairs:
            print(f"{param}: {low} -> {high}: wall x{ratio:.2f}")
    gains = [row.per_watt_gain for row in rows if row.per_watt_gain is not None]
    if gains:
        print(f"median per-watt gain {np.median(gains):.2f}")
    print(f"wrote {summary_path} and {len(figures)} figures to {args.out_dir}")
    return 0


def cmd_synth(args) -> int:
    dataset = synth_two_class(args.per_class, args.l_series, args.seed)
    write_ts(dataset, args.out)
    print(f"wrote {dataset.n_instances} labeled instances -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridrocket",
        description="Random convolutional kernel transform with a grid-parallel engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-kernels", help="generate and save a kernel bank")
    p.add_argument("--l-series", type=int, required=True)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-center", action="store_true", help="skip weight mean-centering")
    p.add_argument("--mpv", action="store_true", help="mark the bank for three-feature output")
    p.add_argument("--json-dump", help="also write a JSON debug dump")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_kernels)

    p = sub.add_parser("transform", help="extract features from a dataset")
    p.add_argument("--data", required=True, help=".ts, .csv, or binary cache path")
    p.add_argument("--csv-labels", action="store_true", help="CSV input has labels in the last column")
    p.add_argument("--bank", help="load kernels from this bank file")
    p.add_argument("--kernels", type=int, help="generate this many kernels instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-center", action="store_true")
    p.add_argument("--mpv", action="store_true", help="add the mean-of-positives feature")
    p.add_argument("--out", required=True, help="feature matrix output path")
    p.add_argument("--csv", help="also export features as CSV")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("fit", help="fit a ridge classifier on features")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", help="text file, one label per line")
    p.add_argument("--data", help="labeled dataset to take labels from")
    p.add_argument("--csv-labels", action="store_true")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--alpha-grid", type=_float_list, help="comma-separated alphas to validate")
    p.add_argument("--val-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict labels with a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="labels file to score against")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bench", help="run the scaling benchmark grid")
    p.add_argument("--out-prefix", required=True, help="writes PREFIX.csv and PREFIX.json")
    p.add_argument("--vary-instances", type=_int_list)
    p.add_argument("--vary-lengths", type=_int_list)
    p.add_argument("--vary-kernels", type=_int_list)
    p.add_argument("--standard-instances", type=int, default=bench_mod.DESK_STANDARD["n_instances"])
    p.add_argument("--standard-length", type=int, default=bench_mod.DESK_STANDARD["l_series"])
    p.add_argument("--standard-kernels", type=int, default=bench_mod.DESK_STANDARD["n_kernels"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mpv", action="store_true")
    p.add_argument("--baseline", help="baseline bench CSV for speedup columns")
    p.add_argument("--watts-a", type=float, help="nominal watts of this run's device")
    p.add_argument("--watts-b", type=float, help="nominal watts of the baseline device")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render figures and a summary from bench output")
    p.add_argument("--bench", required=True, help="bench CSV to report on")
    p.add_argument("--baseline", help="baseline bench CSV")
    p.add_argument("--watts-a", type=float)
    p.add_argument("--watts-b", type=float)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stem", default="scaling")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write a labeled two-class synthetic dataset")
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--l-series", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except engine.CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
