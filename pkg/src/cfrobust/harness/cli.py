"""Command line front door: ``cfrobust <subcommand> [options]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..algorithms import ALGORITHM_NAMES
from ..attacks import PushAttackConfig, generate_push_attack
from ..distortion import kl_bound, rms_bound, rms_over_prefixes, sample_orders, trajectory_predictions, true_ratings
from ..errors import CFRobustError
from ..ratings import RatingScale
from .io import PlotTable, ensure_dir, format_value, read_ratings_csv, save_cache, write_plot_table, write_ratings_csv
from .protocol import (
    ExperimentConfig,
    algorithm_specs,
    choose_parameter,
    load_experiment_data,
    r_label,
    run_experiment,
    sample_protocol_split,
    table_rows,
)
from .seeds import derive_seed
from .sweeps import run_sweep

FIG_RATES = (0.01, 0.05, 0.1, 0.2)


def _config(args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "n_max", None) is not None:
        overrides["n_max"] = args.n_max
    if getattr(args, "r", None) is not None:
        overrides["attack_fractions"] = (args.r,)
        overrides["attack_counts"] = ()
    if getattr(args, "algo", None):
        overrides["algorithms"] = (args.algo,)
    if getattr(args, "data", None):
        overrides["data_path"] = args.data
    if args.config:
        return ExperimentConfig.from_file(args.config, **overrides)
    if getattr(args, "desk", False):
        return ExperimentConfig.desk(**overrides)
    return ExperimentConfig(**overrides)


def cmd_ingest(args) -> int:
    data = read_ratings_csv(args.csv, RatingScale.evenly_spaced(args.levels))
    out = Path(args.out or Path(args.csv).with_suffix(".npz"))
    save_cache(out, data)
    W = data.ratings
    print(f"{W.M} users, {W.N} products, {int((W.codes >= 0).sum())} ratings, "
          f"{data.duplicates} duplicates -> {out}")
    return 0


def cmd_attack(args) -> int:
    config = _config(args)
    data = load_experiment_data(config)
    Y, _ = sample_protocol_split(data, config, derive_seed(config.seed, 0, "split"))
    count = config.counts()[0]
    seed = derive_seed(config.seed, 0, "attack", config.attack_labels()[0])
    Z, promoted = generate_push_attack(Y, PushAttackConfig(count, config.promote_fraction, seed))
    out = Path(args.out or "attack.csv")
    write_ratings_csv(out, Z, user_ids=[f"z{m}" for m in range(Z.M)])
    print(f"{Z.M} manipulated profiles promoting {len(promoted)} products -> {out}")
    print("promoted: " + " ".join(str(int(p)) for p in promoted))
    return 0


def cmd_bound(args) -> int:
    rates = [args.r] if args.r is not None else list(FIG_RATES)
    n_max = args.n_max or 40
    out = ensure_dir(args.out or "bounds")
    for r in rates:
        n = range(1, n_max + 1)
        write_plot_table(PlotTable(f"bnd_{r_label(r)}", [(k, rms_bound(k, r)) for k in n]), out)
        write_plot_table(PlotTable(f"klbnd_{r_label(r)}", [(k, kl_bound(k, r)) for k in n]), out)
        print(f"r={format_value(r)}: rms_bound(n={n_max}) = {rms_bound(n_max, r):.6f}")
    return 0


def cmd_eval(args) -> int:
    config = _config(args)
    name = config.algorithms[0]
    spec = algorithm_specs(config)[name]
    data = load_experiment_data(config)
    Y, X = sample_protocol_split(data, config, derive_seed(config.seed, 0, "split"))
    orders = sample_orders(X, config.n_max, derive_seed(config.seed, 0, "orders"))
    lab = config.attack_labels()[0]
    Z, _ = generate_push_attack(Y, PushAttackConfig(config.counts()[0], config.promote_fraction,
                                                    derive_seed(config.seed, 0, "attack", lab)))
    cv_seed = derive_seed(config.seed, 0, "cv", name)
    W = Y.concat(Z)
    gamma = choose_parameter(spec, config, Y, cv_seed)
    g2 = choose_parameter(spec, config, W, cv_seed)
    clean = trajectory_predictions(spec.family(gamma)(Y), X, orders)
    corrupt = trajectory_predictions(spec.family(g2)(W), X, orders)
    dist = rms_over_prefixes((clean - corrupt) ** 2)
    err = rms_over_prefixes((true_ratings(X, orders) - clean) ** 2)
    out = ensure_dir(args.out or "eval")
    write_plot_table(PlotTable(f"{name}_distortions_{lab}", table_rows(dist)), out)
    write_plot_table(PlotTable(f"{name}_errors", table_rows(err)), out)
    r = Z.M / (Y.M + Z.M)
    print(f"{name}: parameter {format_value(float(gamma))} (clean), {format_value(float(g2))} (attacked)")
    print(f"n={config.n_max}: RMS distortion {dist[-1]:.6f}, RMS error {err[-1]:.6f}, "
          f"bound {rms_bound(config.n_max, r):.6f} at r={r:.4f}")
    return 0


def cmd_experiment(args) -> int:
    config = _config(args)
    out = run_experiment(config, args.out or "report")
    print(f"report written to {out}")
    return 0


def cmd_verify(args) -> int:
    report = run_sweep(args.instances, args.seed or 0)
    for line in report.lines():
        print(line)
    print(f"{report.instances} instances in {report.seconds:.1f}s")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cfrobust", description="Manipulation robustness of collaborative filtering.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, algo=False, rate=False, n_max=False, data=False):
        sp.add_argument("--config", help="key=value file, one pair per line, '#' comments")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--out", help="output path or directory")
        if algo:
            sp.add_argument("--algo", choices=ALGORITHM_NAMES)
        if rate:
            sp.add_argument("--r", type=float, help="manipulated fraction")
        if n_max:
            sp.add_argument("--n-max", dest="n_max", type=int)
        if data:
            sp.add_argument("--data", help="ratings CSV or .npz cache; synthetic data if omitted")
            sp.add_argument("--desk", action="store_true", help="start from the small desk-scale preset")

    sp = sub.add_parser("ingest", help="convert a ratings CSV into the binary cache")
    sp.add_argument("csv")
    sp.add_argument("--levels", type=int, default=5)
    common(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("attack", help="generate push-attack profiles as CSV")
    common(sp, rate=True, n_max=True, data=True)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("bound", help="write the distortion bound tables")
    common(sp, rate=True, n_max=True)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("eval", help="distortion and error curves for one algorithm")
    common(sp, algo=True, rate=True, n_max=True, data=True)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("experiment", help="the full replicated protocol")
    common(sp, algo=True, rate=True, n_max=True, data=True)
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("verify", help="exact-enumeration bound checks on random tiny instances")
    common(sp)
    sp.add_argument("--instances", type=int, default=200)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (CFRobustError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
