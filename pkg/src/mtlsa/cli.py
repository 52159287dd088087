"""Command-line entry point.

Commands: gen-data, train, ablate, report, audit-weights. Settings resolve
with the precedence command-line override > config file > documented default;
config files are line-oriented `key = value` text and unknown keys are
rejected. All diagnostics go to stderr; data goes to files or stdout. The
MTLSA_LOG environment variable (debug, info, warning, error) controls
verbosity. Long outputs are written to a `.partial` path and renamed on
completion, so an interrupted run leaves clearly marked partial files.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass, field

from . import bench, dataio, nncore, plots, trainer, weighting

LOG = logging.getLogger("mtlsa")


class CliError(Exception):
    pass


@dataclass
class CliConfig:
    command: str
    config_path: str | None = None
    overrides: dict = field(default_factory=dict)
    out_dir: str = "."
    verbosity: str = "warning"


# settings understood by config files and --set; values are kept as strings
# until a command coerces them
TRAIN_KEYS = {
    "strategy": str,
    "weight_mode": str,
    "epochs": int,
    "init_epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "temperature": float,
    "kappa": float,
    "lambda": float,
    "clusters_a": int,
    "clusters_b": int,
    "hidden_sizes": "int_tuple",
    "head_sizes": "int_tuple",
    "activation": str,
    "seed": int,
}
EXTRA_KEYS = {"data_dir": str, "out_dir": str}
KNOWN_KEYS = {**TRAIN_KEYS, **EXTRA_KEYS}

DATASET_FILES = {
    "train_a": "a_train.csv",
    "train_b": "b_train.csv",
    "test_a": "a_test.csv",
    "test_b": "b_test.csv",
}


def _parse_int_tuple(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _coerce(key, raw):
    caster = KNOWN_KEYS[key]
    if caster == "int_tuple":
        return _parse_int_tuple(raw)
    return caster(raw)


def _default_settings():
    cfg = trainer.TrainConfig()
    settings = {key: getattr(cfg, "lam" if key == "lambda" else key) for key in TRAIN_KEYS}
    settings["data_dir"] = None
    settings["out_dir"] = "."
    return settings


def parse_config_file(path):
    """Parse line-oriented `key = value` text; returns raw string values."""
    if not os.path.exists(path):
        raise CliError(f"config file not found: {path}")
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise CliError(f"{path} line {lineno}: expected 'key = value', got {stripped!r}")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in KNOWN_KEYS:
                raise CliError(f"{path} line {lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def resolve_settings(config_path=None, set_pairs=(), **flag_overrides):
    """Merge documented defaults, config file, --set pairs, and dedicated flags."""
    settings = _default_settings()
    if config_path:
        for key, raw in parse_config_file(config_path).items():
            settings[key] = _coerce(key, raw)
    for pair in set_pairs or ():
        if "=" not in pair:
            raise CliError(f"--set expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise CliError(f"--set: unknown config key {key!r}")
        settings[key] = _coerce(key, raw.strip())
    for key, value in flag_overrides.items():
        if value is not None:
            settings[key] = value
    return settings


def build_train_config(settings):
    kwargs = {}
    for key in TRAIN_KEYS:
        field_name = "lam" if key == "lambda" else key
        kwargs[field_name] = settings[key]
    try:
        return trainer.TrainConfig(**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from exc


def _atomic_write(path, write_fn):
    partial = f"{path}.partial"
    write_fn(partial)
    os.replace(partial, path)


def _load_pair(data_dir):
    missing = [
        os.path.join(data_dir, name)
        for name in DATASET_FILES.values()
        if not os.path.exists(os.path.join(data_dir, name))
    ]
    if missing:
        raise CliError(f"missing dataset files: {', '.join(missing)}")
    loaded = {
        key: dataio.load_csv(os.path.join(data_dir, name))
        for key, name in DATASET_FILES.items()
    }
    return dataio.BenchmarkPair(
        train_a=loaded["train_a"],
        train_b=loaded["train_b"],
        test_a=loaded["test_a"],
        test_b=loaded["test_b"],
    )


def cmd_gen_data(args):
    shift = dataio.ShiftSpec(
        mean_offset=tuple(float(v) for v in args.offset.split(",")),
        scale=args.scale,
        rotation_deg=args.rotation,
        label_noise_rate=args.noise,
    )
    pair = dataio.make_benchmark_pair(
        args.seed,
        args.n_a,
        args.n_b,
        args.c_a,
        args.c_b,
        shift,
        dim=args.dim,
        task_angle_deg=args.task_angle,
        train_fraction=args.train_frac,
    )
    os.makedirs(args.out, exist_ok=True)
    datasets = {
        "a_train.csv": pair.train_a,
        "a_test.csv": pair.test_a,
        "b_train.csv": pair.train_b,
        "b_test.csv": pair.test_b,
    }
    for name, dataset in datasets.items():
        path = os.path.join(args.out, name)
        _atomic_write(path, lambda p, d=dataset: dataio.save_csv(d, p))
        _atomic_write(
            f"{path}.meta",
            lambda p, d=dataset: dataio.save_metadata(d, p, seed=args.seed, shift=shift),
        )
        print(path)
    pair_meta = os.path.join(args.out, "pair.meta")

    def write_pair_meta(p):
        with open(p, "w", encoding="utf-8") as fh:
            for key, value in (
                ("seed", args.seed),
                ("n_a", args.n_a),
                ("n_b", args.n_b),
                ("c_a", args.c_a),
                ("c_b", args.c_b),
                ("dim", args.dim),
                ("task_angle_deg", repr(float(args.task_angle))),
                ("train_fraction", repr(float(args.train_frac))),
                ("mean_offset", ",".join(repr(float(v)) for v in shift.mean_offset)),
                ("scale", repr(float(shift.scale))),
                ("rotation_deg", repr(float(shift.rotation_deg))),
                ("label_noise_rate", repr(float(shift.label_noise_rate))),
            ):
                fh.write(f"{key} = {value}\n")

    _atomic_write(pair_meta, write_pair_meta)
    print(pair_meta)
    return 0


def cmd_train(args):
    settings = resolve_settings(
        config_path=args.config,
        set_pairs=args.set,
        seed=args.seed,
        epochs=args.epochs,
        strategy=args.strategy,
        out_dir=args.out,
    )
    if not settings["data_dir"]:
        raise CliError("no data_dir configured; set it in the config file or via --set data_dir=...")
    config = build_train_config(settings)
    pair = _load_pair(settings["data_dir"])

    LOG.info("training strategy=%s weight_mode=%s seed=%d", config.strategy, config.weight_mode, config.seed)
    result = trainer.train(config, pair.train_a, pair.train_b, pair.test_a, pair.test_b)

    out_dir = settings["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    ckpt_path = os.path.join(out_dir, "checkpoint.txt")
    _atomic_write(ckpt_path, lambda p: nncore.save_checkpoint(result.net_a, p))
    written = [ckpt_path]
    if result.net_b is not result.net_a:
        ckpt_b = os.path.join(out_dir, "checkpoint_b.txt")
        _atomic_write(ckpt_b, lambda p: nncore.save_checkpoint(result.net_b, p))
        written.append(ckpt_b)
    history_path = os.path.join(out_dir, "history.csv")
    _atomic_write(history_path, lambda p: trainer.write_history(result.history, p))
    written.append(history_path)
    for tag, records in (("a", result.audit_active_a), ("b", result.audit_active_b)):
        if records is not None:
            audit_path = os.path.join(out_dir, f"weight_audit_{tag}.csv")
            _atomic_write(audit_path, lambda p, r=records: weighting.write_weight_audit(r, p))
            written.append(audit_path)
    for path in written:
        LOG.info("wrote %s", path)

    acc_a = trainer.accuracy(result.net_a, "a", pair.test_a)
    acc_b = trainer.accuracy(result.net_b, "b", pair.test_b)
    print(f"test_acc_a={acc_a:.17g} test_acc_b={acc_b:.17g}")
    return 0


def cmd_ablate(args):
    settings = resolve_settings(config_path=args.config, set_pairs=args.set, out_dir=args.out)
    base_config = build_train_config(settings)
    pair = _load_pair(args.data)
    strategies = args.strategies.split(",") if args.strategies else list(bench.DEFAULT_ROSTER)
    seeds = [int(s) for s in args.seeds.split(",")]
    for strategy in strategies:
        if strategy not in bench.STRATEGY_SETTINGS:
            raise CliError(
                f"unknown strategy {strategy!r}; valid strategies: {', '.join(bench.STRATEGY_SETTINGS)}"
            )

    LOG.info("ablation matrix: %d strategies x %d seeds", len(strategies), len(seeds))
    results = bench.run_matrix(strategies, pair, seeds, base_config)
    failed = [r for r in results if r.error]
    for r in failed:
        LOG.warning("cell (%s, seed %d) failed: %s", r.strategy, r.seed, r.error)

    os.makedirs(settings["out_dir"], exist_ok=True)
    results_path = os.path.join(settings["out_dir"], "results.csv")
    _atomic_write(results_path, lambda p: bench.write_results(results, p))
    print(results_path)
    return 0 if not failed else 1


def cmd_report(args):
    if not os.path.exists(args.results):
        raise CliError(f"missing results file: {args.results}")
    results = bench.load_results(args.results)
    rows = bench.summarize(results)
    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, "summary.csv")
    plot_data_path = os.path.join(args.out, "plot_data.csv")
    figure_path = os.path.join(args.out, "report.png")
    _atomic_write(summary_path, lambda p: bench.write_summary(rows, p))
    _atomic_write(plot_data_path, lambda p: bench.write_plot_data(rows, p))
    _atomic_write(figure_path, lambda p: plots.render_summary_figure(rows, p))
    for path in (summary_path, plot_data_path, figure_path):
        print(path)
    return 0


def cmd_audit_weights(args):
    settings = resolve_settings(config_path=args.config, set_pairs=args.set)
    config = build_train_config(settings)
    if not os.path.exists(args.checkpoint):
        raise CliError(f"missing checkpoint file: {args.checkpoint}")
    net = nncore.load_checkpoint(args.checkpoint)
    pair = _load_pair(args.data)
    active = args.active.upper()
    _, records = trainer.weight_audit(net, pair.train_a, pair.train_b, active, config)
    _atomic_write(args.out, lambda p: weighting.write_weight_audit(records, p))
    print(args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mtlsa",
        description="Multi-task learning with selective augmentation on disjoint datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic disjoint dataset pair")
    p.add_argument("--seed", type=int, default=0, help="generation seed (default 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-a", type=int, default=200, help="samples in dataset A (default 200)")
    p.add_argument("--n-b", type=int, default=200, help="samples in dataset B (default 200)")
    p.add_argument("--c-a", type=int, default=2, help="classes for task A (default 2)")
    p.add_argument("--c-b", type=int, default=2, help="classes for task B (default 2)")
    p.add_argument("--dim", type=int, default=2, help="feature dimension (default 2)")
    p.add_argument("--offset", default="0.0,0.0", help="mean offset applied to B (default 0.0,0.0)")
    p.add_argument("--scale", type=float, default=1.0, help="scale applied to B (default 1)")
    p.add_argument("--rotation", type=float, default=0.0, help="rotation in degrees applied to B (default 0)")
    p.add_argument("--noise", type=float, default=0.0, help="exposed-label noise rate (default 0)")
    p.add_argument("--train-frac", type=float, default=0.8, help="train split fraction (default 0.8)")
    p.add_argument("--task-angle", type=float, default=30.0, help="angle between task directions (default 30)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train one strategy and write its artifacts")
    p.add_argument("--config", required=True, help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--seed", type=int, help="override the seed")
    p.add_argument("--epochs", type=int, help="override the alternating epoch count")
    p.add_argument("--strategy", help="override the strategy (stl, joint, mtl-wf, mtl-sa)")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run the strategy/seed matrix")
    p.add_argument("--data", required=True, help="directory holding the gen-data CSVs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seeds", default="1,2,3", help="comma-separated seeds (default 1,2,3)")
    p.add_argument("--strategies", help="comma-separated strategy ids (default: full roster)")
    p.add_argument("--config", help="base key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("report", help="summarize ablation results into tables and figures")
    p.add_argument("--results", required=True, help="results.csv produced by ablate")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit-weights", help="write the per-sample weight audit for a checkpoint")
    p.add_argument("--data", required=True, help="directory holding the gen-data CSVs")
    p.add_argument("--checkpoint", required=True, help="checkpoint file from train")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--active", choices=("a", "b"), default="b", help="dataset to weight (default b)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_audit_weights)

    return parser


def _configure_logging():
    level_name = os.environ.get("MTLSA_LOG", "warning").lower()
    levels = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING, "error": logging.ERROR}
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(level_name, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    return level_name


def main(argv=None):
    verbosity = _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    cli_config = CliConfig(
        command=args.command,
        config_path=getattr(args, "config", None),
        overrides={pair.partition("=")[0]: pair.partition("=")[2] for pair in (getattr(args, "set", None) or [])},
        out_dir=getattr(args, "out", ".") or ".",
        verbosity=verbosity,
    )
    LOG.debug("command=%s overrides=%s", cli_config.command, cli_config.overrides)
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
