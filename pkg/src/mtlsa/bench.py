"""Strategy roster, ablation matrix, and report emission.

The default roster mirrors the ablation structure of the training strategies:
single-task and joint baselines, the preserve-only alternating baseline, the
full selective-augmentation method, the three constant-weight special cases,
and the four single-weight special cases (with the transport-based and
plain-mean variants of the distribution weight listed separately).
"""

import csv
import time
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import distweight, trainer

DEFAULT_ROSTER = (
    "stl",
    "joint",
    "mtl-wf",
    "mtl-sa-full",
    "mtl-sa-w0",
    "mtl-sa-w1",
    "mtl-sa-w05",
    "mtl-sa-only-wc",
    "mtl-sa-only-wd",
    "mtl-sa-only-wg-emd",
    "mtl-sa-only-wg-mmd",
)

STRATEGY_SETTINGS = {
    "stl": ("stl", "full"),
    "joint": ("joint", "full"),
    "mtl-wf": ("mtl-wf", "const-0"),
    "mtl-sa-full": ("mtl-sa", "full"),
    "mtl-sa-w0": ("mtl-sa", "const-0"),
    "mtl-sa-w1": ("mtl-sa", "const-1"),
    "mtl-sa-w05": ("mtl-sa", "const-0.5"),
    "mtl-sa-only-wc": ("mtl-sa", "only-wc"),
    "mtl-sa-only-wd": ("mtl-sa", "only-wd"),
    "mtl-sa-only-wg-emd": ("mtl-sa", "only-wg-emd"),
    "mtl-sa-only-wg-mmd": ("mtl-sa", "only-wg-mmd"),
}

RESULTS_COLUMNS = ("strategy", "seed", "test_acc_a", "test_acc_b", "error")
SUMMARY_COLUMNS = ("strategy", "task", "mean_acc", "std_acc", "n_seeds")
PLOT_DATA_COLUMNS = ("strategy", "task", "mean_acc", "std_acc")


@dataclass
class RunResult:
    strategy: str
    seed: int
    test_acc_a: float
    test_acc_b: float
    history: list
    wall_seconds: float
    error: str = ""


class SummaryRow(NamedTuple):
    strategy: str
    task: str
    mean_acc: float
    std_acc: float
    n_seeds: int


def config_for_strategy(strategy_id, base_config, seed):
    if strategy_id not in STRATEGY_SETTINGS:
        raise ValueError(
            f"unknown strategy {strategy_id!r}; valid strategies: {', '.join(STRATEGY_SETTINGS)}"
        )
    strategy, weight_mode = STRATEGY_SETTINGS[strategy_id]
    return replace(base_config, strategy=strategy, weight_mode=weight_mode, seed=seed)


def run_matrix(strategies, pair, seeds, base_config=None):
    """Train and evaluate every (strategy, seed) cell; failures are recorded, not fatal."""
    strategies = list(strategies)
    seeds = list(seeds)
    if not strategies or not seeds:
        raise ValueError("run_matrix needs at least one strategy and one seed")
    base_config = base_config or trainer.TrainConfig()
    results = []
    for strategy_id in strategies:
        for seed in seeds:
            start = time.perf_counter()
            try:
                config = config_for_strategy(strategy_id, base_config, seed)
                out = trainer.train(config, pair.train_a, pair.train_b, pair.test_a, pair.test_b)
                results.append(
                    RunResult(
                        strategy=strategy_id,
                        seed=seed,
                        test_acc_a=trainer.accuracy(out.net_a, "a", pair.test_a),
                        test_acc_b=trainer.accuracy(out.net_b, "b", pair.test_b),
                        history=out.history,
                        wall_seconds=time.perf_counter() - start,
                    )
                )
            except Exception as exc:  # keep the sweep alive; the cell records its failure
                results.append(
                    RunResult(
                        strategy=strategy_id,
                        seed=seed,
                        test_acc_a=float("nan"),
                        test_acc_b=float("nan"),
                        history=[],
                        wall_seconds=time.perf_counter() - start,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
    results.sort(key=lambda r: (r.strategy, r.seed))
    return results


def only_wg_mmd_variant(model_b, reference_features, lam=0.1):
    """Distribution weights using plain mean distances instead of transport costs."""
    dists = distweight.mmd_domain_mean_distances(model_b, reference_features)
    _, w_g = distweight.distribution_weights(model_b, dists, lam)
    return w_g


def summarize(results):
    """Per-strategy, per-task mean and sample std of test accuracy over seeds."""
    results = list(results)
    if not results:
        raise ValueError("summarize needs at least one result")
    rows = []
    for strategy in sorted({r.strategy for r in results}):
        cells = [r for r in results if r.strategy == strategy and not r.error]
        for task in ("a", "b"):
            accs = np.array(
                [r.test_acc_a if task == "a" else r.test_acc_b for r in cells], dtype=np.float64
            )
            mean = float(accs.mean()) if accs.size else float("nan")
            std = float(accs.std(ddof=1)) if accs.size > 1 else 0.0
            rows.append(SummaryRow(strategy, task, mean, std, int(accs.size)))
    return rows


def write_results(results, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_COLUMNS)
        for r in results:
            writer.writerow(
                [r.strategy, r.seed, f"{r.test_acc_a:.17g}", f"{r.test_acc_b:.17g}", r.error]
            )


def load_results(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != RESULTS_COLUMNS:
            raise ValueError(f"{path} is not a results file")
        return [
            RunResult(
                strategy=row[0],
                seed=int(row[1]),
                test_acc_a=float(row[2]),
                test_acc_b=float(row[3]),
                history=[],
                wall_seconds=0.0,
                error=row[4],
            )
            for row in reader
        ]


def write_summary(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow(
                [row.strategy, row.task, f"{row.mean_acc:.17g}", f"{row.std_acc:.17g}", row.n_seeds]
            )


def write_plot_data(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLOT_DATA_COLUMNS)
        for row in rows:
            writer.writerow([row.strategy, row.task, f"{row.mean_acc:.17g}", f"{row.std_acc:.17g}"])
