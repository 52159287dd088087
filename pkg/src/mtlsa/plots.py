"""Headless figure rendering for benchmark reports."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_summary_figure(rows, path, dpi=150):
    """Grouped bar chart of mean test accuracy per strategy and task.

    Error bars show the sample std over seeds. Written as PNG; output bytes
    are deterministic for fixed inputs.
    """
    strategies = sorted({row.strategy for row in rows})
    by_key = {(row.strategy, row.task): row for row in rows}
    x = np.arange(len(strategies))
    width = 0.38

    fig, ax = plt.subplots(figsize=(max(7.0, 0.95 * len(strategies)), 4.2))
    for offset, task, color in ((-width / 2, "a", "#3465a4"), (width / 2, "b", "#cc6d2e")):
        means = [by_key[(s, task)].mean_acc if (s, task) in by_key else np.nan for s in strategies]
        stds = [by_key[(s, task)].std_acc if (s, task) in by_key else 0.0 for s in strategies]
        ax.bar(x + offset, means, width, yerr=stds, capsize=3, label=f"task {task.upper()}", color=color)
    ax.set_xticks(x)
    ax.set_xticklabels(strategies, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean test accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=dpi, format="png")
    plt.close(fig)


def render_history_figure(records, path, dpi=150):
    """Accuracy and loss curves over training epochs for one run."""
    steps = np.arange(1, len(records) + 1)

    fig, (ax_acc, ax_loss) = plt.subplots(1, 2, figsize=(9.5, 3.6))
    for attr, label in (
        ("train_acc_a", "train A"),
        ("train_acc_b", "train B"),
        ("test_acc_a", "test A"),
        ("test_acc_b", "test B"),
    ):
        ys = [getattr(r, attr) for r in records]
        if any(y is not None for y in ys):
            ax_acc.plot(steps, [np.nan if y is None else y for y in ys], label=label)
    ax_acc.set_xlabel("epoch (sequential)")
    ax_acc.set_ylabel("accuracy")
    ax_acc.legend(fontsize=8)
    ax_acc.grid(True, alpha=0.3)

    ax_loss.plot(steps, [r.loss_own_task for r in records], label="own task")
    aux = [np.nan if r.loss_aux_task is None else r.loss_aux_task for r in records]
    if np.any(np.isfinite(aux)):
        ax_loss.plot(steps, aux, label="aux task")
    ax_loss.set_xlabel("epoch (sequential)")
    ax_loss.set_ylabel("loss at epoch start")
    ax_loss.legend(fontsize=8)
    ax_loss.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=dpi, format="png")
    plt.close(fig)
