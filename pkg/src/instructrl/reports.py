"""Report files: CSV is the contract, SVG figures are convenience views.

Every analysis writes a delimited file with the underlying numbers next to
the rendered figure of the same stem.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import ActionMatrix, EvalReport, SweepPoint, render_grid_text


def _ensure_dir(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def write_csv(path: str, header, rows) -> None:
    _ensure_dir(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_eval_report(report: EvalReport, path: str) -> None:
    write_csv(
        path,
        ["method_id", "n_games", "mean_score", "stderr", "games_lost"],
        [[report.method_id, report.n_games, f"{report.mean_score:.6f}",
          f"{report.stderr:.6f}", report.games_lost]],
    )
    scores_path = path.replace(".csv", "_scores.csv")
    write_csv(scores_path, ["game", "score"], list(enumerate(report.scores)))


def write_action_matrix(matrix: ActionMatrix, path: str, title: str = "") -> None:
    rows = [[rl] + [f"{matrix.matrix[i, j]:.6f}" for j in range(len(matrix.col_labels))]
            for i, rl in enumerate(matrix.row_labels)]
    write_csv(path, ["row\\col"] + list(matrix.col_labels), rows)

    fig, ax = plt.subplots(figsize=(max(4, 0.4 * len(matrix.col_labels)),
                                    max(3.2, 0.4 * len(matrix.row_labels))))
    im = ax.imshow(matrix.matrix, cmap="viridis")
    ax.set_xticks(range(len(matrix.col_labels)), matrix.col_labels, fontsize=7, rotation=90)
    ax.set_yticks(range(len(matrix.row_labels)), matrix.row_labels, fontsize=7)
    ax.set_xlabel("response at t+1")
    ax.set_ylabel("action at t")
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".svg"))
    plt.close(fig)


def write_policy_grid(grid: np.ndarray, path: str) -> None:
    labels = ["none", "1", "2", "3", "4", "5"]
    rows = [[labels[a2]] + ["quit" if grid[a2, a1] == 0 else str(int(grid[a2, a1]))
                            for a1 in range(6)] for a2 in range(6)]
    write_csv(path, ["two_ago\\one_ago"] + labels, rows)
    with open(path.replace(".csv", ".txt"), "w") as fh:
        fh.write(render_grid_text(grid) + "\n")


def write_sweep(points: list[SweepPoint], path: str, x_label: str,
                extra_series: tuple[str, ...] = ()) -> None:
    header = ["x", "mean_score", "stderr", *extra_series]
    rows = [[p.x, f"{p.mean_score:.6f}", f"{p.stderr:.6f}",
             *[f"{p.extra.get(k, float('nan')):.6f}" for k in extra_series]] for p in points]
    write_csv(path, header, rows)

    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    xs = [p.x for p in points]
    means = np.array([p.mean_score for p in points])
    errs = np.array([p.stderr for p in points])
    ax.plot(xs, means, marker="o", label="self-play" if extra_series else "score")
    ax.fill_between(xs, means - errs, means + errs, alpha=0.25)
    if "cross_mean" in extra_series:
        cross = np.array([p.extra.get("cross_mean", np.nan) for p in points])
        cerr = np.array([p.extra.get("cross_stderr", 0.0) for p in points])
        ax.plot(xs, cross, marker="s", label="cross-play")
        ax.fill_between(xs, cross - cerr, cross + cerr, alpha=0.25)
        ax.legend(fontsize=8)
    ax.set_xlabel(x_label)
    ax.set_ylabel("score")
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".svg"))
    plt.close(fig)


def write_training_curve(curve: list[dict], path: str) -> None:
    if not curve:
        return
    keys = list(curve[0].keys())
    write_csv(path, keys, [[row.get(k) for k in keys] for row in curve])
    metric = "mean_return" if "mean_return" in keys else "mean_score"
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot([row["update"] for row in curve], [row[metric] for row in curve], lw=0.9)
    ax.set_xlabel("update")
    ax.set_ylabel(metric)
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".svg"))
    plt.close(fig)


def write_knowledge_report(fractions: dict[str, float], path: str) -> None:
    write_csv(path, list(fractions.keys()), [[f"{v:.6f}" for v in fractions.values()]])
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.bar(list(fractions.keys()), list(fractions.values()))
    ax.set_ylabel("fraction of plays")
    ax.set_ylim(0, 1)
    fig.tight_layout()
    fig.savefig(path.replace(".csv", ".svg"))
    plt.close(fig)
