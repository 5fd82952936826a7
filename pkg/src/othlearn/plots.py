"""Figure rendering for the report-producing CLI paths.

Every report that writes a CSV also gets a PNG next to it; the figures
are plain matplotlib so they render identically on headless machines.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_curve_plot(xs, ys, path, xlabel: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, ys, color="tab:blue")
    ax.axhline(0.5, color="grey", lw=0.8, ls="--")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("winning probability")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bucket_plot(buckets, path) -> None:
    """Stacked win/draw/loss counts per disc-count bucket."""
    labels = [f"{b.lo}-{b.hi}" for b in buckets.buckets]
    wins = [b.wins for b in buckets.buckets]
    draws = [b.draws for b in buckets.buckets]
    losses = [b.losses for b in buckets.buckets]
    xs = range(len(labels))
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.bar(xs, wins, label="wins", color="tab:green")
    ax.bar(xs, draws, bottom=wins, label="draws", color="tab:grey")
    bottom = [w + d for w, d in zip(wins, draws)]
    ax.bar(xs, losses, bottom=bottom, label="losses", color="tab:red")
    ax.set_xticks(list(xs), labels, rotation=45, ha="right")
    ax.set_xlabel("discs on the board")
    ax.set_ylabel("training examples")
    ax.set_title("per-bucket label balance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_tournament_plot(report, path) -> None:
    """Winning percentage per pairing, significance starred."""
    names = [r.pairing for r in report.rows]
    pcts = [float(r.win_pct.rstrip("%")) for r in report.rows]
    marks = ["*" if r.significant else "" for r in report.rows]
    xs = range(len(names))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(names)), 4.0))
    ax.bar(xs, pcts, color="tab:blue")
    ax.axhline(50.0, color="grey", lw=0.8, ls="--")
    for x, pct, mark in zip(xs, pcts, marks):
        ax.annotate(
            f"{pct:.1f}{mark}", (x, pct), ha="center", va="bottom", fontsize=9
        )
    ax.set_xticks(list(xs), names, rotation=20, ha="right")
    ax.set_ylabel("winning percentage for the first engine")
    ax.set_ylim(0, 100)
    ax.set_title("paired-game tournament (* significant)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
