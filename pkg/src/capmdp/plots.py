"""Figure rendering for analysis reports.

All figures go straight to files (Agg backend); the CSV/JSON outputs stay
the canonical record and plotting is strictly additive.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_capacity_sweep(sweep_rows, path, title="Total expected reward vs capacity fraction"):
    """Line plot of f* over the capacity-fraction grid."""
    cs = [c for c, _ in sweep_rows]
    fs = [f for _, f in sweep_rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cs, fs, marker="o")
    ax.set_xlabel("capacity fraction c")
    ax.set_ylabel("optimal total expected reward")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_per_scenario_values(report, path, title="Per-scenario values"):
    """Bar chart of wait-and-see vs repaired values per scenario."""
    if not report.per_scenario:
        return
    idx = [d.scenario for d in report.per_scenario]
    ws = [d.wait_and_see_value for d in report.per_scenario]
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.4
    ax.bar([i - width / 2 for i in idx], ws, width, label="wait-and-see optimum")
    repaired = [d.repaired_value for d in report.per_scenario]
    if all(r == r for r in repaired):  # skip NaN column (EVPI reports)
        ax.bar([i + width / 2 for i in idx], repaired, width, label="repaired, all scenarios")
    if report.here_and_now_value is not None:
        ax.axhline(report.here_and_now_value, color="k", ls="--", lw=1, label="here-and-now optimum")
    ax.set_xlabel("scenario")
    ax.set_ylabel("total expected reward")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
