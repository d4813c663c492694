"""Static figure rendering for the back-test report path.

Figures are written next to the delimited outputs; rendering is headless
(Agg backend) and has no interactive component.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_backtest_figure(records, out_path) -> None:
    """Realised prices with predicted prices and band, over target time."""
    ok = [r for r in records if not r.skipped]
    fig, ax = plt.subplots(figsize=(10.0, 5.0))
    if ok:
        t = np.array([r.target_time_s for r in ok])
        realized = np.array([r.realized_price for r in ok])
        predicted = np.array([r.p0 * math.exp(r.predicted_log_return) for r in ok])
        lower = np.array([r.p0 * math.exp(r.lower) for r in ok])
        upper = np.array([r.p0 * math.exp(r.upper) for r in ok])
        ax.fill_between(t, lower, upper, color="tab:blue", alpha=0.2, label="band")
        ax.plot(t, realized, lw=0.8, color="black", label="realized")
        ax.plot(t, predicted, lw=0.8, color="tab:red", label="predicted")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("price")
    ax.set_title("Back-test: realized vs predicted prices")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_delta_trace_figure(trace, out_path) -> None:
    """Per-window fitted tick size over target time."""
    fig, ax = plt.subplots(figsize=(10.0, 3.5))
    trace = np.asarray(trace)
    if trace.size:
        ax.plot(trace[:, 0], trace[:, 1], ".", ms=2.0, color="tab:blue")
        ax.set_yscale("log")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("fitted tick size")
    ax.set_title("Per-window tick-size estimates")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
