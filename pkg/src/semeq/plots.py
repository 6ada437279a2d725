"""Figure rendering for sweep result tables.

Plots mean episode length per strategy along the sweep axis, with
2-standard-error bars.  Infinite axis values get a categorical slot at
the right edge.  Output is written to file; no interactive backend is
ever required.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import SweepRow

_AXIS_LABELS = {"snr_db": "SNR (dB)", "beta": "decoder inverse temperature"}

_STYLES = {
    "no_equalization": dict(color="tab:red", marker="x"),
    "source_grounded": dict(color="tab:blue", marker="o"),
    "target_grounded": dict(color="tab:cyan", marker="s"),
    "sm_equalized": dict(color="tab:green", marker="^"),
    "em_equalized": dict(color="tab:orange", marker="v"),
}


def _format_tick(value: float) -> str:
    if math.isinf(value):
        return "inf"
    if value == int(value):
        return str(int(value))
    return str(value)


def render_sweep_figure(rows: list[SweepRow], x_field: str, path: str,
                        title: str | None = None) -> None:
    """Render one errorbar line per strategy and save the figure to `path`."""
    if x_field not in _AXIS_LABELS:
        raise ValueError(f"unknown sweep axis {x_field!r}")
    if not rows:
        raise ValueError("no rows to plot")
    by_strategy: dict[str, list[SweepRow]] = {}
    for row in rows:
        by_strategy.setdefault(row.strategy, []).append(row)
    axis_values = []
    for row in rows:
        v = getattr(row, x_field)
        if v not in axis_values:
            axis_values.append(v)
    positions = {v: i for i, v in enumerate(axis_values)}

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for strategy, strategy_rows in by_strategy.items():
        xs = [positions[getattr(r, x_field)] for r in strategy_rows]
        means = [r.mean_length for r in strategy_rows]
        errs = [2.0 * r.stderr_length for r in strategy_rows]
        style = _STYLES.get(strategy, {})
        ax.errorbar(xs, means, yerr=errs, label=strategy, capsize=3,
                    linewidth=1.5, markersize=5, **style)
    ax.set_xticks(range(len(axis_values)))
    ax.set_xticklabels([_format_tick(v) for v in axis_values])
    ax.set_xlabel(_AXIS_LABELS[x_field])
    ax.set_ylabel("mean episode length")
    if title:
        ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    # Strip the writer's software tag so identical runs produce identical bytes.
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
