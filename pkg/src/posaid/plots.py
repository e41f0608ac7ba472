"""Static figures rendered from experiment CSV files (no extra computation)."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

# x column, y column, series key(s), axis labels
_LAYOUT = {
    "sweep_velocity": ("velocity", "throughput", ("scheme",), "velocity (m/s)"),
    "sweep_antennas": ("M", "throughput", ("scheme",), "transmit antennas M"),
    "sweep_groups": ("Mg", "dof_empirical", (), "groups Mg"),
    "sweep_snr": ("snr_db", "throughput", ("scheme", "L0"), "SNR (dB)"),
    "sweep_L0": ("velocity", "throughput", ("scheme", "L0"), "velocity (m/s)"),
}


def plot_csv(experiment: str, csv_path, png_path):
    """Render one summary plot; returns the image path, or None if the experiment has no plot."""
    if experiment not in _LAYOUT:
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xcol, ycol, keys, xlabel = _LAYOUT[experiment]
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    series = defaultdict(list)
    for r in rows:
        label = ", ".join(f"{k}={r[k]}" if k != "scheme" else r[k] for k in keys) or ycol
        series[label].append((float(r[xcol]), float(r[ycol])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=label)
    if experiment == "sweep_groups":
        pts = sorted((float(r[xcol]), float(r["dof_analytic"])) for r in rows)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "k--", label="analytic")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("DoF" if ycol == "dof_empirical" else "throughput (bits/channel use)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    png_path = Path(png_path)
    fig.savefig(png_path, dpi=100)
    plt.close(fig)
    return png_path
