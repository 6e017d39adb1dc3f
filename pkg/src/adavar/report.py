"""Render figures from emitted result CSVs.

Separate entry point (``adavar-report``) so the core CLI stays free of
plotting: point it at one or more output directories produced by ``adavar``
and it writes a PNG next to each delimited file it recognises
(curve_*.csv, histogram.csv, trace.csv).
"""

from __future__ import annotations

import argparse
import os
import sys

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import read_curve_csv, read_histogram_csv
from .solver import read_trace_csv

__all__ = ["render_directory", "main"]


def _plot_curves(paths, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in paths:
        data = read_curve_csv(path)
        label = os.path.splitext(os.path.basename(path))[0].replace("curve_", "")
        ax.semilogy(data["checkpoint"], np.maximum(data["failure_fraction"], 1e-4),
                    marker="o", label=label)
        ax.fill_between(data["checkpoint"], np.maximum(data["wilson_lo"], 1e-4),
                        np.maximum(data["wilson_hi"], 1e-4), alpha=0.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("failure fraction")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _plot_histogram(path, out_path):
    data = read_histogram_csv(path)
    centers = 0.5 * (data["bin_lo"] + data["bin_hi"])
    widths = data["bin_hi"] - data["bin_lo"]
    density = np.where(widths > 0, data["mass"] / widths, 0.0)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(centers, density, width=widths, align="center", edgecolor="none")
    ax.set_xlabel("position")
    ax.set_ylabel("occupation density")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _plot_trace(path, out_path):
    data = read_trace_csv(path)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    n = data["n"]
    with np.errstate(invalid="ignore"):
        axes[0, 0].semilogy(n, np.maximum(data["f_value"], 1e-16))
        axes[0, 0].set_title("objective value")
        axes[0, 1].semilogy(n, np.maximum(data["sigma_used"], 1e-16))
        axes[0, 1].set_title("noise level")
        axes[1, 0].semilogy(n, np.maximum(data["best_f"], 1e-16))
        axes[1, 0].set_title("best so far")
        axes[1, 1].semilogy(n, np.maximum(data["cutoff"], 1e-16))
        axes[1, 1].set_title("cutoff")
    for ax in axes.flat:
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_directory(directory: str) -> list[str]:
    """Render every recognised CSV in a directory; returns written PNG paths."""
    written = []
    entries = sorted(os.listdir(directory))
    curves = [os.path.join(directory, e) for e in entries
              if e.startswith("curve") and e.endswith(".csv")]
    if curves:
        out = os.path.join(directory, "curves.png")
        _plot_curves(curves, out)
        written.append(out)
    for entry in entries:
        path = os.path.join(directory, entry)
        if entry == "histogram.csv":
            out = os.path.join(directory, "histogram.png")
            _plot_histogram(path, out)
            written.append(out)
        elif entry == "trace.csv":
            out = os.path.join(directory, "trace.png")
            _plot_trace(path, out)
            written.append(out)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adavar-report",
                                     description="Render figures from adavar output directories")
    parser.add_argument("directories", nargs="+", help="output directories to render")
    args = parser.parse_args(argv)
    status = 0
    for directory in args.directories:
        if not os.path.isdir(directory):
            print(f"error: not a directory: {directory}", file=sys.stderr)
            status = 1
            continue
        written = render_directory(directory)
        if not written:
            print(f"{directory}: nothing to render")
        for path in written:
            print(path)
    return status


if __name__ == "__main__":
    sys.exit(main())
