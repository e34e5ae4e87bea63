"""Figures and summary tables for completed solve runs.

Consumes the files cmd_solve leaves in its output directory (report.json,
history.csv, u.csv) and renders convergence and distribution figures next
to a flat summary CSV, so a run can be inspected without re-running it.
"""

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import UsageError
from .io import save_table_csv

__all__ = ["load_run", "render_report"]


def load_run(run_dir):
    """Read report.json, history.csv and u.csv written by a solve command."""
    if not os.path.isdir(run_dir):
        raise UsageError("run directory %r does not exist" % (run_dir,))
    report_path = os.path.join(run_dir, "report.json")
    if not os.path.isfile(report_path):
        raise UsageError("no report.json under %r; run the solve command first" % (run_dir,))
    with open(report_path) as fh:
        report = json.load(fh)

    def read_csv(name, columns):
        path = os.path.join(run_dir, name)
        if not os.path.isfile(path):
            raise UsageError("missing %s under %r" % (name, run_dir))
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != list(columns):
            raise UsageError("%s does not look like solve output (header %r)" % (name, rows[:1]))
        return np.array([[float(x) for x in row] for row in rows[1:]], dtype=np.float64)

    history = read_csv("history.csv", ("iteration", "residual", "energy"))
    u = read_csv("u.csv", ("vertex", "u"))
    return report, history, u


def render_report(run_dir, out_dir):
    """Render figures and a summary table for one run; returns written paths."""
    report, history, u = load_run(run_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    steps = history[:, 0]
    # the residual hits exact zero on already-converged problems
    ax.semilogy(steps, np.maximum(history[:, 1], 1e-300), "o-", color="tab:blue",
                label="gradient norm")
    ax.set_xlabel("Newton step")
    ax.set_ylabel("gradient norm", color="tab:blue")
    ax.grid(True, which="both", alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(steps, history[:, 2], "s--", color="tab:red", label="energy")
    ax2.set_ylabel("energy", color="tab:red")
    ax.set_title("Newton convergence")
    fig.tight_layout()
    path = os.path.join(out_dir, "convergence.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(u[:, 1], bins=40, color="tab:blue", alpha=0.85)
    ax.set_xlabel("conformal factor u")
    ax.set_ylabel("vertices")
    ax.set_title("Solution distribution")
    fig.tight_layout()
    path = os.path.join(out_dir, "distribution.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    rows = []

    def flatten(prefix, obj):
        if isinstance(obj, dict):
            for key in sorted(obj):
                flatten(prefix + key + "." if isinstance(obj[key], dict) else prefix + key, obj[key])
        elif not isinstance(obj, (list, tuple)):
            rows.append((prefix, obj if isinstance(obj, float) else str(obj)))

    flatten("", report)
    path = os.path.join(out_dir, "summary.csv")
    save_table_csv(path, ("key", "value"), rows)
    written.append(path)
    return written
