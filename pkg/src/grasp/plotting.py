"""Figure rendering (SVG via matplotlib) and CSV aggregation helpers."""

import csv
import os
import warnings

import matplotlib

matplotlib.use("Agg")
# Keep text as <text> elements so SVGs stay searchable and diffable.
matplotlib.rcParams["svg.fonttype"] = "none"
import matplotlib.pyplot as plt
import numpy as np

HEAD_COLORS = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def head_color(k):
    return HEAD_COLORS[k % len(HEAD_COLORS)]


def read_metrics_csv(path):
    """-> (fieldnames, dict column -> float array)."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return header, {name: data[:, i] for i, name in enumerate(header)}


def aggregate_runs(csv_paths):
    """Mean and standard error across seeds, aligned on the shortest run.

    -> (steps, {metric: (mean, stderr)})
    """
    headers = []
    frames = []
    for p in csv_paths:
        header, cols = read_metrics_csv(p)
        headers.append(tuple(header))
        frames.append(cols)
    if len(set(headers)) != 1:
        raise ValueError("metric CSVs do not share a schema")
    n = min(len(f["step"]) for f in frames)
    steps = frames[0]["step"][:n]
    out = {}
    for name in headers[0]:
        if name == "step":
            continue
        stackd = np.stack([f[name][:n] for f in frames])
        with warnings.catch_warnings():
            # all-NaN columns (e.g. eval metrics before the first eval) are fine
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(stackd, axis=0)
            if len(frames) > 1:
                stderr = np.nanstd(stackd, axis=0, ddof=1) / np.sqrt(len(frames))
            else:
                stderr = np.zeros_like(mean)
        out[name] = (mean, stderr)
    return steps, out


def write_aggregate_csv(path, steps, metrics):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        names = sorted(metrics)
        w.writerow(["step"] + [f"{n}_mean" for n in names] + [f"{n}_stderr" for n in names])
        for i, s in enumerate(steps):
            row = [("%.10g" % s)]
            row += ["%.10g" % metrics[n][0][i] for n in names]
            row += ["%.10g" % metrics[n][1][i] for n in names]
            w.writerow(row)


def plot_learning_curves(groups, out_dir):
    """groups: {agent label: [per-seed csv paths]}; one SVG per metric."""
    os.makedirs(out_dir, exist_ok=True)
    aggregated = {label: aggregate_runs(paths) for label, paths in groups.items()}
    first = next(iter(aggregated.values()))
    metric_names = list(first[1].keys())
    written = []
    for metric in metric_names:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        for i, (label, (steps, metrics)) in enumerate(aggregated.items()):
            mean, stderr = metrics[metric]
            color = head_color(i)
            ax.plot(steps, mean, color=color, label=label)
            ax.fill_between(steps, mean - stderr, mean + stderr,
                            color=color, alpha=0.25, linewidth=0)
        ax.set_xlabel("environment steps")
        ax.set_ylabel(metric)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{metric}.svg")
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def plot_switch_histograms(deltas, out_dir, bins=30):
    """deltas: (K, n) per-head return differences; one SVG per head."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for k, d in enumerate(deltas):
        fig, ax = plt.subplots(figsize=(4, 3))
        ax.hist(d, bins=bins, color=head_color(k), alpha=0.8)
        ax.axvline(0.0, color="black", linewidth=1)
        ax.set_xlabel(f"return difference (planner - head {k})")
        ax.set_ylabel("count")
        fig.tight_layout()
        path = os.path.join(out_dir, f"switch_head{k}.svg")
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written


def plot_trajectories(trajectories, objects, out_path, extent=(0.0, 1.0)):
    """trajectories: list of (head index, array of (x, y) points)."""
    fig, ax = plt.subplots(figsize=(4, 4))
    for head, pts in trajectories:
        pts = np.asarray(pts)
        ax.plot(pts[:, 0], pts[:, 1], color=head_color(head), alpha=0.7, linewidth=1.2)
        ax.plot(pts[0, 0], pts[0, 1], marker="o", color=head_color(head), markersize=3)
    if objects is not None:
        for j, (x, y) in enumerate(objects):
            ax.plot(x, y, marker="*", color="black", markersize=12)
            ax.annotate("ABC"[j % 3], (x, y), textcoords="offset points", xytext=(5, 5))
    ax.set_xlim(*extent)
    ax.set_ylim(*extent)
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
