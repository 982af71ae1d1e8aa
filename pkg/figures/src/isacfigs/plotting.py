"""Render sweep CSVs and design artifacts into deterministic figures.

Sweep figures follow the journal convention: solid lines for the root-BCRB,
dashed lines for the RMSE, one color/marker per strategy, log-scale y axis.
Design artifacts (JSON with an iteration trace) render as convergence plots.
SVG output is byte-stable: a fixed hash salt and empty date metadata make
re-runs produce identical files.
"""

import csv
import json
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "isacfigs"

import matplotlib.pyplot as plt

EXPECTED_COLUMNS = ["strategy", "param", "value", "root_bcrb_deg",
                    "rmse_deg", "trials", "seed"]

STYLES = {
    "prop": {"color": "tab:red", "marker": "o", "label": "Prop."},
    "even": {"color": "tab:blue", "marker": "s", "label": "Even"},
    "heu": {"color": "tab:green", "marker": "^", "label": "Heu."},
}

X_LABELS = {
    "power": "Transmit power P (dB)",
    "num_users": "Number of users K",
    "prior_std": "Prior DOA standard deviation (deg)",
    "target1_doa": "Target 1 DOA (deg)",
    "si_strength": "SI power ratio (dB)",
    "angular_spread": "Angular spread (deg)",
}


class SchemaError(ValueError):
    """A CSV does not match the sweep-results contract."""


def read_sweep_csv(path):
    """Parse one results CSV; returns (param, rows) with numeric fields.

    Rows with empty metric fields (failed sweep points) are skipped; a CSV
    with no usable rows is an error.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXPECTED_COLUMNS:
            missing = set(EXPECTED_COLUMNS) - set(reader.fieldnames or [])
            bad = ", ".join(sorted(missing)) if missing else \
                ", ".join(reader.fieldnames or [])
            raise SchemaError(f"{path}: unexpected columns ({bad})")
        rows = []
        param = None
        for raw in reader:
            param = raw["param"]
            if not raw["root_bcrb_deg"] or not raw["rmse_deg"]:
                continue
            rows.append({
                "strategy": raw["strategy"],
                "value": float(raw["value"]),
                "root_bcrb_deg": float(raw["root_bcrb_deg"]),
                "rmse_deg": float(raw["rmse_deg"]),
            })
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return param, rows


def sweep_series(rows_by_strategy):
    """Styled series for one sweep figure: solid root-BCRB plus dashed RMSE
    per strategy, in a fixed strategy order."""
    out = []
    for strategy in ("prop", "even", "heu"):
        rows = sorted(rows_by_strategy.get(strategy, []),
                      key=lambda r: r["value"])
        if not rows:
            continue
        style = STYLES[strategy]
        x = [r["value"] for r in rows]
        out.append({"x": x, "y": [r["root_bcrb_deg"] for r in rows],
                    "linestyle": "-", "color": style["color"],
                    "marker": style["marker"], "fillstyle": "full",
                    "label": f"{style['label']} root-BCRB"})
        out.append({"x": x, "y": [r["rmse_deg"] for r in rows],
                    "linestyle": "--", "color": style["color"],
                    "marker": style["marker"], "fillstyle": "none",
                    "label": f"{style['label']} RMSE"})
    return out


def plot_sweep(csv_paths, out_path):
    """One figure per sweep: solid root-BCRB and dashed RMSE per strategy."""
    series = defaultdict(list)
    param = None
    for path in csv_paths:
        p, rows = read_sweep_csv(path)
        param = param or p
        for row in rows:
            series[row["strategy"]].append(row)

    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    for s in sweep_series(series):
        ax.plot(s.pop("x"), s.pop("y"), **s)
    ax.set_yscale("log")
    ax.set_xlabel(X_LABELS.get(param, param or "value"))
    ax.set_ylabel("Root-BCRB / RMSE (deg)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def plot_trace(artifact_path, out_path):
    """Objective-versus-iteration convergence figure from a design artifact."""
    with open(artifact_path) as fh:
        artifact = json.load(fh)
    trace = artifact.get("trace", [])
    if not trace:
        raise SchemaError(f"{artifact_path}: no iteration trace")
    its = [row["iteration"] for row in trace]
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    ax.plot(its, [row["objective"] for row in trace], "-o", color="tab:red",
            label="Penalized objective")
    ax.plot(its, [row["bcrb"] for row in trace], "--s", color="tab:blue",
            fillstyle="none", label="Weighted BCRB (deg$^2$)")
    ax.set_xlabel("Iteration")
    ax.set_ylabel("Objective value")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def _save(fig, out_path):
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    fmt = os.path.splitext(out_path)[1].lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(out_path, format=fmt, metadata=metadata)
    plt.close(fig)


def render_directory(in_dir, out_dir, fmt="svg"):
    """Render every sweep (grouped by parameter) and design artifact found."""
    groups = defaultdict(list)
    artifacts = []
    for name in sorted(os.listdir(in_dir)):
        path = os.path.join(in_dir, name)
        if name.endswith(".csv"):
            param = name.rsplit("_", 1)[0]
            groups[param].append(path)
        elif name.endswith(".json") and name.startswith("design"):
            artifacts.append(path)
    if not groups and not artifacts:
        raise SchemaError(f"no sweep CSVs or design artifacts in {in_dir}")
    written = []
    for param, paths in sorted(groups.items()):
        out = os.path.join(out_dir, f"{param}.{fmt}")
        written.append(plot_sweep(paths, out))
    for path in artifacts:
        with open(path) as fh:
            if not json.load(fh).get("trace"):
                continue        # fixed-partition designs carry no trace
        stem = os.path.splitext(os.path.basename(path))[0]
        out = os.path.join(out_dir, f"{stem}_trace.{fmt}")
        written.append(plot_trace(path, out))
    return written
