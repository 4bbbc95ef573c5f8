"""Artifact emission: label maps, basis tiles, traces, and metric tables.

Every run directory gets the same file layout so downstream tooling can
rely on the names: labels.png, bases_region<i>.png, trace.csv,
metrics.json, report.csv.
"""
from __future__ import annotations

import csv
import json
import os

import numpy as np

from .basis import basis_tile_image
from .images import save_image
from .metrics import evaluate

# distinct region colors; index 0 stays dark so two-phase maps read naturally
LABEL_PALETTE = np.array([
    [40, 40, 40],
    [230, 159, 0],
    [86, 180, 233],
    [0, 158, 115],
    [204, 121, 167],
    [240, 228, 66],
    [0, 114, 178],
    [213, 94, 0],
], np.uint8)


def labels_to_rgb(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.min() < 0:
        raise ValueError("labels must be nonnegative")
    return LABEL_PALETTE[labels % len(LABEL_PALETTE)]


def write_labels_png(path, labels) -> None:
    from PIL import Image

    Image.fromarray(labels_to_rgb(labels)).save(path)


def write_basis_tiles(outdir, models) -> list:
    """Dump bases_region<i>.png for every model that carries a basis."""
    paths = []
    for i, model in enumerate(models):
        if model is None or model.basis is None:
            continue
        tile = basis_tile_image(model.basis)
        path = os.path.join(outdir, f"bases_region{i}.png")
        save_image(path, tile)
        paths.append(path)
    return paths


def write_trace_csv(path, energy_trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["refresh_index", "energy"])
        for i, e in enumerate(energy_trace):
            w.writerow([i, repr(float(e))])


def write_metrics_json(path, metrics: dict) -> None:
    with open(path, "w") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report_csv(path, rows) -> None:
    """One row per run; the header is the union of keys in first-seen order."""
    rows = list(rows)
    if not rows:
        raise ValueError("report needs at least one row")
    cols = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)


def run_metrics(result, truth=None, n_regions: int = 2) -> dict:
    """Flatten a segmentation result (plus optional truth) into plain JSON types."""
    out = {
        "steps": int(result.steps_used),
        "wall_time_per_iteration": float(result.wall_time_per_step),
        "n_warnings": len(result.warnings),
        "final_energy": float(result.energy_trace[-1]) if result.energy_trace else None,
    }
    if truth is not None:
        scored = evaluate(result.labels, truth, n_regions=n_regions)
        out["error_rate_per_region"] = [float(r) for r in scored["error_rate_per_region"]]
        out["total_error"] = float(scored["total_error"])
        if "error_rate" in scored:
            out["error_rate"] = float(scored["error_rate"])
    return out


def write_run_artifacts(outdir, result, truth=None, n_regions: int = 2,
                        extra: dict | None = None) -> dict:
    """Emit the standard artifact set for one run; returns the metrics dict."""
    os.makedirs(outdir, exist_ok=True)
    write_labels_png(os.path.join(outdir, "labels.png"), result.labels)
    write_basis_tiles(outdir, result.models)
    write_trace_csv(os.path.join(outdir, "trace.csv"), result.energy_trace)
    metrics = run_metrics(result, truth, n_regions=n_regions)
    if extra:
        metrics.update(extra)
    write_metrics_json(os.path.join(outdir, "metrics.json"), metrics)
    row = {k: v for k, v in metrics.items() if not isinstance(v, (list, dict))}
    write_report_csv(os.path.join(outdir, "report.csv"), [row])
    return metrics
