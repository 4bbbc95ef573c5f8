"""Benchmarks: gradient-descent basis vs the dense eigen oracle, and the
coupling-weight sweep over mosaic pairs.
"""
from __future__ import annotations

import csv
import time

import numpy as np

from .basis import GDConfig, gd_solve_basis, projection_energy, svd_solve_basis
from .images import as_image, box_sum_sq
from .metrics import evaluate
from .mosaic import make_mosaic, seed_circles_mask
from .segment import SegmentationConfig, segment_two_phase


def _full_mask(img):
    return np.ones(img.shape, np.uint8)


def run_benchmark_gd_vs_svd(images, m: int, K_range=range(1, 21),
                            gd_cfg: GDConfig | None = None) -> dict:
    """Reconstruction-error table for both solvers on each image.

    Per-patch average errors are normalized per image by that image's worst
    cell, so the worst reconstruction maps to exactly 1.0 and the table is
    scale-free.  Returns rows plus the largest normalized GD-minus-oracle
    gap and the per-image wall times.
    """
    K_list = sorted(set(int(k) for k in K_range))
    if not K_list:
        raise ValueError("K_range is empty")
    if K_list[0] < 1 or K_list[-1] > m * m:
        raise ValueError(f"K_range must lie within [1, {m * m}]")
    rows = []
    wall_times = []
    for idx, img in enumerate(images):
        img = as_image(img)
        mask = _full_mask(img)
        n_patches = img.size
        t0 = time.perf_counter()
        _, eigvals = svd_solve_basis(img, mask, m, m * m)
        total = float(box_sum_sq(img, m).sum())
        img_rows = []
        for K in K_list:
            gd_basis, _ = gd_solve_basis(img, mask, m, K, cfg=gd_cfg)
            proj_gd = projection_energy(img, mask, gd_basis)
            proj_oracle = float(np.sum(eigvals[:K]))
            img_rows.append({
                "image": idx,
                "K": K,
                "err_gd": (total - proj_gd) / n_patches,
                "err_oracle": (total - proj_oracle) / n_patches,
                "proj_gd": proj_gd,
                "proj_oracle": proj_oracle,
            })
        worst = max(max(r["err_gd"], r["err_oracle"]) for r in img_rows)
        scale = worst if worst > 0 else 1.0
        for r in img_rows:
            r["err_gd_norm"] = r["err_gd"] / scale
            r["err_oracle_norm"] = r["err_oracle"] / scale
            r["gap_norm"] = r["err_gd_norm"] - r["err_oracle_norm"]
        rows.extend(img_rows)
        wall_times.append(time.perf_counter() - t0)
    return {
        "rows": rows,
        "max_gap_norm": max(r["gap_norm"] for r in rows),
        "wall_time_per_image": wall_times,
        "m": m,
        "K_list": K_list,
    }


def write_benchmark_csv(path, report: dict) -> None:
    cols = ["image", "K", "err_gd", "err_oracle", "err_gd_norm",
            "err_oracle_norm", "gap_norm", "proj_gd", "proj_oracle"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        w.writeheader()
        w.writerows(report["rows"])


def run_alpha_sweep(specs, alphas, cfg: SegmentationConfig | None = None,
                    spacing: int | None = None) -> dict:
    """Segment every mosaic at every coupling weight; returns the error table."""
    base = cfg or SegmentationConfig()
    alphas = [float(a) for a in alphas]
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {a}")
    rows = []
    for sidx, spec in enumerate(specs):
        img, truth = make_mosaic(spec)
        init = seed_circles_mask(img.shape, spacing=spacing)
        for a in alphas:
            run_cfg = SegmentationConfig(**{**base.to_dict(), "alpha": a})
            res = segment_two_phase(img, init, run_cfg)
            rows.append({
                "spec": sidx,
                "alpha": a,
                "error_rate": evaluate(res.labels, truth)["error_rate"],
                "steps": res.steps_used,
            })
    means = {a: float(np.mean([r["error_rate"] for r in rows if r["alpha"] == a]))
             for a in alphas}
    return {"rows": rows, "mean_by_alpha": means}


def write_sweep_csv(path, report: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["spec", "alpha", "error_rate", "steps"])
        w.writeheader()
        w.writerows(report["rows"])
