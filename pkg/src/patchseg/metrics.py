"""Segmentation quality measures.

Two-phase label maps are scored up to the label permutation (a contour
does not know which side is "texture A"), reporting the fraction of
mislabeled pixels.  Multi-region maps have fixed ids, and the headline
number is the sum of the per-region miss rates.
"""
from __future__ import annotations

import numpy as np


def _check_pair(labels, truth):
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if labels.shape != truth.shape:
        raise ValueError(f"label shape {labels.shape} does not match truth {truth.shape}")
    return labels, truth


def error_rate_two_phase(labels, truth) -> float:
    """Mislabeled fraction under the better of the two label pairings."""
    labels, truth = _check_pair(labels, truth)
    direct = float(np.mean((labels != 0) != (truth != 0)))
    return min(direct, 1.0 - direct)


def per_region_error_rates(labels, truth, n_regions: int) -> list:
    """Miss rate inside each truth region: fraction of its pixels labeled otherwise."""
    labels, truth = _check_pair(labels, truth)
    rates = []
    for rid in range(n_regions):
        sel = truth == rid
        if not sel.any():
            raise ValueError(f"truth contains no pixels of region {rid}")
        rates.append(float(np.mean(labels[sel] != rid)))
    return rates


def evaluate(labels, truth, n_regions: int = 2) -> dict:
    """Score a label map; two-phase results are permutation-minimized."""
    labels, truth = _check_pair(labels, truth)
    if n_regions < 2:
        raise ValueError("n_regions must be >= 2")
    if n_regions == 2:
        lab = (labels != 0).astype(np.uint8)
        tru = (truth != 0).astype(np.uint8)
        direct = float(np.mean(lab != tru))
        if direct <= 1.0 - direct:
            best = lab
        else:
            best = 1 - lab
        rates = per_region_error_rates(best, tru, 2)
        return {
            "mode": "two-phase",
            "error_rate": min(direct, 1.0 - direct),
            "error_rate_per_region": rates,
            "total_error": min(direct, 1.0 - direct),
        }
    rates = per_region_error_rates(labels, truth, n_regions)
    return {
        "mode": "multi",
        "error_rate_per_region": rates,
        "total_error": float(sum(rates)),
    }
