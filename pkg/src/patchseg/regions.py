"""Per-region descriptor models and their pointwise error fields.

Each region carries three descriptors of increasing structure:
  * a regional mean c (piecewise-constant view),
  * a smoothed approximation g from a mask-normalized Gaussian blur
    (piecewise-smooth view),
  * an orthonormal patch basis (textured view).

Every fit returns an error field defined over the whole image so regions
can compete pointwise; coupled_error blends the smooth and patch terms
with a weight alpha.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .basis import PatchBasis
from .images import REFLECT, REPLICATE, as_image, as_mask, box_sum_sq, check_boundary, correlate

DIV_EPS = 1e-300  # guards literal 0/0 in the normalized blur
SIGMA_DEFAULT = 5.0

_GAUSS_MODE = {REFLECT: "mirror", REPLICATE: "nearest"}


@dataclass
class RegionModel:
    """Fitted descriptors for one region."""

    c: float
    g: np.ndarray
    basis: PatchBasis | None
    alpha: float
    sigma: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.basis is None and self.alpha < 1.0:
            raise ValueError("a patch basis is required unless alpha == 1")


def pc_fit(img, mask) -> tuple[float, np.ndarray]:
    """Regional mean and its squared-deviation field over the full domain."""
    img = as_image(img)
    mask = as_mask(mask, shape=img.shape)
    n = int(mask.sum())
    if n == 0:
        raise ValueError("pc_fit needs a nonempty mask")
    c = float(img[mask > 0].mean())
    err = (img - c) ** 2
    return c, err


def ps_fit(img, mask, sigma: float = SIGMA_DEFAULT, boundary: str = REFLECT) -> tuple[np.ndarray, np.ndarray]:
    """Mask-normalized Gaussian approximation g and its squared-error field.

    g = blur(img * mask) / blur(mask).  The blur kernel is widened so its
    support spans the whole image: far from the region both numerator and
    denominator shrink together and g extends smoothly as a distance-
    weighted regional average, instead of collapsing to zero once a
    truncated kernel runs out of reach.  A collapse there would inject
    spurious (I - 0)^2 error spikes that stall the contour through the
    time-step bound.
    """
    img = as_image(img)
    mask = as_mask(mask, shape=img.shape)
    check_boundary(boundary)
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if not mask.any():
        raise ValueError("ps_fit needs a nonempty mask")
    mode = _GAUSS_MODE[boundary]
    maskf = mask.astype(np.float64)
    reach = max(4.0, (max(img.shape) + 1.0) / sigma)
    num = ndimage.gaussian_filter(img * maskf, sigma, mode=mode, truncate=reach)
    den = ndimage.gaussian_filter(maskf, sigma, mode=mode, truncate=reach)
    g = num / np.maximum(den, DIV_EPS)
    return g, (img - g) ** 2


def patch_error_map(img, bas: PatchBasis, boundary: str = REFLECT) -> np.ndarray:
    """Mean squared per-pixel patch residual under the basis, at every pixel.

    Expanded into window norms minus captured components so the whole field
    costs K+1 convolution passes; clamped at zero against roundoff.
    """
    img = as_image(img)
    m = bas.side
    total = box_sum_sq(img, m, boundary)
    for k in range(bas.count):
        c = correlate(img, bas.vectors[k], boundary)
        total = total - c * c
    np.maximum(total, 0.0, out=total)
    return total / (m * m)


def coupled_error(img, model: RegionModel, boundary: str = REFLECT) -> np.ndarray:
    """alpha * smooth error + (1 - alpha) * patch error.

    The endpoints return the pure fields exactly.
    """
    img = as_image(img)
    if model.g.shape != img.shape:
        raise ValueError(f"model g shape {model.g.shape} does not match image {img.shape}")
    if model.alpha == 1.0:
        return (img - model.g) ** 2
    patch = patch_error_map(img, model.basis, boundary)
    if model.alpha == 0.0:
        return patch
    return model.alpha * (img - model.g) ** 2 + (1.0 - model.alpha) * patch


def assign_labels(err1, err2) -> np.ndarray:
    """1 where region 1 wins (err1 <= err2, ties to region 1), else 0."""
    e1 = np.asarray(err1, dtype=np.float64)
    e2 = np.asarray(err2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValueError(f"error field shapes differ: {e1.shape} vs {e2.shape}")
    return (e1 <= e2).astype(np.uint8)


def fit_region(img, mask, m: int, K: int, alpha: float, sigma: float,
               gd_cfg=None, init: PatchBasis | None = None,
               boundary: str = REFLECT) -> RegionModel:
    """Fit all descriptors of one region; the basis fit is skipped at alpha == 1."""
    from .basis import gd_solve_basis

    c, _ = pc_fit(img, mask)
    g, _ = ps_fit(img, mask, sigma, boundary)
    bas = init
    if alpha < 1.0:
        bas, _ = gd_solve_basis(img, mask, m, K, cfg=gd_cfg, init=init, boundary=boundary)
    return RegionModel(c=c, g=g, basis=bas, alpha=alpha, sigma=sigma)
