"""Synthetic texture mosaics with known ground truth.

Descriptors cover four families: oriented sinusoid gratings, square
checkerboards, oriented bandpass noise, and flat patches.  A mosaic pastes
texture B over texture A where a template mask is 1.  Per-region mean
subtraction produces "structure-only" pairs whose regions agree in mean
intensity exactly; pixel noise, when requested, is always added last.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import binary_erosion

from .images import as_mask, load_image

TEXTURE_KINDS = {
    "sinusoid": ("orientation", "frequency"),
    "checker": ("period",),
    "bandpass_noise": ("orientation", "bandwidth", "seed"),
    "flat": ("level",),
}
TEMPLATES = ("right-half", "disk")
_BANDPASS_CENTER_FREQ = 0.15  # cycles/pixel
_BANDPASS_ANGULAR_SD = 0.35   # radians


@dataclass
class TextureDescriptor:
    kind: str
    params: dict = field(default_factory=dict)
    contrast: float = 1.0

    def __post_init__(self):
        if self.kind not in TEXTURE_KINDS:
            raise ValueError(f"unknown texture kind {self.kind!r}; use one of {sorted(TEXTURE_KINDS)}")
        missing = [k for k in TEXTURE_KINDS[self.kind] if k not in self.params]
        if missing:
            raise ValueError(f"texture {self.kind!r} missing params {missing}")
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError(f"contrast must lie in (0, 1], got {self.contrast}")


@dataclass
class MosaicSpec:
    size: int
    texture_a: TextureDescriptor | str
    texture_b: TextureDescriptor | str
    template: str | np.ndarray = "right-half"
    zero_mean: bool = False
    noise_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.size < 8:
            raise ValueError(f"mosaic side must be >= 8, got {self.size}")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def texture_field(desc: TextureDescriptor | str, shape) -> np.ndarray:
    """Render one descriptor over the full grid, values centered on 0.5.

    A string is treated as an image path; the image is tiled to cover the
    grid so user-supplied texture swatches of any size work.
    """
    if isinstance(desc, str):
        tile = load_image(desc)
        reps = (-(-shape[0] // tile.shape[0]), -(-shape[1] // tile.shape[1]))
        return np.tile(tile, reps)[: shape[0], : shape[1]]
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    p = desc.params
    if desc.kind == "sinusoid":
        theta, freq = float(p["orientation"]), float(p["frequency"])
        phase = 2.0 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta))
        return 0.5 + 0.5 * desc.contrast * np.sin(phase)
    if desc.kind == "checker":
        period = int(p["period"])
        if period < 1:
            raise ValueError("checker period must be >= 1")
        cell = (xx // period + yy // period) % 2
        return 0.5 + desc.contrast * (cell - 0.5)
    if desc.kind == "bandpass_noise":
        return _bandpass_noise(desc, shape)
    if desc.kind == "flat":
        return np.full(shape, float(p["level"]))
    raise AssertionError(desc.kind)


def _bandpass_noise(desc: TextureDescriptor, shape) -> np.ndarray:
    h, w = shape
    rng = np.random.default_rng(int(desc.params["seed"]))
    white = rng.normal(size=(h, w))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    rad = np.sqrt(fx * fx + fy * fy)
    ang = np.arctan2(fy, fx)
    theta = float(desc.params["orientation"])
    bw = float(desc.params["bandwidth"])
    if bw <= 0:
        raise ValueError("bandwidth must be > 0")
    radial = np.exp(-0.5 * ((rad - _BANDPASS_CENTER_FREQ) / bw) ** 2)
    # orientation selectivity, pi-periodic since the spectrum is conjugate-symmetric
    dang = np.angle(np.exp(2j * (ang - theta))) / 2.0
    angular = np.exp(-0.5 * (dang / _BANDPASS_ANGULAR_SD) ** 2)
    spec = np.fft.fft2(white) * radial * angular
    out = np.real(np.fft.ifft2(spec))
    sd = float(out.std())
    if sd < 1e-12:
        return np.full(shape, 0.5)
    return 0.5 + (desc.contrast / 4.0) * (out - out.mean()) / sd


def template_mask(template, size: int) -> np.ndarray:
    if isinstance(template, str):
        if template == "right-half":
            mask = np.zeros((size, size), np.uint8)
            mask[:, size // 2:] = 1
            return mask
        if template == "disk":
            yy, xx = np.mgrid[0:size, 0:size]
            c = (size - 1) / 2.0
            return (((yy - c) ** 2 + (xx - c) ** 2) <= (size / 4.0) ** 2).astype(np.uint8)
        if os.path.exists(template):
            mask = (load_image(template) > 0.5).astype(np.uint8)
            if mask.shape != (size, size):
                raise ValueError(f"template shape {mask.shape} does not match size {size}")
            return mask
        raise ValueError(f"unknown template {template!r}; use one of {TEMPLATES} or a mask file path")
    mask = as_mask(template)
    if mask.shape != (size, size):
        raise ValueError(f"template shape {mask.shape} does not match size {size}")
    return mask


def make_mosaic(spec: MosaicSpec) -> tuple[np.ndarray, np.ndarray]:
    """Compose the two textures under the template; returns (image, truth).

    Truth is the template: 1 where texture B was pasted.
    """
    shape = (spec.size, spec.size)
    truth = template_mask(spec.template, spec.size)
    a = texture_field(spec.texture_a, shape)
    b = texture_field(spec.texture_b, shape)
    img = np.where(truth == 1, b, a)
    if spec.zero_mean:
        for val in (0, 1):
            sel = truth == val
            if sel.any():
                img[sel] -= img[sel].mean()
    if spec.noise_sd > 0:
        rng = np.random.default_rng(spec.seed)
        img = img + rng.normal(0.0, spec.noise_sd, shape)
    return img, truth


def make_cross_mosaic(descriptors, size: int, zero_mean: bool = False,
                      noise_sd: float = 0.0, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Five-region layout (top, bottom, left, right, center), ids 0..4."""
    if len(descriptors) != 5:
        raise ValueError(f"need exactly 5 descriptors, got {len(descriptors)}")
    s = size // 3
    labels = np.empty((size, size), np.int64)
    labels[:s, :] = 0
    labels[size - s:, :] = 1
    labels[s:size - s, :s] = 2
    labels[s:size - s, size - s:] = 3
    labels[s:size - s, s:size - s] = 4
    img = np.zeros((size, size))
    for rid, desc in enumerate(descriptors):
        sel = labels == rid
        img[sel] = texture_field(desc, (size, size))[sel]
        if zero_mean:
            img[sel] -= img[sel].mean()
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        img = img + rng.normal(0.0, noise_sd, (size, size))
    return img, labels


def region_masks(labels: np.ndarray, n: int) -> list:
    labels = np.asarray(labels)
    return [(labels == i).astype(np.uint8) for i in range(n)]


def seed_circles_mask(shape, spacing: int | None = None, radius: int | None = None) -> np.ndarray:
    """Default initial contour: a grid of small disks spanning the image.

    The default grid is dense (about 5x5 on a square image): fronts then
    start close to every part of the true boundary, which converges much
    faster and more reliably than a sparse grid whose fronts must travel
    tens of pixels.
    """
    h, w = shape
    spacing = spacing or max(8, min(h, w) // 5)
    radius = radius or max(2, spacing // 3)
    yy, xx = np.mgrid[0:h, 0:w]
    mask = np.zeros((h, w), np.uint8)
    for cy in range(spacing // 2, h, spacing):
        for cx in range(spacing // 2, w, spacing):
            mask |= (((yy - cy) ** 2 + (xx - cx) ** 2) <= radius * radius).astype(np.uint8)
    if mask.min() == mask.max():
        raise ValueError("seed circle grid degenerated to a uniform mask")
    return mask


def seed_circles_in_region(region_mask, spacing: int = 25, radius: int = 8) -> np.ndarray:
    """Grid of disks restricted to lie fully inside one region.

    Used to initialize one-vs-all subproblems: every kept disk is a pure
    sample of the region's own content, and fronts start spread across it.
    Falls back to a centered rectangle when no grid point fits.
    """
    region_mask = as_mask(region_mask)
    h, w = region_mask.shape
    yy, xx = np.mgrid[0:h, 0:w]
    interior = binary_erosion(region_mask.astype(bool),
                              np.ones((2 * radius + 1, 2 * radius + 1)))
    out = np.zeros((h, w), np.uint8)
    for cy in range(spacing // 2, h, spacing):
        for cx in range(spacing // 2, w, spacing):
            if interior[cy, cx]:
                out |= (((yy - cy) ** 2 + (xx - cx) ** 2) <= radius * radius).astype(np.uint8)
    if out.max() == 0:
        return centered_rect_mask(region_mask)
    return out


def centered_rect_mask(region_mask: np.ndarray, shrink: float = 0.5) -> np.ndarray:
    """Axis-aligned rectangle centered in the bounding box of a region mask."""
    region_mask = as_mask(region_mask)
    ys, xs = np.nonzero(region_mask)
    if ys.size == 0:
        raise ValueError("region mask is empty")
    y0, y1 = ys.min(), ys.max() + 1
    x0, x1 = xs.min(), xs.max() + 1
    cy, cx = (y0 + y1) / 2.0, (x0 + x1) / 2.0
    hh = max(2.0, (y1 - y0) * shrink / 2.0)
    hw = max(2.0, (x1 - x0) * shrink / 2.0)
    out = np.zeros_like(region_mask)
    out[int(cy - hh):int(cy + hh), int(cx - hw):int(cx + hw)] = 1
    return out
