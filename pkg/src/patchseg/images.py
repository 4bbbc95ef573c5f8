"""Image grids and patch primitives.

Images are 2-D float64 arrays indexed [row, col] = [y, x].  A patch is an
odd-sided square window of offsets; a pixel belongs to the patch whose
center it is.  Out-of-range samples are synthesized by a boundary policy:
"reflect" mirrors across the edge without repeating the edge pixel,
"replicate" clamps to the nearest edge pixel.

File I/O covers 8-bit grayscale PNG and binary PGM (P5); intensities map
to [0, 1] on load and back to 0..255 on save.
"""
from __future__ import annotations

import os

import numpy as np
from PIL import Image

from . import kernels

REFLECT = "reflect"
REPLICATE = "replicate"
BOUNDARY_MODES = (REFLECT, REPLICATE)

_NP_PAD_MODE = {REFLECT: "reflect", REPLICATE: "edge"}


def as_image(arr) -> np.ndarray:
    """Validate and convert to a 2-D float64 array with finite entries."""
    img = np.asarray(arr, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected a 2-D image, got shape {np.shape(arr)}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite values")
    return img


def as_mask(arr, shape=None) -> np.ndarray:
    """Validate and convert to a uint8 array of {0, 1}."""
    mask = np.asarray(arr)
    if mask.ndim != 2:
        raise ValueError(f"expected a 2-D mask, got shape {np.shape(arr)}")
    if shape is not None and mask.shape != tuple(shape):
        raise ValueError(f"mask shape {mask.shape} does not match {tuple(shape)}")
    if mask.dtype == bool:
        return mask.astype(np.uint8)
    vals = np.unique(mask)
    if not np.all(np.isin(vals, (0, 1))):
        raise ValueError("mask values must be 0 or 1")
    return mask.astype(np.uint8)


def check_boundary(boundary: str) -> str:
    if boundary not in BOUNDARY_MODES:
        raise ValueError(f"unknown boundary policy {boundary!r}; use one of {BOUNDARY_MODES}")
    return boundary


def check_patch_side(m: int) -> int:
    if m < 1 or m % 2 == 0:
        raise ValueError(f"patch side must be odd and >= 1, got {m}")
    return int(m)


def pad_image(img: np.ndarray, r: int, boundary: str = REFLECT) -> np.ndarray:
    """Pad by r pixels on every side under the given boundary policy."""
    check_boundary(boundary)
    if r == 0:
        return np.asarray(img, dtype=np.float64)
    return np.pad(np.asarray(img, dtype=np.float64), r, mode=_NP_PAD_MODE[boundary])


def extract_patch(img, x: int, y: int, m: int, boundary: str = REFLECT) -> np.ndarray:
    """m-by-m window centered at pixel (x, y); x is the column index."""
    img = as_image(img)
    check_patch_side(m)
    h, w = img.shape
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"center ({x}, {y}) outside image of shape {img.shape}")
    r = m // 2
    padded = pad_image(img, r, boundary)
    return padded[y:y + m, x:x + m].copy()


def patch_dot(a, b) -> float:
    """Inner product of two patches of identical shape."""
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    if pa.shape != pb.shape:
        raise ValueError(f"patch shapes differ: {pa.shape} vs {pb.shape}")
    return float(np.einsum("ij,ij->", pa, pb))


def correlate(img, kern, boundary: str = REFLECT) -> np.ndarray:
    """Cross-correlation with a patch template, output on the input grid.

    out[y, x] = sum_{u,v in [-r, r]} img(x+v, y+u) * kern[u+r, v+r], with
    out-of-range image samples produced by the boundary policy.  No kernel
    flip, so correlate(img, k)[y, x] == patch_dot(extract_patch(img, x, y,
    m), k) exactly.
    """
    img = as_image(img)
    kern = np.asarray(kern, dtype=np.float64)
    if kern.ndim != 2 or kern.shape[0] != kern.shape[1]:
        raise ValueError(f"kernel must be square, got shape {kern.shape}")
    m = check_patch_side(kern.shape[0])
    if m > img.shape[0] or m > img.shape[1]:
        raise ValueError(f"kernel side {m} exceeds image shape {img.shape}")
    padded = pad_image(img, m // 2, boundary)
    return kernels.correlate_padded(padded, kern)


def box_sum_sq(img, m: int, boundary: str = REFLECT) -> np.ndarray:
    """Sum of squared intensities over the m-by-m window at every pixel.

    Uses running sums, O(1) amortized per pixel regardless of m.
    """
    img = as_image(img)
    check_patch_side(m)
    if m > img.shape[0] or m > img.shape[1]:
        raise ValueError(f"window side {m} exceeds image shape {img.shape}")
    padded = pad_image(img, m // 2, boundary)
    return kernels.box_sum_sq_padded(padded, m)


def load_image(path) -> np.ndarray:
    """Read a grayscale PNG or PGM file as float64 in [0, 1].

    Color inputs are converted to luma first.
    """
    with Image.open(path) as im:
        if im.mode != "L":
            im = im.convert("L")
        arr = np.asarray(im, dtype=np.float64)
    return arr / 255.0


def save_image(path, img) -> None:
    """Write float data to 8-bit grayscale PNG or PGM (by extension).

    Values are clipped to [0, 1] and scaled to 0..255.
    """
    img = as_image(img)
    data = np.clip(img, 0.0, 1.0)
    byte = np.rint(data * 255.0).astype(np.uint8)
    ext = os.path.splitext(str(path))[1].lower()
    if ext not in (".png", ".pgm"):
        raise ValueError(f"unsupported image extension {ext!r}; use .png or .pgm")
    Image.fromarray(byte, mode="L").save(path)
