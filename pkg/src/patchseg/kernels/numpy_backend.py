"""Vectorized numpy/scipy implementations of the hot kernels.

All kernels take float64 arrays.  Image-like inputs arrive pre-padded by
r = m // 2 on every side; outputs refer to the unpadded pixel grid.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

NAME = "numpy"


def correlate_padded(padded: np.ndarray, kern: np.ndarray) -> np.ndarray:
    # out[y, x] = sum_{dy,dx} padded[y+dy, x+dx] * kern[dy, dx]
    m = kern.shape[0]
    r = m // 2
    h = padded.shape[0] - m + 1
    w = padded.shape[1] - m + 1
    full = ndimage.correlate(padded, kern, mode="constant", cval=0.0)
    return np.ascontiguousarray(full[r:r + h, r:r + w])


def box_sum_sq_padded(padded: np.ndarray, m: int) -> np.ndarray:
    # integral image of squares; O(1) per output pixel
    h = padded.shape[0] - m + 1
    w = padded.shape[1] - m + 1
    sq = padded * padded
    s = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1))
    s[1:, 1:] = sq.cumsum(axis=0).cumsum(axis=1)
    return s[m:m + h, m:m + w] - s[0:h, m:m + w] - s[m:m + h, 0:w] + s[0:h, 0:w]


def weighted_patch_sum(padded: np.ndarray, weights: np.ndarray, m: int) -> np.ndarray:
    # out[dy, dx] = sum_{y,x} weights[y, x] * padded[y+dy, x+dx]
    h, w = weights.shape
    wf = np.ascontiguousarray(weights).ravel()
    out = np.empty((m, m))
    for dy in range(m):
        for dx in range(m):
            out[dy, dx] = wf @ np.ascontiguousarray(padded[dy:dy + h, dx:dx + w]).ravel()
    return out


def _window_matrix(padded: np.ndarray, mask: np.ndarray, m: int) -> np.ndarray:
    h, w = mask.shape
    win = sliding_window_view(padded, (m, m))[:h, :w]
    return win.reshape(h * w, m * m)[mask.ravel() != 0]


def patch_operator(padded: np.ndarray, mask: np.ndarray, m: int) -> np.ndarray:
    # sum over masked centers of the outer product of the m*m window with itself
    a = _window_matrix(padded, mask, m)
    if a.shape[0] == 0:
        return np.zeros((m * m, m * m))
    lam = a.T @ a
    return (lam + lam.T) * 0.5


def residual_total(padded: np.ndarray, mask: np.ndarray, vecs: np.ndarray, m: int) -> float:
    # sum of squared patch residuals after projection on the rows of vecs
    a = _window_matrix(padded, mask, m)
    if a.shape[0] == 0:
        return 0.0
    coef = a @ vecs.T
    resid = a - coef @ vecs
    return float(np.einsum("ij,ij->", resid, resid))


def _cdiff(f: np.ndarray, axis: int) -> np.ndarray:
    # central difference with clamped (replicated) edge samples
    if f.shape[axis] < 2:
        return np.zeros_like(f)
    out = np.empty_like(f)
    src = np.moveaxis(f, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    dst[1:-1] = (src[2:] - src[:-2]) * 0.5
    dst[0] = (src[1] - src[0]) * 0.5
    dst[-1] = (src[-1] - src[-2]) * 0.5
    return out


def curvature(phi: np.ndarray, eta: float) -> np.ndarray:
    # divergence of the normalized gradient, central differences throughout
    fy = _cdiff(phi, 0)
    fx = _cdiff(phi, 1)
    nrm = np.sqrt(fx * fx + fy * fy)
    nrm = np.where(nrm > eta, nrm, eta)
    return _cdiff(fx / nrm, 1) + _cdiff(fy / nrm, 0)
