"""Numba-compiled implementations of the hot kernels.

Signatures and semantics mirror numpy_backend exactly; loops are serial so
repeated runs are bitwise reproducible.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def correlate_padded(padded, kern):
    m = kern.shape[0]
    h = padded.shape[0] - m + 1
    w = padded.shape[1] - m + 1
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            s = 0.0
            for dy in range(m):
                for dx in range(m):
                    s += padded[y + dy, x + dx] * kern[dy, dx]
            out[y, x] = s
    return out


@njit(cache=True)
def box_sum_sq_padded(padded, m):
    ph, pw = padded.shape
    h = ph - m + 1
    w = pw - m + 1
    col = np.empty((h, pw))
    for x in range(pw):
        s = 0.0
        for dy in range(m):
            s += padded[dy, x] * padded[dy, x]
        col[0, x] = s
        for y in range(1, h):
            vn = padded[y + m - 1, x]
            vo = padded[y - 1, x]
            s += vn * vn - vo * vo
            col[y, x] = s
    out = np.empty((h, w))
    for y in range(h):
        s = 0.0
        for dx in range(m):
            s += col[y, dx]
        out[y, 0] = s
        for x in range(1, w):
            s += col[y, x + m - 1] - col[y, x - 1]
            out[y, x] = s
    return out


@njit(cache=True)
def weighted_patch_sum(padded, weights, m):
    h, w = weights.shape
    out = np.zeros((m, m))
    for y in range(h):
        for x in range(w):
            wt = weights[y, x]
            if wt == 0.0:
                continue
            for dy in range(m):
                for dx in range(m):
                    out[dy, dx] += wt * padded[y + dy, x + dx]
    return out


@njit(cache=True)
def patch_operator(padded, mask, m):
    h, w = mask.shape
    mm = m * m
    lam = np.zeros((mm, mm))
    win = np.empty(mm)
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0:
                continue
            i = 0
            for dy in range(m):
                for dx in range(m):
                    win[i] = padded[y + dy, x + dx]
                    i += 1
            for a in range(mm):
                wa = win[a]
                for b in range(a, mm):
                    lam[a, b] += wa * win[b]
    for a in range(mm):
        for b in range(a + 1, mm):
            lam[b, a] = lam[a, b]
    return lam


@njit(cache=True)
def residual_total(padded, mask, vecs, m):
    h, w = mask.shape
    kk = vecs.shape[0]
    mm = m * m
    win = np.empty(mm)
    coef = np.empty(kk)
    total = 0.0
    for y in range(h):
        for x in range(w):
            if mask[y, x] == 0:
                continue
            i = 0
            for dy in range(m):
                for dx in range(m):
                    win[i] = padded[y + dy, x + dx]
                    i += 1
            for k in range(kk):
                s = 0.0
                for a in range(mm):
                    s += win[a] * vecs[k, a]
                coef[k] = s
            for a in range(mm):
                r = win[a]
                for k in range(kk):
                    r -= coef[k] * vecs[k, a]
                total += r * r
    return total


@njit(cache=True)
def curvature(phi, eta):
    h, w = phi.shape
    fx = np.empty((h, w))
    fy = np.empty((h, w))
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            gx = (phi[y, xp] - phi[y, xm]) * 0.5
            gy = (phi[yp, x] - phi[ym, x]) * 0.5
            nrm = np.sqrt(gx * gx + gy * gy)
            if nrm <= eta:
                nrm = eta
            fx[y, x] = gx / nrm
            fy[y, x] = gy / nrm
    out = np.empty((h, w))
    for y in range(h):
        ym = y - 1 if y > 0 else 0
        yp = y + 1 if y < h - 1 else h - 1
        for x in range(w):
            xm = x - 1 if x > 0 else 0
            xp = x + 1 if x < w - 1 else w - 1
            out[y, x] = (fx[y, xp] - fx[y, xm]) * 0.5 + (fy[yp, x] - fy[ym, x]) * 0.5
    return out
