"""Backend parity and loop-oracle checks for the hot kernels."""
import numpy as np
import pytest

from patchseg import kernels
from patchseg.kernels import available_backends

BACKENDS = available_backends()


def _pad(img, r):
    return np.pad(img, r, mode="reflect") if r else img


def ref_correlate_padded(padded, kern):
    m = kern.shape[0]
    h = padded.shape[0] - m + 1
    w = padded.shape[1] - m + 1
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            s = 0.0
            for dy in range(m):
                for dx in range(m):
                    s += padded[y + dy, x + dx] * kern[dy, dx]
            out[y, x] = s
    return out


def ref_weighted_patch_sum(padded, weights, m):
    h, w = weights.shape
    out = np.zeros((m, m))
    for y in range(h):
        for x in range(w):
            out += weights[y, x] * padded[y:y + m, x:x + m]
    return out


def ref_patch_operator(padded, mask, m):
    h, w = mask.shape
    lam = np.zeros((m * m, m * m))
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                v = padded[y:y + m, x:x + m].ravel()
                lam += np.outer(v, v)
    return lam


def ref_residual_total(padded, mask, vecs, m):
    h, w = mask.shape
    total = 0.0
    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                p = padded[y:y + m, x:x + m].ravel()
                c = vecs @ p
                r = p - vecs.T @ c
                total += float(r @ r)
    return total


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def _case(seed=0, h=11, w=14, m=5):
    rng = np.random.default_rng(seed)
    img = rng.uniform(-1.0, 1.0, (h, w))
    kern = rng.uniform(-1.0, 1.0, (m, m))
    mask = (rng.uniform(size=(h, w)) < 0.6).astype(np.uint8)
    return img, kern, mask


def test_correlate_matches_loop_oracle(backend):
    img, kern, _ = _case(seed=1)
    padded = _pad(img, kern.shape[0] // 2)
    got = backend.correlate_padded(padded, kern)
    np.testing.assert_allclose(got, ref_correlate_padded(padded, kern), rtol=1e-12, atol=1e-13)


def test_box_sum_sq_matches_ones_correlation(backend):
    img, _, _ = _case(seed=2, m=3)
    for m in (1, 3, 5):
        padded = _pad(img, m // 2)
        got = backend.box_sum_sq_padded(padded, m)
        want = ref_correlate_padded(padded * padded, np.ones((m, m)))
        np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


def test_weighted_patch_sum_matches_loop_oracle(backend):
    img, _, _ = _case(seed=3)
    m = 5
    rng = np.random.default_rng(33)
    weights = rng.uniform(-1.0, 1.0, img.shape)
    padded = _pad(img, m // 2)
    got = backend.weighted_patch_sum(padded, weights, m)
    np.testing.assert_allclose(got, ref_weighted_patch_sum(padded, weights, m), rtol=1e-11, atol=1e-12)


def test_patch_operator_matches_loop_oracle(backend):
    img, _, mask = _case(seed=4)
    m = 3
    padded = _pad(img, m // 2)
    got = backend.patch_operator(padded, mask, m)
    want = ref_patch_operator(padded, mask, m)
    np.testing.assert_allclose(got, want, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(got, got.T, rtol=0, atol=0)


def test_patch_operator_empty_mask(backend):
    img, _, _ = _case(seed=5)
    m = 3
    padded = _pad(img, m // 2)
    got = backend.patch_operator(padded, np.zeros(img.shape, np.uint8), m)
    assert np.all(got == 0.0)


def test_residual_total_matches_loop_oracle(backend):
    img, _, mask = _case(seed=6)
    m = 3
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.normal(size=(m * m, m * m)))
    vecs = np.ascontiguousarray(q[:, :4].T)
    padded = _pad(img, m // 2)
    got = backend.residual_total(padded, mask, vecs, m)
    want = ref_residual_total(padded, mask, vecs, m)
    assert got == pytest.approx(want, rel=1e-11, abs=1e-12)


def test_curvature_odd_symmetry_and_flat_zero(backend):
    rng = np.random.default_rng(8)
    phi = rng.normal(size=(16, 12))
    k1 = backend.curvature(phi, 1e-8)
    k2 = backend.curvature(-phi, 1e-8)
    np.testing.assert_array_equal(k1, -k2)
    flat = backend.curvature(np.full((10, 10), 3.7), 1e-8)
    np.testing.assert_allclose(flat, 0.0, atol=1e-12)


def test_backend_parity():
    if len(BACKENDS) < 2:
        pytest.skip("only one backend importable")
    nb = BACKENDS["numba"]
    npy = BACKENDS["numpy"]
    rng = np.random.default_rng(9)
    img = rng.uniform(-1.0, 1.0, (40, 37))
    m = 7
    padded = _pad(img, m // 2)
    kern = rng.uniform(-1.0, 1.0, (m, m))
    mask = (rng.uniform(size=img.shape) < 0.5).astype(np.uint8)
    weights = rng.uniform(-1.0, 1.0, img.shape)
    q, _ = np.linalg.qr(rng.normal(size=(m * m, m * m)))
    vecs = np.ascontiguousarray(q[:, :6].T)
    checks = [
        (nb.correlate_padded(padded, kern), npy.correlate_padded(padded, kern)),
        (nb.box_sum_sq_padded(padded, m), npy.box_sum_sq_padded(padded, m)),
        (nb.weighted_patch_sum(padded, weights, m), npy.weighted_patch_sum(padded, weights, m)),
        (nb.patch_operator(padded, mask, m), npy.patch_operator(padded, mask, m)),
        (np.array(nb.residual_total(padded, mask, vecs, m)), np.array(npy.residual_total(padded, mask, vecs, m))),
        (nb.curvature(img, 1e-8), npy.curvature(img, 1e-8)),
    ]
    for got, want in checks:
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-10)


def test_dispatch_exposes_selected_backend():
    assert kernels.active_backend() in BACKENDS
    out = kernels.correlate_padded(np.ones((5, 5)), np.ones((3, 3)))
    assert out.shape == (3, 3)
