"""Eigen-patch solver tests: oracles, energy identities, convergence, file I/O."""
import numpy as np
import pytest

from patchseg import images
from patchseg.basis import (
    DegenerateRegionError,
    GDConfig,
    PatchBasis,
    basis_tile_image,
    gd_solve_basis,
    load_basis,
    mix_basis,
    projection_energy,
    reconstruction_error_total,
    save_basis,
    svd_solve_basis,
)


def random_orthonormal(rows, dim, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return np.ascontiguousarray(q[:, :rows].T)


def make_basis(k, m, seed):
    return PatchBasis(random_orthonormal(k, m * m, seed).reshape(k, m, m))


def ref_projection_energy(img, mask, bas):
    # per-pixel oracle: explicit window extraction from the masked image
    masked = img * mask
    m = bas.side
    total = 0.0
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            if mask[y, x]:
                p = images.extract_patch(masked, x, y, m)
                for k in range(bas.count):
                    total += images.patch_dot(p, bas.vectors[k]) ** 2
    return total


def ref_residual_total(img, mask, bas):
    masked = img * mask
    m = bas.side
    total = 0.0
    for y in range(img.shape[0]):
        for x in range(img.shape[1]):
            if mask[y, x]:
                p = images.extract_patch(masked, x, y, m).ravel()
                c = bas.matrix() @ p
                r = p - bas.matrix().T @ c
                total += float(r @ r)
    return total


def _img_mask(seed, h=12, w=14, frac=0.6):
    rng = np.random.default_rng(seed)
    img = rng.uniform(size=(h, w))
    mask = (rng.uniform(size=(h, w)) < frac).astype(np.uint8)
    return img, mask


# ---- projection_energy ----

def test_projection_energy_zero_image_is_zero():
    bas = make_basis(3, 3, 0)
    assert projection_energy(np.zeros((8, 8)), np.ones((8, 8), np.uint8), bas) == 0.0


def test_projection_energy_empty_mask_is_zero():
    img, _ = _img_mask(1)
    bas = make_basis(2, 3, 1)
    assert projection_energy(img, np.zeros(img.shape, np.uint8), bas) == 0.0


def test_projection_energy_matches_pixel_oracle():
    img, mask = _img_mask(2, h=9, w=10)
    bas = make_basis(3, 3, 2)
    got = projection_energy(img, mask, bas)
    want = ref_projection_energy(img, mask, bas)
    assert got == pytest.approx(want, rel=1e-10)


def test_reconstruction_error_matches_pixel_oracle():
    img, mask = _img_mask(3, h=9, w=8)
    bas = make_basis(3, 3, 3)
    got = reconstruction_error_total(img, mask, bas)
    want = ref_residual_total(img, mask, bas)
    assert got == pytest.approx(want, rel=1e-10)


def test_energy_identity():
    # residual + captured energy = total masked patch norm
    for seed in range(8):
        img, mask = _img_mask(10 + seed)
        m = 5
        bas = make_basis(4, m, seed)
        lhs = reconstruction_error_total(img, mask, bas)
        norms = images.box_sum_sq(img * mask, m)
        total_norm = float(norms[mask > 0].sum())
        rhs = total_norm - projection_energy(img, mask, bas)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


def test_reconstruction_error_complete_basis_is_zero():
    img, mask = _img_mask(4, h=8, w=8)
    m = 3
    bas = make_basis(m * m, m, 4)
    scale = float(images.box_sum_sq(img * mask, m)[mask > 0].sum())
    assert reconstruction_error_total(img, mask, bas) <= 1e-10 * scale + 1e-12


def test_reconstruction_error_empty_mask_zero():
    img, _ = _img_mask(5)
    bas = make_basis(2, 3, 5)
    assert reconstruction_error_total(img, np.zeros(img.shape, np.uint8), bas) == 0.0


# ---- svd_solve_basis (oracle route) ----

def test_svd_constant_image_rank_one():
    c = 0.7
    img = np.full((10, 10), c)
    mask = np.ones((10, 10), np.uint8)
    m = 3
    bas, vals = svd_solve_basis(img, mask, m, 1)
    v = bas.vectors[0]
    np.testing.assert_allclose(np.abs(v), 1.0 / m, rtol=1e-8)
    want = c * c * m * m * img.size
    assert vals[0] == pytest.approx(want, rel=1e-10)
    assert projection_energy(img, mask, bas) == pytest.approx(want, rel=1e-10)


def test_svd_energy_equals_eigenvalue_sum():
    img, mask = _img_mask(6)
    for k in (1, 3, 6):
        bas, vals = svd_solve_basis(img, mask, 3, k)
        assert projection_energy(img, mask, bas) == pytest.approx(sum(vals), rel=1e-8)


def test_svd_eigenvalues_sorted_nonnegative():
    img, mask = _img_mask(7)
    _, vals = svd_solve_basis(img, mask, 5, 8)
    assert all(a >= b - 1e-10 for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= -1e-10


def test_svd_oracle_beats_any_basis():
    # top-K eigenvectors are the global optimum of the projection energy
    img, mask = _img_mask(8)
    k, m = 4, 3
    _, vals = svd_solve_basis(img, mask, m, k)
    best = sum(vals)
    for seed in range(6):
        rand_u = projection_energy(img, mask, make_basis(k, m, 100 + seed))
        assert rand_u <= best * (1 + 1e-10)


def test_svd_degenerate_region_raises():
    with pytest.raises(DegenerateRegionError):
        svd_solve_basis(np.zeros((8, 8)), np.ones((8, 8), np.uint8), 3, 2)
    img = np.ones((8, 8))
    img[:, :4] = 0.0
    mask = np.zeros((8, 8), np.uint8)
    mask[:, :4] = 1
    with pytest.raises(DegenerateRegionError):
        svd_solve_basis(img, mask, 3, 1)


# ---- gd_solve_basis ----

def test_gd_constant_image_first_vector_uniform():
    c = 0.4
    img = np.full((12, 12), c)
    mask = np.ones(img.shape, np.uint8)
    m = 3
    bas, report = gd_solve_basis(img, mask, m, 1, GDConfig(seed=0))
    np.testing.assert_allclose(np.abs(bas.vectors[0]), 1.0 / m, atol=1e-3)
    want = c * c * m * m * img.size
    assert projection_energy(img, mask, bas) == pytest.approx(want, rel=1e-6)
    assert report.converged


def test_gd_reaches_oracle_energy():
    img, mask = _img_mask(9, h=24, w=24, frac=0.7)
    m, k = 5, 4
    bas, _ = gd_solve_basis(img, mask, m, k, GDConfig(seed=1))
    _, vals = svd_solve_basis(img, mask, m, k)
    assert projection_energy(img, mask, bas) >= 0.99 * sum(vals)


def test_gd_basis_orthonormal():
    img, mask = _img_mask(10, h=16, w=16)
    bas, _ = gd_solve_basis(img, mask, 5, 6, GDConfig(seed=2))
    assert bas.orthonormality_defect() <= 1e-8


def test_gd_energy_trace_nondecreasing():
    img, mask = _img_mask(11, h=16, w=16)
    _, report = gd_solve_basis(img, mask, 5, 4, GDConfig(seed=3))
    trace = np.array(report.energy_trace)
    assert trace.size > 0
    drops = np.diff(trace)
    assert drops.min() >= -1e-10 * max(1.0, trace.max())


def test_gd_degenerate_region_raises():
    with pytest.raises(DegenerateRegionError):
        gd_solve_basis(np.zeros((10, 10)), np.ones((10, 10), np.uint8), 3, 2)


def test_gd_warm_start_never_loses_energy():
    img, mask = _img_mask(12, h=20, w=20)
    m, k = 5, 3
    cold, _ = gd_solve_basis(img, mask, m, k, GDConfig(seed=4))
    u_cold = projection_energy(img, mask, cold)
    warm, _ = gd_solve_basis(img, mask, m, k, GDConfig(seed=5, iters=3), init=cold)
    u_warm = projection_energy(img, mask, warm)
    assert u_warm >= u_cold * (1 - 1e-9)


def test_gd_linear_convergence_ratios():
    # distance to the sign-aligned oracle eigenvector is nonincreasing
    # (up to slack) from the second iteration on
    img, mask = _img_mask(13, h=20, w=20, frac=1.0)
    m, k = 5, 3
    _, oracle_vals = svd_solve_basis(img, mask, m, k)
    oracle, _ = svd_solve_basis(img, mask, m, k)
    bas, report = gd_solve_basis(
        img, mask, m, k, GDConfig(seed=6, tol=1e-12, track_iterates=True)
    )
    assert len(report.iterates) == k
    for step in range(k):
        e = oracle.matrix()[step]
        hist = report.iterates[step]
        dists = []
        for it in hist:
            ee = e if float(it @ e) >= 0 else -e
            dists.append(float(np.linalg.norm(it - ee)))
        for n in range(1, len(dists) - 1):
            if dists[n] > 1e-13:
                assert dists[n + 1] / dists[n] <= 1 + 1e-6


def test_gd_two_texture_masks_discriminate():
    # a basis fit on its own texture captures more energy there than the
    # basis fit on the other texture does
    h = w = 32
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    img = np.where(xx < w // 2, 0.5 + 0.4 * np.sin(2 * np.pi * xx / 4),
                   0.5 + 0.4 * np.sin(2 * np.pi * yy / 7))
    left = (xx < w // 2).astype(np.uint8)
    right = 1 - left
    cfg = GDConfig(seed=7)
    bas_l, _ = gd_solve_basis(img, left, 5, 3, cfg)
    bas_r, _ = gd_solve_basis(img, right, 5, 3, cfg)
    own = projection_energy(img, left, bas_l)
    cross = projection_energy(img, left, bas_r)
    assert own > cross


# ---- mix_basis ----

def test_mix_identity_keeps_vectors():
    bas = make_basis(3, 3, 20)
    out = mix_basis(bas, np.eye(3))
    np.testing.assert_allclose(out.vectors, bas.vectors)


def test_mix_rotation_swaps_with_sign():
    bas = make_basis(2, 3, 21)
    q = np.array([[0.0, -1.0], [1.0, 0.0]])
    out = mix_basis(bas, q)
    np.testing.assert_allclose(out.vectors[0], -bas.vectors[1], atol=1e-15)
    np.testing.assert_allclose(out.vectors[1], bas.vectors[0], atol=1e-15)


def test_mix_preserves_projection_energy():
    img, mask = _img_mask(22)
    bas = make_basis(4, 5, 22)
    u0 = projection_energy(img, mask, bas)
    rng = np.random.default_rng(23)
    for _ in range(5):
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        u1 = projection_energy(img, mask, mix_basis(bas, q))
        assert u1 == pytest.approx(u0, rel=1e-8)


def test_mix_rejects_nonorthogonal():
    bas = make_basis(2, 3, 24)
    with pytest.raises(ValueError):
        mix_basis(bas, np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        mix_basis(bas, np.eye(3))


# ---- PatchBasis and file I/O ----

def test_patch_basis_validation():
    with pytest.raises(ValueError):
        PatchBasis(np.zeros((1, 2, 2)))
    with pytest.raises(ValueError):
        PatchBasis(np.zeros((10, 3, 3)))
    bas = make_basis(2, 3, 25)
    assert bas.side == 3 and bas.count == 2
    bas.require_orthonormal()
    sub = bas.subset(1)
    assert sub.count == 1


def test_basis_file_roundtrip_binary(tmp_path):
    bas = make_basis(4, 5, 26)
    p = tmp_path / "b.basis"
    save_basis(p, bas, binary=True)
    back = load_basis(p)
    np.testing.assert_array_equal(back.vectors, bas.vectors)


def test_basis_file_roundtrip_text(tmp_path):
    bas = make_basis(3, 3, 27)
    p = tmp_path / "b.txt"
    save_basis(p, bas, binary=False)
    back = load_basis(p)
    np.testing.assert_array_equal(back.vectors, bas.vectors)


def test_basis_file_bad_header(tmp_path):
    p = tmp_path / "junk"
    p.write_bytes(b"not json\n\x00\x01")
    with pytest.raises(ValueError):
        load_basis(p)


def test_basis_tile_image_shape():
    bas = make_basis(5, 3, 28)
    tile = basis_tile_image(bas, scale=2)
    assert tile.ndim == 2
    assert tile.min() >= 0.0 and tile.max() <= 1.0
