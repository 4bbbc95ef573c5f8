"""Orthonormal patch bases and the two solvers that produce them.

For a masked image the patch autocorrelation operator is

    Lam[(u,v),(u',v')] = sum over masked centers of W(u,v) * W(u',v')

where W is the m-by-m window of the masked image I*H at that center.  The
projection energy of a basis {v_k} is U = sum_k v_k' Lam v_k, i.e. the
total squared component of the masked patches captured by the basis.

svd_solve_basis builds Lam densely and takes the top-K eigenvectors (the
global optimum; U equals the sum of the top-K eigenvalues).  gd_solve_basis
never forms Lam: it runs a greedy per-vector gradient flow realized as
correlate-then-accumulate, with deflation against already-locked vectors
and renormalization each iteration.  With a random start it converges
linearly to the leading remaining eigenvector, so the two routes provide
independent checks of one another.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .images import REFLECT, as_image, as_mask, check_boundary, check_patch_side, pad_image


class DegenerateRegionError(ValueError):
    """Raised when the masked image is identically zero (no basis defined)."""


@dataclass
class PatchBasis:
    """Ordered orthonormal patch vectors, stored as an array (count, side, side)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ValueError(f"expected vectors shaped (K, m, m), got {v.shape}")
        check_patch_side(v.shape[1])
        if not 1 <= v.shape[0] <= v.shape[1] * v.shape[2]:
            raise ValueError(f"basis count {v.shape[0]} outside [1, m^2]")
        if not np.all(np.isfinite(v)):
            raise ValueError("basis contains non-finite values")
        self.vectors = v

    @property
    def side(self) -> int:
        return self.vectors.shape[1]

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    def matrix(self) -> np.ndarray:
        """Rows are the flattened patch vectors, shape (count, side*side)."""
        return np.ascontiguousarray(self.vectors.reshape(self.count, -1))

    def orthonormality_defect(self) -> float:
        v = self.matrix()
        return float(np.max(np.abs(v @ v.T - np.eye(self.count))))

    def require_orthonormal(self, tol: float = 1e-8) -> None:
        d = self.orthonormality_defect()
        if d > tol:
            raise ValueError(f"basis not orthonormal: defect {d:.3e} > {tol:.0e}")

    def subset(self, count: int) -> "PatchBasis":
        if not 1 <= count <= self.count:
            raise ValueError(f"cannot take {count} vectors from a basis of {self.count}")
        return PatchBasis(self.vectors[:count].copy())


@dataclass
class GDConfig:
    """Knobs for the gradient-descent solver."""

    iters: int = 200          # update budget per basis vector
    tol: float = 1e-7         # relative stop on the per-vector energy estimate
    dt: float = 1.0           # step along the normalized gradient
    seed: int = 0
    restart: bool = True      # probe for a missed dominant direction after each cold start
    track_iterates: bool = False

    def __post_init__(self):
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.tol < 0 or self.dt <= 0:
            raise ValueError("tol must be >= 0 and dt > 0")


@dataclass
class SolverReport:
    """Trace of a gd_solve_basis run."""

    energy_trace: list = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = True
    restarts: int = 0
    iterates: list = field(default_factory=list)  # per locked vector when tracked


def _masked_setup(img, mask, m, boundary):
    img = as_image(img)
    mask = as_mask(mask, shape=img.shape)
    check_patch_side(m)
    check_boundary(boundary)
    masked = img * mask
    if not np.any(masked):
        raise DegenerateRegionError("masked image is identically zero; basis undefined")
    return pad_image(masked, m // 2, boundary), mask.astype(np.float64)


def projection_energy(img, mask, basis: PatchBasis, boundary: str = REFLECT) -> float:
    """Energy U captured by the basis over the masked centers; 0 for empty masks."""
    img = as_image(img)
    mask = as_mask(mask, shape=img.shape)
    check_boundary(boundary)
    if not np.any(mask):
        return 0.0
    maskf = mask.astype(np.float64)
    padded = pad_image(img * mask, basis.side // 2, boundary)
    total = 0.0
    for k in range(basis.count):
        c = kernels.correlate_padded(padded, basis.vectors[k])
        total += float(np.einsum("ij,ij,ij->", c, c, maskf))
    return total


def reconstruction_error_total(img, mask, basis: PatchBasis, boundary: str = REFLECT) -> float:
    """Total squared residual of the masked patches after projection on the basis.

    Computed directly from the residuals, not via the energy identity, so it
    can serve as an independent check of projection_energy.
    """
    img = as_image(img)
    mask = as_mask(mask, shape=img.shape)
    check_boundary(boundary)
    if not np.any(mask):
        return 0.0
    padded = pad_image(img * mask, basis.side // 2, boundary)
    return float(kernels.residual_total(padded, mask, basis.matrix(), basis.side))


def _deflate(v: np.ndarray, locked: np.ndarray) -> np.ndarray:
    if locked.shape[0] == 0:
        return v
    return v - locked.T @ (locked @ v)


def _random_deflated_unit(rng, mm, locked):
    for _ in range(64):
        v = _deflate(rng.uniform(-1.0, 1.0, mm), locked)
        n = float(np.linalg.norm(v))
        if n > 1e-8:
            return v / n
    raise RuntimeError("could not draw a vector outside the locked span")


def gd_solve_basis(
    img,
    mask,
    m: int,
    K: int,
    cfg: GDConfig | None = None,
    init: PatchBasis | None = None,
    boundary: str = REFLECT,
) -> tuple[PatchBasis, SolverReport]:
    """Greedy gradient-descent solve for the top-K patch basis.

    Each vector starts from the matching row of `init` when given (warm
    start), otherwise from a seeded random draw.  One iteration applies the
    operator through two convolution-shaped passes, steps along the
    normalized result, deflates against locked vectors and renormalizes.
    The per-vector energy estimate <v, Lam v> is appended to the report
    trace at every iteration and never decreases.
    """
    cfg = cfg or GDConfig()
    img = as_image(img)
    if not 1 <= K <= m * m:
        raise ValueError(f"K must lie in [1, m^2], got {K}")
    padded, maskf = _masked_setup(img, mask, m, boundary)
    mm = m * m

    def apply_op(vec: np.ndarray) -> np.ndarray:
        r = kernels.correlate_padded(padded, vec.reshape(m, m))
        return kernels.weighted_patch_sum(padded, r * maskf, m).ravel()

    rng = np.random.default_rng(cfg.seed)
    report = SolverReport()
    locked = np.empty((0, mm))
    locked_energy = 0.0
    rows = []

    for n in range(K):
        warm = init is not None and n < init.count and init.side == m
        if warm:
            v0 = init.matrix()[n]
            v0 = _deflate(v0, locked)
            nv = float(np.linalg.norm(v0))
            if nv > 1e-8:
                v0 = v0 / nv
            else:
                warm = False
        if not warm:
            v0 = _random_deflated_unit(rng, mm, locked)

        v, rq, steps, conv, iters_used, history = _gd_single(
            apply_op, v0, locked, cfg, locked_energy
        )
        report.iterations_used += iters_used
        report.converged = report.converged and conv

        if cfg.restart and not warm:
            probe_rq = _power_probe(apply_op, locked, rng, mm)
            if rq < 0.95 * probe_rq:
                v2, rq2, steps2, conv2, iters2, history2 = _gd_single(
                    apply_op, _random_deflated_unit(rng, mm, locked), locked, cfg, locked_energy
                )
                report.iterations_used += iters2
                report.restarts += 1
                if rq2 > rq:
                    v, rq, steps, conv, history = v2, rq2, steps2, conv2, history2
                    report.converged = report.converged and conv2

        report.energy_trace.extend(steps)
        if cfg.track_iterates:
            report.iterates.append(history)
        locked = np.vstack([locked, v[None, :]])
        locked_energy += rq
        rows.append(v.reshape(m, m))

    basis = PatchBasis(np.stack(rows))
    return basis, report


def _gd_single(apply_op, v, locked, cfg: GDConfig, locked_energy: float):
    """Iterate one basis vector to stagnation.

    Returns (v, rq, trace, converged, updates, history); the trace holds
    locked_energy plus the running <v, Lam v> at every visited iterate.
    """
    trace = []
    history = [v.copy()] if cfg.track_iterates else None
    rq_prev = None
    updates = 0
    converged = False
    while True:
        g = apply_op(v)
        rq = float(v @ g)
        trace.append(locked_energy + rq)
        if rq_prev is not None and abs(rq - rq_prev) <= cfg.tol * max(abs(rq), 1e-300):
            converged = True
            break
        if updates >= cfg.iters:
            break
        rq_prev = rq
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            converged = True  # null direction: any deflated unit vector is optimal here
            break
        v = v + cfg.dt * g / gn
        v = _deflate(v, locked)
        nv = float(np.linalg.norm(v))
        if nv < 1e-12:
            raise RuntimeError("iterate collapsed into the locked span")
        v = v / nv
        updates += 1
        if history is not None:
            history.append(v.copy())
    return v, rq, trace, converged, updates, history


def _power_probe(apply_op, locked, rng, mm, steps: int = 5) -> float:
    """Cheap stagnation reference: a few plain power iterations from a fresh draw."""
    v = _random_deflated_unit(rng, mm, locked)
    rq = 0.0
    for _ in range(steps):
        g = apply_op(v)
        rq = float(v @ g)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            return rq
        v = _deflate(g / gn, locked)
        nv = float(np.linalg.norm(v))
        if nv < 1e-12:
            return rq
        v = v / nv
    g = apply_op(v)
    return float(v @ g)


def svd_solve_basis(
    img, mask, m: int, K: int, boundary: str = REFLECT
) -> tuple[PatchBasis, list]:
    """Oracle solve: dense patch operator plus symmetric eigendecomposition.

    Returns the top-K eigenvectors as a basis and the matching eigenvalues
    in nonincreasing order.
    """
    img = as_image(img)
    if not 1 <= K <= m * m:
        raise ValueError(f"K must lie in [1, m^2], got {K}")
    padded, maskf = _masked_setup(img, mask, m, boundary)
    lam = kernels.patch_operator(padded, (maskf > 0).astype(np.uint8), m)
    lam = (lam + lam.T) * 0.5
    w, vectors = np.linalg.eigh(lam)
    order = np.argsort(w)[::-1][:K]
    rows = [vectors[:, i].reshape(m, m) for i in order]
    return PatchBasis(np.stack(rows)), [float(w[i]) for i in order]


def mix_basis(basis: PatchBasis, q) -> PatchBasis:
    """Recombine basis vectors with an orthogonal K-by-K matrix."""
    q = np.asarray(q, dtype=np.float64)
    k = basis.count
    if q.shape != (k, k):
        raise ValueError(f"mixing matrix must be ({k}, {k}), got {q.shape}")
    defect = float(np.max(np.abs(q.T @ q - np.eye(k))))
    if defect > 1e-10:
        raise ValueError(f"mixing matrix not orthogonal: defect {defect:.3e}")
    mixed = q @ basis.matrix()
    return PatchBasis(mixed.reshape(k, basis.side, basis.side))


# ---- file formats ----

def save_basis(path, basis: PatchBasis, binary: bool = True) -> None:
    """Write a basis file: one JSON header line, then K rows of m*m reals.

    Binary payloads are little-endian float64, row-major; text payloads are
    one whitespace-separated line per vector with full float64 precision.
    """
    header = {"m": basis.side, "K": basis.count, "format": "binary" if binary else "text"}
    mat = basis.matrix()
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("ascii"))
        if binary:
            fh.write(mat.astype("<f8").tobytes())
        else:
            for row in mat:
                fh.write((" ".join(f"{x:.17g}" for x in row) + "\n").encode("ascii"))


def load_basis(path) -> PatchBasis:
    """Read a basis file written by save_basis."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("ascii"))
        m, k, fmt = int(header["m"]), int(header["K"]), header["format"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise ValueError(f"bad basis header: {exc}") from exc
    if fmt == "binary":
        mat = np.frombuffer(payload, dtype="<f8")
        if mat.size != k * m * m:
            raise ValueError(f"basis payload has {mat.size} values, expected {k * m * m}")
        mat = mat.astype(np.float64).reshape(k, m, m)
    elif fmt == "text":
        rows = [np.array(line.split(), dtype=np.float64)
                for line in payload.decode("ascii").strip().splitlines()]
        mat = np.stack(rows)
        if mat.shape != (k, m * m):
            raise ValueError(f"basis payload shape {mat.shape}, expected ({k}, {m * m})")
        mat = mat.reshape(k, m, m)
    else:
        raise ValueError(f"unknown basis format {fmt!r}")
    return PatchBasis(mat)


def basis_tile_image(basis: PatchBasis, scale: int = 4, cols: int | None = None) -> np.ndarray:
    """Tile the basis vectors into one [0, 1] image, each tile min-max scaled."""
    k, m = basis.count, basis.side
    cols = cols or math.ceil(math.sqrt(k))
    rows = math.ceil(k / cols)
    gap = 1
    out = np.ones((rows * (m + gap) + gap, cols * (m + gap) + gap))
    for i in range(k):
        tile = basis.vectors[i]
        lo, hi = float(tile.min()), float(tile.max())
        norm = (tile - lo) / (hi - lo) if hi > lo else np.full_like(tile, 0.5)
        rr, cc = divmod(i, cols)
        y0 = gap + rr * (m + gap)
        x0 = gap + cc * (m + gap)
        out[y0:y0 + m, x0:x0 + m] = norm
    if scale > 1:
        out = np.kron(out, np.ones((scale, scale)))
    return out
