"""Gram matrices, parallelotope volumes, and their gradients.

Given vectors v_1..v_k in R^n, the Gram matrix G holds all pairwise inner
products and sqrt(det G) is the k-dimensional volume of the parallelotope
spanned by the vectors.  For unit-norm inputs the volume sits in [0, 1]
(Hadamard bound with unit diagonal): it vanishes when the vectors align
and reaches 1 when they are mutually orthogonal, so it acts as a joint
dissimilarity score for any number of vectors at once.  For k = 2 unit
vectors it reduces to sin(theta); for k = 1 it is the vector's length;
for k > n the vectors are linearly dependent and the volume is 0.

Determinants are taken with a diagonally pivoted Cholesky factorization,
which exploits positive semidefiniteness and detects rank deficiency
(volume exactly 0) instead of returning roundoff noise.  If roundoff makes
the matrix indefinite, the determinant falls back to the eigenvalue
product with negative eigenvalues clamped to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    NonFiniteInputError,
    SingularGramError,
    ZeroVectorError,
)

_EPS = float(np.finfo(np.float64).eps)

#: Norms below this are treated as a degenerate (zero) encoder output.
ZERO_NORM_CUTOFF = 1e-30

#: Volumes at or below this threshold get a zero subgradient: the volume is
#: not differentiable at 0, and the Gram inverse blows up long before that.
DEGENERATE_VOLUME = 1e-9


@dataclass(frozen=True)
class Volume:
    """A parallelotope volume and the Gram determinant behind it.

    ``gram_det`` is clamped at 0 before the square root, so
    ``value == sqrt(gram_det)`` always holds.
    """

    value: float
    gram_det: float


@dataclass(frozen=True)
class VolumeGradient:
    """d(volume)/d(vector) for each input row.

    When the volume is degenerate (at or below ``DEGENERATE_VOLUME``) the
    gradient rows are a zero subgradient and ``degenerate`` is True.
    """

    grads: np.ndarray  # (k, n); row i is the gradient for vector i
    degenerate: bool


def _as_rows(vectors) -> np.ndarray:
    """Stack input vectors into a C-contiguous (k, n) float64 array."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        if vectors.shape[0] == 0:
            raise EmptyInputError("need at least one vector")
        return np.ascontiguousarray(vectors, dtype=np.float64)
    vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if len(vecs) == 0:
        raise EmptyInputError("need at least one vector")
    for v in vecs:
        if v.ndim != 1:
            raise DimensionMismatchError(f"expected 1-D vectors, got shape {v.shape}")
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise DimensionMismatchError(f"vectors have mixed dimensions {sorted(dims)}")
    return np.array(vecs, dtype=np.float64)


def _require_finite(rows: np.ndarray) -> None:
    if not np.isfinite(rows).all():
        raise NonFiniteInputError("input contains NaN or Inf")


def _mirror_upper(g: np.ndarray) -> None:
    """Copy the upper triangle onto the lower one, in place.

    Guarantees exact (bitwise) symmetry: each off-diagonal inner product is
    computed once and mirrored.
    """
    k = g.shape[0]
    for i in range(1, k):
        g[i, :i] = g[:i, i]


def normalize(v) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm, preserving direction.

    Raises ``ZeroVectorError`` when the norm is below ``ZERO_NORM_CUTOFF``
    (a degenerate encoder output) and ``NonFiniteInputError`` on NaN/Inf.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a 1-D vector, got shape {arr.shape}")
    _require_finite(arr)
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_CUTOFF:
        raise ZeroVectorError(f"cannot normalize vector with norm {norm!r}")
    return arr / norm


def gram_matrix(vectors) -> np.ndarray:
    """The k x k matrix of pairwise inner products.

    Symmetry is exact by construction: entries are computed for i <= j and
    mirrored.  For unit-norm inputs the diagonal is 1 up to roundoff and the
    matrix is positive semidefinite.
    """
    rows = _as_rows(vectors)
    _require_finite(rows)
    g = rows @ rows.T
    _mirror_upper(g)
    return g


def _eig_det_clamped(g: np.ndarray) -> float:
    """Fallback determinant: eigenvalue product, negatives clamped to 0."""
    w = np.linalg.eigvalsh(g)
    return float(np.prod(np.clip(w, 0.0, None)))


#: Orders up to this run the factorization on plain Python floats, which is
#: several times faster than numpy for the tiny matrices this library sees.
_SCALAR_K_MAX = 8


def _det_scalar(g: np.ndarray, k: int) -> float:
    """Pivoted-Cholesky determinant on a small matrix, scalar arithmetic.

    Reads the upper triangle only (mirrored into the working copy), so the
    result is indifferent to sub-ulp asymmetry in ``g``.
    """
    a = g.tolist()
    diag_max = 0.0
    for i in range(k):
        row = a[i]
        for j in range(i):
            row[j] = a[j][i]
        if row[i] > diag_max:
            diag_max = row[i]
    tol = k * _EPS * diag_max
    det = 1.0
    for j in range(k):
        p = j
        pivot = a[j][j]
        for r in range(j + 1, k):
            if a[r][r] > pivot:
                pivot = a[r][r]
                p = r
        if pivot <= tol:
            if pivot < -1000.0 * (tol if tol > _EPS else _EPS):
                return _eig_det_clamped(np.asarray(g, dtype=np.float64))
            return 0.0
        if p != j:
            a[j], a[p] = a[p], a[j]
            for row in a:
                row[j], row[p] = row[p], row[j]
        det *= pivot
        col = [a[r][j] for r in range(j + 1, k)]
        for r in range(j + 1, k):
            f = col[r - j - 1] / pivot
            row = a[r]
            for c in range(j + 1, k):
                row[c] -= f * col[c - j - 1]
    return det


def _det_numpy(g: np.ndarray, k: int) -> float:
    """Same factorization in numpy, used above ``_SCALAR_K_MAX``."""
    a = np.array(g, dtype=np.float64)
    _mirror_upper(a)
    tol = k * _EPS * max(float(a.diagonal().max()), 0.0)
    det = 1.0
    for j in range(k):
        p = j + int(np.argmax(a.diagonal()[j:]))
        pivot = float(a[p, p])
        if pivot <= tol:
            if pivot < -1000.0 * max(tol, _EPS):
                return _eig_det_clamped(np.asarray(g, dtype=np.float64))
            return 0.0
        if p != j:
            a[[j, p], :] = a[[p, j], :]
            a[:, [j, p]] = a[:, [p, j]]
        det *= pivot
        if j + 1 < k:
            col = a[j + 1:, j]
            a[j + 1:, j + 1:] -= np.outer(col / pivot, col)
    return det


def psd_det(g: np.ndarray) -> float:
    """Determinant of a symmetric positive semidefinite matrix, >= 0.

    Diagonally pivoted Cholesky.  A pivot at or below the rank tolerance
    ends the factorization with determinant exactly 0 (the trailing block of
    a PSD matrix with negligible diagonal is itself negligible).  A pivot
    far below zero means the input is not numerically PSD; the determinant
    is then recomputed from clamped eigenvalues.
    """
    g = np.asarray(g, dtype=np.float64)
    return _gram_det(g, g.shape[0])


def _gram_det(g: np.ndarray, k: int) -> float:
    if k <= _SCALAR_K_MAX:
        return _det_scalar(g, k)
    return _det_numpy(g, k)


def _vol_from_rows(rows: np.ndarray) -> tuple[float, float]:
    """(volume, clamped Gram determinant) for pre-validated stacked rows."""
    k, n = rows.shape
    if k > n:
        # k vectors in R^n with k > n are linearly dependent.
        return 0.0, 0.0
    det = _gram_det(rows @ rows.T, k)
    if det <= 0.0:
        return 0.0, 0.0
    return float(np.sqrt(det)), det


def gramian_volume(vectors) -> Volume:
    """Volume of the parallelotope spanned by the input vectors.

    k = 1 returns the vector's norm; k > n returns 0.  The determinant is
    clamped at 0 before the square root: it is nonnegative in exact
    arithmetic but floating point is not exact.
    """
    rows = _as_rows(vectors)
    _require_finite(rows)
    value, det = _vol_from_rows(rows)
    return Volume(value=value, gram_det=det)


def _solve_gram(g: np.ndarray, rows: np.ndarray, k: int) -> np.ndarray | None:
    """G^-1 @ rows for a small symmetric G; None when closed forms degrade.

    k = 2 and 3 use the adjugate over the upper triangle of ``g``; larger
    orders fall through to the caller's LAPACK path.
    """
    if k == 1:
        d = g[0, 0]
        return rows / d if d > 0.0 else None
    if k == 2:
        a, b, d = g[0, 0], g[0, 1], g[1, 1]
        det2 = a * d - b * b
        if det2 <= 0.0:
            return None
        inv = np.array([[d, -b], [-b, a]]) / det2
        return inv @ rows
    if k == 3:
        a, b, c = g[0, 0], g[0, 1], g[0, 2]
        d, e, f = g[1, 1], g[1, 2], g[2, 2]
        m00 = d * f - e * e
        m01 = c * e - b * f
        m02 = b * e - c * d
        det3 = a * m00 + b * m01 + c * m02
        if det3 <= 0.0:
            return None
        inv = np.array([
            [m00, m01, m02],
            [m01, a * f - c * c, b * c - a * e],
            [m02, b * c - a * e, a * d - b * b],
        ]) / det3
        return inv @ rows
    return None


def _vol_grad_from_rows(
    rows: np.ndarray,
) -> tuple[float, float, np.ndarray, bool]:
    """(volume, det, gradient rows, degenerate flag) for stacked rows.

    With A the n x k matrix of column vectors, dVol/dA = Vol * A * G^-1;
    row i of the returned array is that matrix's column i.  At or below
    ``DEGENERATE_VOLUME`` the rows are a zero subgradient.
    """
    k, n = rows.shape
    if k > n:
        return 0.0, 0.0, np.zeros_like(rows), True
    g = rows @ rows.T
    det = _gram_det(g, k)
    vol = float(np.sqrt(det)) if det > 0.0 else 0.0
    if vol <= DEGENERATE_VOLUME:
        return vol, max(det, 0.0), np.zeros_like(rows), True
    x = _solve_gram(g, rows, k)
    if x is None:
        _mirror_upper(g)
        try:
            x = np.linalg.solve(g, rows)
        except np.linalg.LinAlgError as exc:
            raise SingularGramError(
                f"Gram matrix not invertible although volume is {vol:.3e}"
            ) from exc
    return vol, det, vol * x, False


def volume_gradient(vectors) -> VolumeGradient:
    """Gradient of ``gramian_volume`` with respect to every input vector.

    Raises ``SingularGramError`` only in the inconsistent case where the
    volume is above the degeneracy threshold yet the Gram matrix cannot be
    inverted.
    """
    rows = _as_rows(vectors)
    _require_finite(rows)
    _, _, grads, degenerate = _vol_grad_from_rows(rows)
    return VolumeGradient(grads=grads, degenerate=degenerate)
