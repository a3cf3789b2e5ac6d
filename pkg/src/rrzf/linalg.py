"""
Small dense complex linear algebra kernels.

Matrices are plain ``numpy`` complex128 arrays. The two non-trivial
kernels, :func:`inverse` (Gaussian elimination with partial pivoting) and
:func:`hermitian_eigenvalues` (cyclic complex Jacobi), are written out
here rather than delegated to LAPACK so their tolerances and failure
modes are explicit. ``inverse`` and ``determinant`` also accept a stack
of matrices with shape ``(..., n, n)``, which the Monte-Carlo engine uses
to invert one Gram matrix for a whole grid of regularizing factors at
once.
"""

import numpy as np

__all__ = ['LinalgError', 'SingularMatrixError', 'ConvergenceError',
           'as_matrix', 'conj_transpose', 'matmul', 'inverse',
           'determinant', 'trace_real', 'hermitian_eigenvalues']

SINGULAR_RTOL = 1e-12
HERMITIAN_ATOL = 1e-10
JACOBI_RTOL = 1e-11
JACOBI_MAX_SWEEPS = 100


class LinalgError(ValueError):
    """Base class for linear algebra failures."""


class SingularMatrixError(LinalgError):
    """Raised when elimination meets a pivot below the singularity tolerance."""


class ConvergenceError(LinalgError):
    """Raised when the Jacobi eigen-solver exhausts its sweep budget."""


def as_matrix(a):
    """Return `a` as a finite 2-D complex128 array.

    Raises
    ------
    ValueError
        If `a` is not two dimensional, is empty, or holds NaN/Inf.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def conj_transpose(a):
    """Conjugate (Hermitian) transpose."""
    return as_matrix(a).conj().T


def matmul(a, b):
    """Complex matrix product ``a @ b`` with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def _check_square_stack(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] < 1:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _eliminate(a, want_inverse):
    """Pivoted Gauss-Jordan elimination on a stack of square matrices.

    Returns the inverse (or None) and the determinant for each matrix.
    """
    a = _check_square_stack(a)
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    work = a.reshape((-1, n, n)).copy()
    nb = work.shape[0]
    rhs = np.broadcast_to(np.eye(n, dtype=np.complex128), (nb, n, n)).copy()
    scale = np.abs(work).max(axis=(1, 2))
    det = np.ones(nb, dtype=np.complex128)
    rows = np.arange(nb)

    for col in range(n):
        piv = col + np.argmax(np.abs(work[:, col:, col]), axis=1)
        pivot_mag = np.abs(work[rows, piv, col])
        bad = (pivot_mag < SINGULAR_RTOL * scale) | (scale == 0.0)
        if np.any(bad):
            idx = np.flatnonzero(bad)
            raise SingularMatrixError(
                f"singular matrix (pivot {pivot_mag[idx[0]]:.3e} in column "
                f"{col}, batch index {idx[0]})")
        swap = piv != col
        if np.any(swap):
            s = rows[swap]
            p = piv[swap]
            det[s] = -det[s]
            tmp = work[s, col, :].copy()
            work[s, col, :] = work[s, p, :]
            work[s, p, :] = tmp
            tmp = rhs[s, col, :].copy()
            rhs[s, col, :] = rhs[s, p, :]
            rhs[s, p, :] = tmp
        pivot = work[:, col, col].copy()
        det *= pivot
        work[:, col, :] /= pivot[:, None]
        rhs[:, col, :] /= pivot[:, None]
        factor = work[:, :, col].copy()
        factor[:, col] = 0.0
        # Full Gauss-Jordan sweep: clear the column above and below the pivot.
        work -= factor[:, :, None] * work[:, col, None, :]
        rhs -= factor[:, :, None] * rhs[:, col, None, :]

    det = det.reshape(batch_shape)
    if not want_inverse:
        return None, det
    return rhs.reshape(batch_shape + (n, n)), det


def inverse(a):
    """Invert a square matrix (or a stack of them).

    Gaussian elimination with partial pivoting on magnitude. A pivot
    smaller than ``1e-12`` times the largest initial entry magnitude of
    its matrix raises :class:`SingularMatrixError`.

    Parameters
    ----------
    a : array_like, shape (..., n, n)

    Returns
    -------
    numpy.ndarray, shape (..., n, n)
    """
    inv, _ = _eliminate(a, want_inverse=True)
    return inv


def determinant(a):
    """Determinant from the same pivoted elimination as :func:`inverse`.

    A single numerically singular matrix gives 0; for a stack the
    :class:`SingularMatrixError` propagates.
    """
    try:
        _, det = _eliminate(a, want_inverse=False)
    except SingularMatrixError:
        if np.ndim(a) == 2:
            return 0j
        raise
    return det


def trace_real(a):
    """Sum of the real parts of the diagonal."""
    a = _check_square_stack(a)
    return float(np.sum(a.real.diagonal()))


def hermitian_eigenvalues(a, rtol=JACOBI_RTOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of a Hermitian matrix, ascending.

    Cyclic complex Jacobi: each off-diagonal pair (p, q) is annihilated by
    a unitary plane rotation. Iteration stops once the off-diagonal
    Frobenius norm drops below ``rtol * ||a||_F``.

    Raises
    ------
    ValueError
        If `a` is not square or not Hermitian within ``1e-10`` elementwise.
    ConvergenceError
        If the sweep budget is exhausted.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if a.shape[1] != n:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_ATOL:
        raise ValueError("matrix is not Hermitian")
    work = 0.5 * (a + a.conj().T)
    target = rtol * np.linalg.norm(work)

    off_diag = ~np.eye(n, dtype=bool)

    def off_norm(m):
        return np.linalg.norm(m[off_diag])

    for _ in range(max_sweeps):
        if off_norm(work) <= target:
            return np.sort(work.real.diagonal())
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                app = work[p, p].real
                aqq = work[q, q].real
                # diag(1, e^{-i phi}) makes the (p, q) block real symmetric,
                # then a real Jacobi rotation zeroes it.
                phase = np.conj(apq) / mag
                theta = (aqq - app) / (2.0 * mag)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = work[:, p].copy()
                col_q = work[:, q] * phase
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q
                row_p = work[p, :].copy()
                row_q = work[q, :] * np.conj(phase)
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0
    if off_norm(work) <= target:
        return np.sort(work.real.diagonal())
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
