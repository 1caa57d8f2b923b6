"""Dense complex linear algebra used by every other module.

Vectorization is column stacking throughout: entry ``(i, j)`` of a ``D x D``
matrix lands at index ``j * D + i``, so that ``vec(A X B) = (B^T kron A) vec(X)``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import expm_multiply

DEFAULT_KERNEL_TOL = 1e-10
# eigenvector matrices conditioned worse than this are reported as near-defective
DEFECTIVE_COND = 1e8


class EigenSolverError(RuntimeError):
    """Raised when the dense eigensolver fails to converge."""


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D complex array."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _square(m, name="matrix"):
    arr = as_matrix(m, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def kron(a, b):
    """Kronecker product with shape ``(r_a r_b, c_a c_b)``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vectorize(rho):
    """Column-stack a square matrix into a vector."""
    rho = _square(rho, "rho")
    return rho.reshape(-1, order="F")


def devectorize(v, dim=None):
    """Inverse of :func:`vectorize`.

    ``dim`` is inferred from the length of ``v`` when omitted.
    """
    v = np.asarray(v, dtype=complex).ravel()
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized {dim}x{dim} matrix")
    return v.reshape(dim, dim, order="F")


@dataclass(frozen=True)
class EigResult:
    """Eigenpairs sorted by descending real part.

    ``residuals[k]`` is ``||M v_k - lambda_k v_k|| / ||M||`` for the unit
    vector ``v_k``. ``basis_cond`` is the 2-norm condition number of the
    eigenvector matrix; a defective or nearly defective ``M`` shows up there
    even when the individual residuals are small.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    basis_cond: float

    @property
    def residual_max(self):
        return float(self.residuals.max()) if self.residuals.size else 0.0

    @property
    def near_defective(self):
        return not np.isfinite(self.basis_cond) or self.basis_cond > DEFECTIVE_COND

    def __iter__(self):
        return iter(zip(self.values, self.vectors.T))

    def __len__(self):
        return self.values.size


def _order(values):
    # descending real part, ties by descending imaginary part
    return np.lexsort((-values.imag, -values.real))


def eigvals_sorted(m):
    """Eigenvalues only, sorted by descending real part."""
    m = _square(m)
    try:
        w = scipy.linalg.eigvals(m, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(
            f"eigenvalue iteration failed for {m.shape[0]}x{m.shape[0]} matrix: {exc}"
        ) from exc
    return w[_order(w)]


def eig_general(m):
    """Eigendecomposition of a general (non-Hermitian) square matrix.

    Uses LAPACK's Hessenberg/Schur QR iteration. Residuals are computed for
    every pair and returned, never used to reject a result.
    """
    m = _square(m)
    try:
        w, v = scipy.linalg.eig(m, check_finite=False)
    except np.linalg.LinAlgError as exc:
        # geev reports the index of the first eigenvalue that failed to converge
        raise EigenSolverError(
            f"QR iteration failed for {m.shape[0]}x{m.shape[0]} matrix "
            f"(||M||_F = {np.linalg.norm(m):.3e}): {exc}"
        ) from exc
    order = _order(w)
    w, v = w[order], v[:, order]
    scale = np.linalg.norm(m, 2) if m.size else 1.0
    scale = scale if scale > 0 else 1.0
    res = np.linalg.norm(m @ v - v * w, axis=0) / scale
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(v)) if v.size else 1.0
    return EigResult(values=w, vectors=v, residuals=res, basis_cond=cond)


def expm_apply(m, v, t):
    """Return ``exp(m t) v``.

    Uses the Al-Mohy--Higham truncated Taylor scheme, which only needs
    matrix-vector products.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    m = _square(m)
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != m.shape[0]:
        raise ValueError(f"vector of length {v.shape[0]} incompatible with {m.shape} matrix")
    if t == 0:
        return v.copy()
    return expm_multiply(m * t, v)


def null_space(m, tol=DEFAULT_KERNEL_TOL):
    """Orthonormal basis (as columns) of the numerical kernel of ``m``.

    Singular values at or below ``tol`` times the largest one count as zero.
    Rectangular (e.g. stacked) matrices are accepted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = as_matrix(m)
    if not np.any(m):
        return np.eye(m.shape[1], dtype=complex)
    return scipy.linalg.null_space(m, rcond=tol)


def hs_norm(m):
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(m))


def dagger(m):
    return np.conj(np.asarray(m)).T
