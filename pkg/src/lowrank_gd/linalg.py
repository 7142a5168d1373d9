"""Dense matrix kernels shared by every solver module.

All routines operate on plain 2-D float64 numpy arrays and are pure
functions of their inputs. Decompositions are delegated to LAPACK via
numpy; the wrappers pin down validation, ordering conventions, and the
error behaviour the solvers rely on.
"""

import numpy as np

# Entrywise tolerance below which a matrix counts as symmetric. Inputs
# within this band are symmetrized before decomposing, so repeated
# floating-point updates do not poison eigensolves.
SYMMETRY_TOL = 1e-12

# Smallest admissible eigenvalue for inverse-square-root inputs.
SPD_MIN_EIG = 1e-12


class NumericalError(RuntimeError):
    """A matrix decomposition failed to converge."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce ``m`` to a 2-D float64 array, checking shape and finiteness."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def frobenius_norm(m) -> float:
    """Frobenius norm: sqrt of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(m), "fro"))


def singular_values(m) -> np.ndarray:
    """Singular values of ``m`` in descending order.

    Raises NumericalError if the underlying iteration does not converge.
    """
    a = as_matrix(m)
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - hard to trigger
        raise NumericalError(f"singular value iteration did not converge: {exc}") from exc


def _require_symmetric(a: np.ndarray, name: str) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    drift = float(np.max(np.abs(a - a.T)))
    if drift > SYMMETRY_TOL:
        raise ValueError(
            f"{name} is not symmetric: max |S - S^T| = {drift:.3e} > {SYMMETRY_TOL:.0e}"
        )
    return 0.5 * (a + a.T)


def sym_eig(s):
    """Eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    s : array_like
        Square matrix, symmetric to within ``SYMMETRY_TOL`` entrywise.

    Returns
    -------
    eigenvalues : ndarray
        In descending order.
    eigenvectors : ndarray
        Orthonormal columns; column ``i`` pairs with ``eigenvalues[i]``.
    """
    a = _require_symmetric(as_matrix(s, "sym_eig input"), "sym_eig input")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"symmetric eigensolve did not converge: {exc}") from exc
    # eigh returns ascending order
    return w[::-1], v[:, ::-1]


def svd(m):
    """Thin SVD ``m = left @ diag(s) @ right.T`` with descending ``s``."""
    a = as_matrix(m)
    try:
        left, s, right_t = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return left, s, right_t.T


def spd_inv_sqrt(s) -> np.ndarray:
    """Inverse square root of a symmetric positive definite matrix.

    Returns the symmetric ``R`` with ``R @ S @ R = I``. Raises ValueError
    when the smallest eigenvalue is at or below ``SPD_MIN_EIG``, which for
    the retraction use case signals a rank-deficient frame.
    """
    a = _require_symmetric(as_matrix(s, "spd_inv_sqrt input"), "spd_inv_sqrt input")
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"symmetric eigensolve did not converge: {exc}") from exc
    if w[0] <= SPD_MIN_EIG:
        raise ValueError(
            f"matrix is not positive definite (smallest eigenvalue {w[0]:.3e}): "
            "frame is rank deficient"
        )
    r = (v / np.sqrt(w)) @ v.T
    return 0.5 * (r + r.T)
