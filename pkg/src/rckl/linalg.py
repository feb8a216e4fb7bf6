"""Dense symmetric eigen-computations.

Matrices are plain float64 numpy arrays kept symmetric by construction;
every routine here treats its input as read-only.  The extremal solver is
iterative (Lanczos via ARPACK) with O(n^2) cost per matrix-vector product,
so no full decomposition is ever formed on that path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import NonConvergenceError

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray  # unit Euclidean norm


def check_symmetric(mat: np.ndarray, tol: float = 1e-9) -> None:
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.allclose(mat, mat.T, atol=tol, rtol=0):
        raise ValueError("matrix is not symmetric")


def sym_set(mat: np.ndarray, i: int, j: int, value: float) -> None:
    """Mirrored write: keeps the matrix symmetric."""
    mat[i, j] = value
    mat[j, i] = value


def _deterministic_start(n: int) -> np.ndarray:
    # Fixed start vector so repeated runs give bit-identical eigenpairs.
    v = np.ones(n)
    return v / np.linalg.norm(v)


def smallest_eigenpair(
    mat: np.ndarray, tol: float = DEFAULT_TOL, v0: np.ndarray | None = None
) -> EigenPair:
    """Algebraically smallest eigenpair, without a full decomposition.

    Residual contract: ||Mv - lambda v|| <= tol * max(1, ||M||_F).
    v0 optionally warm-starts the iteration (e.g. the previous smallest
    eigenvector when the matrix changed by a small sparse step).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = mat.shape[0]
    try:
        vals, vecs = eigsh(
            mat,
            k=1,
            which="SA",
            v0=v0 if v0 is not None else _deterministic_start(n),
            tol=tol,
            maxiter=50 * n,
        )
    except (ArpackNoConvergence, ArpackError) as exc:
        raise NonConvergenceError(str(exc)) from exc
    vec = vecs[:, 0]
    return EigenPair(float(vals[0]), vec / np.linalg.norm(vec))


def largest_eigenvalue_bound(mat: np.ndarray) -> float:
    """Gershgorin upper bound on the largest eigenvalue."""
    diag = np.diag(mat)
    radii = np.sum(np.abs(mat), axis=1) - np.abs(diag)
    return float(np.max(diag + radii))


def full_eigendecomposition(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full symmetric decomposition, eigenvalues sorted descending.

    Returns (values, vectors) with vectors[:, i] the unit eigenvector of
    values[i]; mat == vectors @ diag(values) @ vectors.T up to rounding.
    """
    try:
        vals, vecs = np.linalg.eigh(mat)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(str(exc)) from exc
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def top_k_eigenpairs(mat: np.ndarray, k: int) -> list[EigenPair]:
    """The k algebraically largest eigenpairs, sorted descending."""
    n = mat.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    # ARPACK needs k strictly below n with room for the Krylov basis;
    # small or near-full requests go through the dense path instead.
    if k <= n - 2 and n >= 4:
        try:
            vals, vecs = eigsh(
                mat, k=k, which="LA", v0=_deterministic_start(n), maxiter=50 * n
            )
        except (ArpackNoConvergence, ArpackError) as exc:
            raise NonConvergenceError(str(exc)) from exc
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
    else:
        vals, vecs = full_eigendecomposition(mat)
        vals, vecs = vals[:k], vecs[:, :k]
    return [
        EigenPair(float(vals[i]), vecs[:, i] / np.linalg.norm(vecs[:, i]))
        for i in range(k)
    ]
