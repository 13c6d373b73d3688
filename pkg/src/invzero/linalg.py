"""Dense matrix kernels with explicit rank semantics.

Rank, nullspaces, ranges and the pseudoinverse are all read off one
singular value decomposition so that every rank decision in the package is
made against the same threshold.
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as spla

from .errors import InvalidInputError, NumericalFailure, SingularMatrixError

EPS = np.finfo(float).eps

#: multiplier on ``max(rows, cols) * eps`` for the default rank threshold
DEFAULT_RANK_FACTOR = 64.0

#: inversions beyond this condition estimate are refused
MAX_CONDITION = 1e13


@dataclass(frozen=True)
class RankTolerance:
    """Relative singular-value threshold used for every rank decision.

    A singular value counts towards the rank when it exceeds
    ``threshold * sigma_max``.  With ``relative_threshold=None`` the
    threshold depends on the matrix shape, ``max(m, n) * eps * 64``.
    """

    relative_threshold: float | None = None
    description: str = "max(rows, cols) * eps * 64"
    floor: float = 0.0

    def __post_init__(self):
        if self.relative_threshold is not None:
            r = float(self.relative_threshold)
            if not np.isfinite(r) or r <= 0:
                raise InvalidInputError(
                    f"relative_threshold must be positive, got {self.relative_threshold!r}")

    @classmethod
    def fixed(cls, value, description=None):
        return cls(float(value), description or f"fixed {value:g}")

    def threshold(self, shape):
        if self.relative_threshold is not None:
            base = float(self.relative_threshold)
        else:
            base = max(max(shape), 1) * EPS * DEFAULT_RANK_FACTOR
        return max(base, self.floor)

    def loosened(self, floor):
        """Same tolerance, but never tighter than `floor`."""
        return replace(self, floor=max(self.floor, float(floor)))


DEFAULT_TOL = RankTolerance()


def as_matrix(M, name="matrix"):
    """Return `M` as a finite 2-D float or complex array."""
    try:
        arr = np.asarray(M)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: not a numeric array ({exc})") from exc
    if arr.dtype == object:
        raise InvalidInputError(f"{name}: ragged or non-numeric entries")
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D matrix, got ndim={arr.ndim}")
    if np.iscomplexobj(arr):
        arr = arr.astype(complex)
    else:
        try:
            arr = arr.astype(float)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"{name}: non-numeric entries") from exc
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: contains NaN or Inf")
    return arr


def _tol(tol):
    return DEFAULT_TOL if tol is None else tol


def singular_values(M):
    M = as_matrix(M)
    if M.size == 0:
        return np.zeros(0)
    try:
        return spla.svdvals(M)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def _rank_from_sv(sv, shape, tol, scale=None):
    ref = sv[0] if (scale is None and sv.size) else scale
    if sv.size == 0 or not ref:
        return 0
    return int(np.count_nonzero(sv > _tol(tol).threshold(shape) * ref))


def _svd(M):
    try:
        return spla.svd(M, full_matrices=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def numerical_rank(M, tol=None, scale=None):
    """Number of singular values above ``threshold * sigma_max``.

    `scale` replaces ``sigma_max`` as the reference magnitude, for matrices
    that are residuals of a larger computation.
    """
    M = as_matrix(M)
    return _rank_from_sv(singular_values(M), M.shape, tol, scale)


def nullspace_rows(M, tol=None):
    """Orthonormal rows spanning the left nullspace of `M`.

    Returns ``N`` with ``N @ M ~ 0`` and ``N @ N^H = I``; it has
    ``rows(M) - rank(M)`` rows.
    """
    M = as_matrix(M)
    m, n = M.shape
    if n == 0:
        return np.eye(m, dtype=M.dtype)
    if m == 0:
        return np.zeros((0, 0), dtype=M.dtype)
    U, sv, _ = _svd(M)
    r = _rank_from_sv(sv, M.shape, tol)
    return U[:, r:].conj().T


def nullspace(M, tol=None, scale=None):
    """Orthonormal columns spanning the (right) nullspace of `M`."""
    M = as_matrix(M)
    m, n = M.shape
    if m == 0:
        return np.eye(n, dtype=M.dtype)
    if n == 0:
        return np.zeros((0, 0), dtype=M.dtype)
    _, sv, Vh = _svd(M)
    r = _rank_from_sv(sv, M.shape, tol, scale)
    return Vh[r:].conj().T


def orth(M, tol=None, scale=None):
    """Orthonormal columns spanning the range of `M` (possibly zero columns)."""
    M = as_matrix(M)
    m, n = M.shape
    if m == 0 or n == 0:
        return np.zeros((m, 0), dtype=M.dtype)
    U, sv, _ = _svd(M)
    r = _rank_from_sv(sv, M.shape, tol, scale)
    return U[:, :r]


def pseudoinverse(M, tol=None):
    """Moore-Penrose pseudoinverse with the shared rank threshold."""
    M = as_matrix(M)
    m, n = M.shape
    if M.size == 0:
        return np.zeros((n, m), dtype=M.dtype)
    try:
        U, sv, Vh = spla.svd(M, full_matrices=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    r = _rank_from_sv(sv, M.shape, tol)
    return (Vh[:r].conj().T / sv[:r]) @ U[:, :r].conj().T


def eigenvalues(M):
    """All eigenvalues of a square matrix, with multiplicity.

    Real input yields exact conjugate pairs (LAPACK ``geev``).
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"eigenvalues need a square matrix, got {M.shape}")
    if M.size == 0:
        return np.zeros(0, dtype=complex)
    try:
        ev = spla.eigvals(M, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigenvalue iteration failed on {M.shape} matrix: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericalFailure("eigensolver returned non-finite values")
    return ev.astype(complex)


def condition_number(M):
    sv = singular_values(M)
    if sv.size == 0:
        return 1.0
    if sv[-1] == 0.0:
        return float("inf")
    return float(sv[0] / sv[-1])


def solve_or_invert(M, rhs=None, max_condition=MAX_CONDITION):
    """Return ``(M^-1 @ rhs, cond(M))``, or ``(M^-1, cond(M))`` without `rhs`.

    Raises `SingularMatrixError` when the 2-norm condition number exceeds
    `max_condition`.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"cannot invert non-square {M.shape} matrix")
    cond = condition_number(M)
    if not cond <= max_condition:
        raise SingularMatrixError("matrix is singular to working precision", cond)
    if rhs is None:
        rhs = np.eye(M.shape[0])
    try:
        X = spla.solve(M, rhs)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularMatrixError(str(exc), cond) from exc
    return X, cond


def projector_complement(M, tol=None):
    """``I - Q Q^H`` where ``Q`` is an orthonormal basis of range(M)."""
    M = as_matrix(M)
    Q = orth(M, tol)
    return np.eye(M.shape[0]) - Q @ Q.conj().T


def delta_matrix(n, s):
    """Lower bidiagonal ``n x n`` matrix with -1 on the diagonal, `s` below."""
    D = -np.eye(n, dtype=complex)
    if n > 1:
        D[np.arange(1, n), np.arange(n - 1)] = s
    return D
