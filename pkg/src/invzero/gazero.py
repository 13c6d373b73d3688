"""Geometric-approach zeros from controlled and conditioned invariants.

``V*`` is the largest subspace of ker C that a state feedback can keep
invariant, ``S*`` the smallest conditioned invariant containing im B, and
``R* = V* & S*`` the reachable part of ``V*``.  The invariant zeros are the
eigenvalues of the map induced by ``A + BF`` on ``V* / R*``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .linalg import DEFAULT_TOL, eigenvalues, nullspace, orth, pseudoinverse
from .model import ZeroMultiset

#: subspaces produced by earlier steps carry rounding error, so rank
#: decisions inside the iterations use at least this relative threshold
SUBSPACE_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class GeometricSubspaces:
    kerC: np.ndarray
    imB: np.ndarray
    Vstar: np.ndarray
    Sstar: np.ndarray
    Rstar: np.ndarray
    V1: np.ndarray
    X22: np.ndarray
    mainco_dims: tuple = ()
    miinco_dims: tuple = ()


def _empty(n):
    return np.zeros((n, 0))


def subspace_sum(U, W, tol=None):
    return orth(np.hstack([U, W]), tol)


def subspace_intersection(U, W, tol=None):
    """Orthonormal basis of range(U) & range(W).

    Coefficients ``[a; b]`` with ``U a = W b`` span the nullspace of
    ``[U, -W]``; their images ``U a`` span the intersection.
    """
    U, W = np.atleast_2d(U), np.atleast_2d(W)
    if U.shape[0] != W.shape[0]:
        raise InvalidInputError(f"ambient dimensions differ: {U.shape[0]} vs {W.shape[0]}")
    n = U.shape[0]
    if U.shape[1] == 0 or W.shape[1] == 0:
        return _empty(n)
    Uo, Wo = orth(U, tol), orth(W, tol)
    if Uo.shape[1] == 0 or Wo.shape[1] == 0:
        return _empty(n)
    N = nullspace(np.hstack([Uo, -Wo]), tol)
    if N.shape[1] == 0:
        return _empty(n)
    return orth(Uo @ N[: Uo.shape[1]], tol)


def preimage(A, X, tol=None):
    """Orthonormal basis of ``{x : A x in range(X)}``.

    Computed as the nullspace of ``(I - P_X) A`` with ranks judged
    against ``|A|``.
    """
    n = A.shape[1]
    normA = np.linalg.norm(A, 2)
    if normA == 0.0:
        return np.eye(n)
    Q = orth(X, tol) if X.shape[1] else _empty(A.shape[0])
    residual = A - Q @ (Q.T @ A)
    return nullspace(residual, tol, scale=normA)


def mainco(A, imB, kerC, tol=None, return_dims=False):
    """Maximal ``(A, im B)``-controlled invariant inside ker C.

    ``V_0 = ker C``, ``V_{k+1} = ker C & A^-1(V_k + im B)`` until the
    dimension stops decreasing.
    """
    tol = DEFAULT_TOL if tol is None else tol
    V = orth(kerC, tol) if kerC.shape[1] else _empty(A.shape[0])
    dims = [V.shape[1]]
    while V.shape[1] > 0:
        target = np.hstack([V, imB])
        nxt = subspace_intersection(kerC, preimage(A, target, tol), tol)
        dims.append(nxt.shape[1])
        if nxt.shape[1] == V.shape[1]:
            V = nxt
            break
        V = nxt
    return (V, tuple(dims)) if return_dims else V


def miinco(A, kerC, imB, tol=None, return_dims=False):
    """Minimal ``(A, ker C)``-conditioned invariant containing im B.

    ``S_0 = im B & ker C``, ``S_{k+1} = A (S_k & ker C) + im B`` until the
    dimension stops increasing.
    """
    tol = DEFAULT_TOL if tol is None else tol
    n = A.shape[0]
    normA = np.linalg.norm(A, 2)
    S = subspace_intersection(imB, kerC, tol)
    dims = [S.shape[1]]
    while True:
        inner = subspace_intersection(S, kerC, tol)
        image = orth(A @ inner, tol, scale=normA) if inner.shape[1] else _empty(n)
        nxt = subspace_sum(image, imB, tol) if (image.shape[1] or imB.shape[1]) else _empty(n)
        dims.append(nxt.shape[1])
        if nxt.shape[1] == S.shape[1]:
            S = nxt
            break
        S = nxt
    return (S, tuple(dims)) if return_dims else S


def _ordered_basis(R, V, tol):
    """Orthonormal basis of range([R, V]) whose leading columns span range(R)."""
    n = V.shape[0]
    extra = V - R @ (R.T @ V)
    complement = orth(extra, tol) if extra.shape[1] else _empty(n)
    return np.hstack([R, complement])


def geometric_subspaces(sys, tol=None):
    tol = (DEFAULT_TOL if tol is None else tol).loosened(SUBSPACE_FLOOR)
    A, B, C = sys.A, sys.B, sys.C
    n = sys.n_states
    kerC = nullspace(C, tol)
    imB = orth(B, tol)
    Vstar, vdims = mainco(A, imB, kerC, tol, return_dims=True)
    if Vstar.shape[1] == 0:
        return GeometricSubspaces(kerC, imB, Vstar, _empty(n), _empty(n), _empty(n),
                                  np.zeros((0, 0)), vdims, ())
    Sstar, sdims = miinco(A, kerC, imB, tol, return_dims=True)
    Rstar = subspace_intersection(Vstar, Sstar, tol)
    V1 = Vstar if Rstar.shape[1] == 0 else _ordered_basis(Rstar, Vstar, tol)
    nV, nR = V1.shape[1], Rstar.shape[1]
    X = pseudoinverse(np.hstack([V1, B]), tol) @ A @ V1
    X22 = X[nR:nV, nR:nV]
    return GeometricSubspaces(kerC, imB, Vstar, Sstar, Rstar, V1, X22, vdims, sdims)


def gazero_zeros(sys, tol=None):
    """Invariant zeros of a ``D = 0`` system from the geometric subspaces."""
    if sys.has_feedthrough:
        raise InvalidInputError("geometric method needs D = 0; extend the system first")
    sub = geometric_subspaces(sys, tol)
    zeros = eigenvalues(sub.X22) if sub.X22.size else np.zeros(0, dtype=complex)
    return ZeroMultiset(zeros, "gazero", info={
        "dim_Vstar": sub.Vstar.shape[1],
        "dim_Rstar": sub.Rstar.shape[1],
    })
