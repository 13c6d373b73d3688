"""Rosenbrock pencil evaluation and zero oracles.

Everything here works directly on ``chi(s) = [[sI - A, B], [C, -D]]`` and
is independent of the invariant zero form, so it can serve as ground truth
for the other methods.
"""

from dataclasses import dataclass

import numpy as np

from .errors import OracleNotApplicable
from .linalg import DEFAULT_TOL, eigenvalues, numerical_rank, pseudoinverse, singular_values
from .model import ZeroMultiset

#: candidate zeros are only known to eigensolver accuracy, so the rank test
#: at a candidate uses at least this relative singular-value threshold
VERIFY_FLOOR = 1e-7

#: interpolated determinant coefficients below this fraction of the largest
#: one are treated as zero when fixing the polynomial degree
DEGREE_CUTOFF = 1e-8

DEFAULT_SAMPLES = 7

#: a verified candidate must also be a local minimum of the smallest
#: relevant singular value: at most `LOCAL_CONTRAST` times its minimum over
#: a circle of radius ``LOCAL_RADIUS * (1 + |z|)`` around the candidate.
#: This separates zeros from points where chi is merely small, such as far
#: from the origin on systems of high relative degree.
LOCAL_RADIUS = 1e-3
LOCAL_CONTRAST = 1e-2
LOCAL_POINTS = 8


@dataclass(frozen=True)
class PencilEvaluation:
    point: complex
    chi_rank: int
    normal_rank: int
    drops: bool
    sigma_ratio: float  # sigma_{normal_rank} / sigma_max at the point


def rosenbrock_matrix(sys, s):
    """``[[sI - A, B], [C, -D]]`` evaluated at the complex point `s`."""
    nx = sys.n_states
    top = np.hstack([s * np.eye(nx) - sys.A, sys.B])
    bottom = np.hstack([sys.C, -sys.D])
    return np.vstack([top, bottom]).astype(complex)


def spectral_radius(A):
    return float(np.max(np.abs(eigenvalues(A)))) if np.size(A) else 0.0


def evaluate_pencil(sys, s, normal_rank, tol=None):
    chi = rosenbrock_matrix(sys, complex(s))
    sv = singular_values(chi)
    rank = numerical_rank(chi, tol)
    k = normal_rank - 1
    ratio = float(sv[k] / sv[0]) if 0 <= k < sv.size and sv[0] > 0 else 0.0
    return PencilEvaluation(complex(s), rank, int(normal_rank), rank < normal_rank, ratio)


def estimate_normal_rank(sys, tol=None, samples=DEFAULT_SAMPLES, seed=0):
    """Largest numerical rank of ``chi(s)`` over pseudo-random points.

    Points lie on a circle of radius ``2 (1 + spectral radius of A)`` at
    angles drawn from ``numpy.random.default_rng(seed)``.
    """
    if samples < 3:
        raise ValueError("need at least 3 sample points")
    rng = np.random.default_rng(seed)
    radius = 2.0 * (1.0 + spectral_radius(sys.A))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=samples)
    return max(numerical_rank(rosenbrock_matrix(sys, radius * np.exp(1j * t)), tol)
               for t in angles)


def local_contrast(sys, z, normal_rank):
    """``sigma_k(chi(z)) / min sigma_k(chi(w))`` over a small circle of points ``w``.

    ``k`` is the normal rank.  Near zero at an invariant zero, about one
    elsewhere.
    """
    k = normal_rank - 1
    if k < 0:
        return 1.0
    z = complex(z)
    radius = LOCAL_RADIUS * (1.0 + abs(z))
    ring = z + radius * np.exp(2j * np.pi * (np.arange(LOCAL_POINTS) + 0.5) / LOCAL_POINTS)
    around = min(singular_values(rosenbrock_matrix(sys, w))[k] for w in ring)
    here = singular_values(rosenbrock_matrix(sys, z))[k]
    return float(here / around) if around > 0 else 1.0


def verify_zeros(sys, candidates, tol=None, normal_rank=None, seed=0):
    """Flag each candidate by whether ``chi`` loses rank there.

    Locations only; multiplicities are taken from the candidates as given.
    The rank threshold at a candidate is at least `VERIFY_FLOOR` relative,
    and a rank drop only counts when the candidate is also a sharp local
    minimum of the pencil (see `local_contrast`).
    """
    tol = DEFAULT_TOL if tol is None else tol
    if not isinstance(candidates, ZeroMultiset):
        candidates = ZeroMultiset(candidates, "candidates")
    if len(candidates) == 0:
        return candidates.with_verification(np.zeros(0, dtype=bool))
    if normal_rank is None:
        normal_rank = estimate_normal_rank(sys, tol, seed=seed)
    loose = tol.loosened(VERIFY_FLOOR)
    evals = [evaluate_pencil(sys, z, normal_rank, loose) for z in candidates.values]
    contrast = [local_contrast(sys, e.point, normal_rank) if e.drops else 1.0 for e in evals]
    return candidates.with_verification(
        [e.drops and c <= LOCAL_CONTRAST for e, c in zip(evals, contrast)],
        normal_rank=normal_rank,
        pencil_ranks=[e.chi_rank for e in evals],
        contrast=contrast,
    )


def companion_roots(coeffs):
    """Roots of ``sum_k coeffs[k] * w**k`` via companion-matrix eigenvalues."""
    c = np.asarray(coeffs, dtype=complex if np.iscomplexobj(coeffs) else float)
    c = np.trim_zeros(c, "b")
    n = c.size - 1
    if n <= 0:
        return np.zeros(0, dtype=complex)
    M = np.zeros((n, n), dtype=c.dtype)
    if n > 1:
        M[np.arange(1, n), np.arange(n - 1)] = 1.0
    M[:, -1] = -c[:-1] / c[-1]
    return eigenvalues(M)


def zeros_by_det_interpolation(sys, tol=None, seed=0):
    """Zeros of a square system as roots of ``det chi(s)``.

    ``det chi`` is a polynomial of degree at most ``l_x``.  It is sampled at
    ``l_x + 1`` roots of unity scaled to radius ``1 + spectral radius of A``
    and its coefficients recovered by a discrete Fourier transform.
    """
    if not sys.is_square:
        raise OracleNotApplicable("determinant oracle needs a square system")
    nx = sys.n_states
    size = nx + sys.n_inputs
    nrank = estimate_normal_rank(sys, tol, seed=seed)
    if nrank < size:
        raise OracleNotApplicable(
            f"pencil is not regular: normal rank {nrank} < {size}")

    n_nodes = nx + 1
    radius = 1.0 + spectral_radius(sys.A)
    nodes = radius * np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    dets = np.array([np.linalg.det(rosenbrock_matrix(sys, s)) for s in nodes])
    # dets[k] = sum_j d_j w_k**j with w_k = exp(2 pi i k / N), d_j = c_j radius**j
    scaled = np.fft.fft(dets) / n_nodes
    scaled = scaled.real  # real realization: real polynomial
    peak = np.max(np.abs(scaled))
    if peak == 0.0:
        raise OracleNotApplicable("determinant vanishes at every node")
    keep = np.nonzero(np.abs(scaled) > DEGREE_CUTOFF * peak)[0]
    degree = int(keep[-1])
    w = companion_roots(scaled[: degree + 1])
    zeros = radius * w
    return ZeroMultiset(zeros, "detinterp", info={"degree": degree, "radius": radius,
                                                  "normal_rank": nrank})


@dataclass(frozen=True)
class ProofDiagnostics:
    """Rank diagnostics of the zero-dynamics pencil at a point."""

    point: complex
    Phi: np.ndarray
    Psi: np.ndarray
    Xi: np.ndarray
    product_rank: int

    @property
    def product(self):
        return self.Phi @ self.Psi @ self.Xi


def proof_diagnostics(form, s, tol=None):
    """``Phi(s)``, ``Psi(s)``, ``Xi`` and ``rank(Phi Psi Xi)`` for a decomposed system.

    ``Phi(s) = I - M M^+`` with ``M = [[sI - A_eta, 0], [-A_xieta, B_xi]]``,
    ``Psi(s) = [-A_etaxi; sI - A_xi]`` and ``Xi = I - C_xi^+ C_xi``.  For a
    square system the rank of the product is ``rho - l_y`` at every point.
    """
    s = complex(s)
    l_eta = form.A_eta.shape[0]
    rho = form.A_xi.shape[0]
    nu = form.B_xi.shape[1]
    M = np.zeros((l_eta + rho, l_eta + nu), dtype=complex)
    M[:l_eta, :l_eta] = s * np.eye(l_eta) - form.A_eta
    M[l_eta:, :l_eta] = -form.A_xieta
    M[l_eta:, l_eta:] = form.B_xi
    Phi = np.eye(l_eta + rho) - M @ pseudoinverse(M, tol)
    Psi = np.vstack([-form.A_etaxi, s * np.eye(rho) - form.A_xi]).astype(complex)
    Xi = np.eye(rho) - pseudoinverse(form.C_xi, tol) @ form.C_xi
    product = Phi @ Psi @ Xi
    # Phi and Xi are projectors, so |Psi| is the scale the product is judged against
    scale = np.linalg.norm(Psi, 2) if Psi.size else 0.0
    rank = numerical_rank(product, tol, scale=scale) if product.size and scale > 0 else 0
    return ProofDiagnostics(s, Phi, Psi, Xi, rank)


def zero_dynamics_block_rank(form, s, tol=None):
    """``(rank [[sI - A_eta, 0], [-A_xieta, B_xi]], rank(sI - A_eta), rank B_xi)``."""
    l_eta = form.A_eta.shape[0]
    rho = form.A_xi.shape[0]
    nu = form.B_xi.shape[1]
    M = np.zeros((l_eta + rho, l_eta + nu), dtype=complex)
    pencil = complex(s) * np.eye(l_eta) - form.A_eta
    M[:l_eta, :l_eta] = pencil
    M[l_eta:, :l_eta] = -form.A_xieta
    M[l_eta:, l_eta:] = form.B_xi
    r_pencil = numerical_rank(pencil, tol) if l_eta else 0
    return numerical_rank(M, tol), r_pencil, numerical_rank(form.B_xi, tol)
