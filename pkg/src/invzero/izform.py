"""Invariant zero form of a square state-space system.

The state is split as ``[eta; xi] = T x`` with ``T = [Bz; Cbar]``.  ``Cbar``
stacks ``C_i, C_i A, ..., C_i A^(rho_i - 1)`` for every output and ``Bz``
is drawn from the left nullspace of ``B``.  In these coordinates the input
only drives the last state of each output chain, the output reads the first
one, and the invariant zeros of a square system are the eigenvalues of the
upper-left block ``A_eta`` of ``T A T^-1``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DecompositionNotApplicable, SingularMatrixError, StructureViolation
from .linalg import (
    DEFAULT_TOL,
    as_matrix,
    eigenvalues,
    nullspace_rows,
    numerical_rank,
    orth,
    pseudoinverse,
    solve_or_invert,
)
from .model import ZeroMultiset, relative_degree
from .rosenbrock import verify_zeros

STRUCTURE_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class TransformationBundle:
    Bbar: np.ndarray
    Cbar: np.ndarray
    Bz: np.ndarray
    T: np.ndarray
    S: np.ndarray
    condition_T: float
    rho_profile: tuple

    @property
    def l_eta(self):
        return self.Bz.shape[0]

    @property
    def S_eta(self):
        return self.S[:, : self.l_eta]

    @property
    def S_xi(self):
        return self.S[:, self.l_eta:]


@dataclass(frozen=True, eq=False)
class InvariantZeroForm:
    A_eta: np.ndarray
    A_etaxi: np.ndarray
    A_xieta: np.ndarray
    A_xi: np.ndarray
    B_xi: np.ndarray
    C_xi: np.ndarray
    bundle: TransformationBundle
    rho_profile: object
    residuals: dict = field(default_factory=dict)
    structure_tol: float = 0.0
    full_rank_B_xi: bool = True

    @property
    def A(self):
        return np.block([[self.A_eta, self.A_etaxi], [self.A_xieta, self.A_xi]])

    @property
    def B(self):
        return np.vstack([np.zeros((self.l_eta, self.B_xi.shape[1])), self.B_xi])

    @property
    def C(self):
        return np.hstack([np.zeros((self.C_xi.shape[0], self.l_eta)), self.C_xi])

    @property
    def l_eta(self):
        return self.A_eta.shape[0]

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)


def stacked_output_rows(sys, profile):
    """``Cbar``: ``C_i A^k`` for ``k < rho_i``, grouped by output."""
    rows = []
    for c, r in zip(sys.C, profile):
        row = c.copy()
        for _ in range(r):
            rows.append(row)
            row = row @ sys.A
    return np.array(rows).reshape(len(rows), sys.n_states)


def _last_rows(sys, profile):
    """``Chat``: ``C_i A^(rho_i - 1)`` per output."""
    rows = []
    for c, r in zip(sys.C, profile):
        row = c.copy()
        for _ in range(r - 1):
            row = row @ sys.A
        rows.append(row)
    return np.array(rows)


def rank_diagnostics(sys, profile, tol=None):
    """Rank bookkeeping of ``[Bbar; Cbar]`` in terms of ``B`` and ``Chat``."""
    Bbar = nullspace_rows(sys.B, tol)
    Cbar = stacked_output_rows(sys, profile)
    Chat = _last_rows(sys, profile)
    rank_B = numerical_rank(sys.B, tol)
    rank_Chat = numerical_rank(Chat, tol)
    stacked = np.vstack([Bbar, Chat])
    overlap = (Bbar.shape[0] + rank_Chat - numerical_rank(stacked, tol)) if Bbar.size else 0
    return {
        "n_states": sys.n_states,
        "rank_B": rank_B,
        "rank_Chat": rank_Chat,
        "overlap_dim": int(overlap),
        "rank_Tbar_formula": sys.n_states - rank_B + rank_Chat - int(overlap),
        "rank_Tbar": numerical_rank(np.vstack([Bbar, Cbar]), tol),
        "rank_Cbar": numerical_rank(Cbar, tol) if Cbar.size else 0,
        "rho": int(sum(profile)),
    }


def _select_bz(Bbar, Cbar, l_eta, tol):
    """Rows of span(Bbar) that stay farthest from span(Cbar).

    The orthonormal rows of `Bbar` are projected onto the orthogonal
    complement of the row space of `Cbar`; the leading left singular vectors
    of the projection give combinations of `Bbar` rows whose components
    outside span(Cbar) are largest.
    """
    if l_eta == 0:
        return np.zeros((0, Bbar.shape[1]))
    basis = orth(Cbar.T, tol)
    K = Bbar - (Bbar @ basis) @ basis.T
    U, sv, _ = np.linalg.svd(K, full_matrices=False)
    thr = tol.threshold(K.shape)
    if sv.size < l_eta or sv[l_eta - 1] <= thr:
        return None
    return U[:, :l_eta].T @ Bbar


def build_transformation(sys, rho=None, tol=None, bz=None):
    """Assemble ``T = [Bz; Cbar]`` and its inverse.

    `bz` forces a particular ``Bz``; it must have ``l_x - rho`` rows lying
    in the left nullspace of ``B``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    profile = relative_degree(sys, tol) if rho is None else rho
    per_output = tuple(profile)
    if any(r == 0 for r in per_output):
        raise DecompositionNotApplicable(
            "system has direct feedthrough (D != 0); apply a dynamic extension first",
            {"rho": per_output})
    nx = sys.n_states
    total = sum(per_output)
    if total > nx:
        raise DecompositionNotApplicable(
            f"relative degree {total} exceeds the state dimension {nx}", {"rho": per_output})

    Bbar = nullspace_rows(sys.B, tol)
    Cbar = stacked_output_rows(sys, per_output)
    l_eta = nx - total
    if numerical_rank(Cbar, tol) < total:
        raise DecompositionNotApplicable(
            "stacked output rows are linearly dependent",
            rank_diagnostics(sys, per_output, tol))

    if bz is None:
        Bz = _select_bz(Bbar, Cbar, l_eta, tol)
        if Bz is None:
            raise DecompositionNotApplicable(
                f"left nullspace of B has fewer than {l_eta} directions independent of the "
                "stacked output rows; the transformation is singular",
                rank_diagnostics(sys, per_output, tol))
    else:
        Bz = as_matrix(bz, "Bz").astype(float).reshape(-1, nx) if np.size(bz) else np.zeros((0, nx))
        if Bz.shape[0] != l_eta:
            raise DecompositionNotApplicable(f"Bz must have {l_eta} rows, got {Bz.shape[0]}")
        scale = max(np.linalg.norm(Bz, 2), 1.0) * max(np.linalg.norm(sys.B, 2), 1.0)
        if Bz.size and np.linalg.norm(Bz @ sys.B) > 1e-10 * scale:
            raise DecompositionNotApplicable("Bz rows are not in the left nullspace of B")

    T = np.vstack([Bz, Cbar])
    try:
        S, cond = solve_or_invert(T)
    except SingularMatrixError as exc:
        diag = rank_diagnostics(sys, per_output, tol)
        diag["condition_T"] = exc.condition
        raise DecompositionNotApplicable(f"transformation is singular: {exc}", diag) from exc
    return TransformationBundle(Bbar, Cbar, Bz, T, S, cond, per_output)


def _structure_residuals(sys, bundle, Acal, Bcal, Ccal):
    """Norms of every entry that must vanish (or match a fixed pattern)."""
    l_eta = bundle.l_eta
    profile = bundle.rho_profile
    rho = sum(profile)
    ny = sys.n_outputs
    A_xieta = Acal[l_eta:, :l_eta]
    A_xi = Acal[l_eta:, l_eta:]
    B_xi = Bcal[l_eta:]
    C_xi = Ccal[:, l_eta:]

    pattern_C = np.zeros((ny, rho))
    shift = np.zeros((rho, rho))
    chain_rows = []  # rows other than the last one of each output chain
    start = 0
    for i, r in enumerate(profile):
        pattern_C[i, start] = 1.0
        for k in range(r - 1):
            shift[start + k, start + k + 1] = 1.0
            chain_rows.append(start + k)
        start += r

    res = {
        "TS_identity": float(np.linalg.norm(bundle.T @ bundle.S - np.eye(sys.n_states), 2)),
        "B_eta_zero": float(np.linalg.norm(Bcal[:l_eta])) if l_eta else 0.0,
        "C_eta_zero": float(np.linalg.norm(Ccal[:, :l_eta])) if l_eta else 0.0,
        "C_xi_pattern": float(np.linalg.norm(C_xi - pattern_C)),
    }
    if chain_rows:
        res["A_xieta_pattern"] = float(np.linalg.norm(A_xieta[chain_rows])) if l_eta else 0.0
        res["A_xi_pattern"] = float(np.linalg.norm(A_xi[chain_rows] - shift[chain_rows]))
        res["B_xi_pattern"] = float(np.linalg.norm(B_xi[chain_rows]))
    else:
        res["A_xieta_pattern"] = res["A_xi_pattern"] = res["B_xi_pattern"] = 0.0
    return res


def structure_tolerance(sys, condition_T):
    return STRUCTURE_RTOL * (1.0 + np.linalg.norm(sys.A, 2) * condition_T)


def decompose(sys, bundle=None, tol=None, check=True):
    """Transform to ``(T A T^-1, T B, C T^-1)`` and partition.

    With `check`, a `StructureViolation` is raised when any structurally
    zero block exceeds ``1e-8 (1 + |A| cond T)``.
    """
    tol = DEFAULT_TOL if tol is None else tol
    if bundle is None:
        bundle = build_transformation(sys, tol=tol)
    T, S = bundle.T, bundle.S
    l_eta = bundle.l_eta
    Acal = T @ sys.A @ S
    Bcal = T @ sys.B
    Ccal = sys.C @ S
    residuals = _structure_residuals(sys, bundle, Acal, Bcal, Ccal)

    B_xi = Bcal[l_eta:]
    A_xieta = Acal[l_eta:, :l_eta]
    full_rank = numerical_rank(B_xi, tol) == B_xi.shape[1] if B_xi.size else False
    if full_rank and sys.n_inputs >= sys.n_outputs:
        proj = np.eye(B_xi.shape[0]) - B_xi @ pseudoinverse(B_xi, tol)
        residuals["input_annihilation"] = float(np.linalg.norm(proj @ A_xieta)) if l_eta else 0.0

    stol = structure_tolerance(sys, bundle.condition_T)
    structural = {k: v for k, v in residuals.items() if k != "TS_identity"}
    if check and max(structural.values()) > stol:
        worst = max(structural, key=structural.get)
        raise StructureViolation(
            f"structural residual {worst}={structural[worst]:.3e} exceeds {stol:.3e}",
            residuals)

    return InvariantZeroForm(
        A_eta=Acal[:l_eta, :l_eta],
        A_etaxi=Acal[:l_eta, l_eta:],
        A_xieta=A_xieta,
        A_xi=Acal[l_eta:, l_eta:],
        B_xi=B_xi,
        C_xi=Ccal[:, l_eta:],
        bundle=bundle,
        rho_profile=bundle.rho_profile,
        residuals=residuals,
        structure_tol=stol,
        full_rank_B_xi=bool(full_rank),
    )


def izform_decomposition(sys, tol=None, bz=None):
    """Relative degree, transformation and partitioned form in one call."""
    tol = DEFAULT_TOL if tol is None else tol
    profile = relative_degree(sys, tol)
    bundle = build_transformation(sys, profile, tol, bz=bz)
    return decompose(sys, bundle, tol)


def invariant_zeros_izform(sys, tol=None, bz=None, verify=True, seed=0):
    """Invariant zeros of a square system with ``D = 0`` as ``mspec(A_eta)``.

    Each zero is checked against the Rosenbrock pencil.  When ``B_xi`` lacks
    full column rank the eigenvalues are only candidates and the verifier's
    flags decide; ``info["trusted"]`` records this.
    """
    tol = DEFAULT_TOL if tol is None else tol
    if sys.has_feedthrough:
        raise DecompositionNotApplicable(
            "D != 0: use a dynamic extension (invariant_zeros_general)")
    if not sys.is_square:
        raise DecompositionNotApplicable(
            f"{sys.kind} system ({sys.n_inputs} inputs, {sys.n_outputs} outputs): "
            "eigenvalues of A_eta are zeros only for square systems; square it first",
            {"n_inputs": sys.n_inputs, "n_outputs": sys.n_outputs})
    form = izform_decomposition(sys, tol, bz=bz)
    zeros = eigenvalues(form.A_eta) if form.l_eta else np.zeros(0, dtype=complex)
    result = ZeroMultiset(zeros, "izform", info={
        "rho": list(form.rho_profile),
        "l_eta": form.l_eta,
        "condition_T": form.bundle.condition_T,
        "trusted": form.full_rank_B_xi,
        "max_structural_residual": max(
            (v for k, v in form.residuals.items() if k != "TS_identity"), default=0.0),
    })
    if verify:
        result = verify_zeros(sys, result, tol, seed=seed)
    return result
