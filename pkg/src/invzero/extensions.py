"""Reductions to square systems without feedthrough.

A nonzero ``D`` is removed by filtering every input through ``1/(s + alpha)``;
the extended system has the same invariant zeros.  Nonsquare systems are
squared by appending random output rows (or input columns) several times
and keeping the zeros common to all squared versions that also make the
original pencil lose rank.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DecompositionNotApplicable,
    InvalidInputError,
    MethodFailure,
    StructureViolation,
    VerificationFailure,
)
from .izform import invariant_zeros_izform
from .linalg import DEFAULT_TOL
from .model import StateSpaceRealization, ZeroMultiset, common_zeros
from .rosenbrock import estimate_normal_rank, spectral_radius, verify_zeros

#: matching tolerance when intersecting zero sets of different squarings
COMMON_ATOL = 1e-4

DEFAULT_ROUNDS = 3


@dataclass(frozen=True, eq=False)
class ExtendedRealization:
    base: StateSpaceRealization
    alpha: float
    extended: StateSpaceRealization


def default_alpha(sys):
    return 1.0 + spectral_radius(sys.A)


def dynamic_extension(sys, alpha=None):
    """Append the inputs to the state: ``x_bar = [x; u]`` with ``du = -alpha u + v``.

    The result is ``([[A, B], [0, -alpha I]], [[0], [I]], [C, D], 0)``.
    """
    alpha = default_alpha(sys) if alpha is None else float(alpha)
    nx, nu, ny = sys.dims
    A = np.block([[sys.A, sys.B], [np.zeros((nu, nx)), -alpha * np.eye(nu)]])
    B = np.vstack([np.zeros((nx, nu)), np.eye(nu)])
    C = np.hstack([sys.C, sys.D])
    name = f"{sys.name} (extended)" if sys.name else None
    return ExtendedRealization(sys, alpha, StateSpaceRealization(A, B, C, name=name))


@dataclass(frozen=True, eq=False)
class SquaringPlan:
    """Augmentations that make a nonsquare system square, one per round.

    For wide systems each augmentation holds extra rows of ``C``; for tall
    systems extra columns of ``B``.
    """

    augmentations: tuple
    seed: int | None = None

    def __post_init__(self):
        augs = tuple(np.atleast_2d(np.asarray(a, dtype=float)) for a in self.augmentations)
        if len(augs) < 2:
            raise InvalidInputError("a squaring plan needs at least two rounds")
        object.__setattr__(self, "augmentations", augs)

    @property
    def rounds(self):
        return len(self.augmentations)


def make_squaring_plan(sys, rounds=DEFAULT_ROUNDS, seed=0):
    """Gaussian augmentations scaled to the norm of ``C`` (or ``B``)."""
    if sys.is_square:
        raise InvalidInputError("system is already square")
    rng = np.random.default_rng(seed)
    nx, nu, ny = sys.dims
    if nu > ny:
        scale = max(np.linalg.norm(sys.C, 2), 1e-300) / np.sqrt(nx)
        shape = (nu - ny, nx)
    else:
        scale = max(np.linalg.norm(sys.B, 2), 1e-300) / np.sqrt(nx)
        shape = (nx, ny - nu)
    augs = tuple(scale * rng.normal(size=shape) for _ in range(rounds))
    return SquaringPlan(augs, seed)


def square_system(sys, plan):
    """One squared realization per augmentation of `plan`."""
    nx, nu, ny = sys.dims
    if sys.is_square:
        raise InvalidInputError("system is already square; nothing to augment")
    out = []
    for k, aug in enumerate(plan.augmentations):
        if nu > ny:
            if aug.shape != (nu - ny, nx):
                raise InvalidInputError(
                    f"augmentation {k}: expected {nu - ny} rows of length {nx}, got {aug.shape}")
            C = np.vstack([sys.C, aug])
            D = np.vstack([sys.D, np.zeros((nu - ny, nu))])
            out.append(sys.replace(C=C, D=D))
        else:
            if aug.shape != (nx, ny - nu):
                raise InvalidInputError(
                    f"augmentation {k}: expected {ny - nu} columns of length {nx}, got {aug.shape}")
            B = np.hstack([sys.B, aug])
            D = np.hstack([sys.D, np.zeros((ny, ny - nu))])
            out.append(sys.replace(B=B, D=D))
    return out


def _near(values, point, rtol=1e-6):
    return np.abs(values - point) <= rtol * (1.0 + abs(point))


def _square_candidates(sys, tol, alpha, seed):
    """Unverified zero candidates of a square system (extending when D != 0)."""
    if not sys.has_feedthrough:
        return invariant_zeros_izform(sys, tol, verify=False, seed=seed), None
    ext = dynamic_extension(sys, alpha)
    cand = invariant_zeros_izform(ext.extended, tol, verify=False, seed=seed)
    info = dict(cand.info, alpha=ext.alpha, extended_states=ext.extended.n_states)
    return ZeroMultiset(cand.values, "izform+extension", info=info), ext.alpha


def invariant_zeros_general(sys, tol=None, seed=0, rounds=DEFAULT_ROUNDS, alpha=None, plan=None):
    """Invariant zeros of any realization.

    Square systems go straight to the invariant zero form, after a dynamic
    extension when ``D != 0``; a candidate at the extension pole ``-alpha``
    survives only if the original pencil loses rank there.  Nonsquare
    systems are squared ``rounds`` times and the common zeros that drop the
    original pencil's rank are returned.  Flags always refer to the
    original system.
    """
    tol = DEFAULT_TOL if tol is None else tol
    normal_rank = estimate_normal_rank(sys, tol, seed=seed)

    if sys.is_square:
        try:
            cand, used_alpha = _square_candidates(sys, tol, alpha, seed)
        except (DecompositionNotApplicable, StructureViolation) as exc:
            raise MethodFailure(
                f"invariant zero form not available ({exc}); try the determinant or "
                "geometric method") from exc
        checked = verify_zeros(sys, cand, tol, normal_rank=normal_rank)
        if used_alpha is not None:
            suspicious = _near(checked.values, -used_alpha) & ~checked.verified
            checked = checked.subset(~suspicious)
        if len(checked) and not np.any(checked.verified):
            raise VerificationFailure(
                "no candidate zero makes the Rosenbrock pencil lose rank", checked)
        return checked

    plan = plan or make_squaring_plan(sys, rounds, seed)
    common = None
    failures = []
    for k, squared in enumerate(square_system(sys, plan)):
        try:
            cand, _ = _square_candidates(squared, tol, alpha, seed)
        except (DecompositionNotApplicable, StructureViolation) as exc:
            failures.append(f"round {k}: {exc}")
            continue
        common = cand.values if common is None else common_zeros(common, cand.values, COMMON_ATOL)
    if common is None:
        raise MethodFailure(
            "invariant zero form not available for any squared system; try the "
            "geometric method. " + "; ".join(failures))

    result = ZeroMultiset(common, "izform+squaring", info={
        "rounds": plan.rounds, "failed_rounds": failures})
    checked = verify_zeros(sys, result, tol, normal_rank=normal_rank)
    if len(checked) and not np.any(checked.verified):
        raise VerificationFailure(
            "common zeros of the squared systems do not drop the original pencil rank", checked)
    return checked.subset(checked.verified)
