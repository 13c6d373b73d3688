"""Invariant zeros of MIMO state-space systems via the invariant zero form."""

from .errors import (
    DecompositionNotApplicable,
    InvalidInputError,
    InvZeroError,
    MethodFailure,
    NumericalFailure,
    OracleNotApplicable,
    SingularMatrixError,
    StructureViolation,
    UndefinedRelativeDegree,
    VerificationFailure,
)
from .extensions import (
    SquaringPlan,
    dynamic_extension,
    invariant_zeros_general,
    make_squaring_plan,
    square_system,
)
from .gazero import gazero_zeros
from .izform import (
    InvariantZeroForm,
    TransformationBundle,
    build_transformation,
    decompose,
    invariant_zeros_izform,
    izform_decomposition,
)
from .linalg import RankTolerance
from .model import (
    RelativeDegreeProfile,
    StateSpaceRealization,
    ZeroMultiset,
    match_multisets,
    multisets_equal,
    random_system,
    relative_degree,
    similarity_transform,
    validate,
)
from .rosenbrock import (
    estimate_normal_rank,
    evaluate_pencil,
    proof_diagnostics,
    verify_zeros,
    zeros_by_det_interpolation,
)

__version__ = "0.1.0"
