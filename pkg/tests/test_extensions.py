import numpy as np
import pytest

from invzero import (
    StateSpaceRealization,
    SquaringPlan,
    dynamic_extension,
    invariant_zeros_general,
    invariant_zeros_izform,
    make_squaring_plan,
    multisets_equal,
    random_system,
    relative_degree,
    square_system,
    zeros_by_det_interpolation,
)
from invzero.errors import InvalidInputError, MethodFailure
from invzero.extensions import default_alpha
from invzero.rosenbrock import spectral_radius

from conftest import EXAMPLE2_ZEROS, EXAMPLE3_CSQ1, EXAMPLE3_CSQ2


def test_dynamic_extension_structure(example2):
    ext = dynamic_extension(example2, 16.0)
    E = ext.extended
    assert E.dims == (6, 2, 2) and not E.has_feedthrough
    np.testing.assert_array_equal(E.A[4:, 4:], -16.0 * np.eye(2))
    np.testing.assert_array_equal(E.C[:, 4:], example2.D)
    assert relative_degree(E).per_output == (1, 1)
    assert default_alpha(example2) == pytest.approx(1 + spectral_radius(example2.A))


def test_example2_extension_pipeline(example2):
    z = invariant_zeros_general(example2, alpha=16.0)
    assert z.method == "izform+extension" and z.all_verified
    assert multisets_equal(z, EXAMPLE2_ZEROS, atol=5e-3, rtol=0)
    assert multisets_equal(z, zeros_by_det_interpolation(example2), atol=1e-8, rtol=1e-8)
    assert z.info["alpha"] == 16.0
    default = invariant_zeros_general(example2)
    assert multisets_equal(default, z, atol=1e-8)


def test_extension_pole_can_be_a_zero():
    # G(s) = (s + 3)/(s + 1) has its zero exactly at the filter pole -alpha
    sys = StateSpaceRealization([[-1.0]], [[1.0]], [[2.0]], [[1.0]])
    z = invariant_zeros_general(sys, alpha=3.0)
    assert multisets_equal(z, [-3.0], atol=1e-8)
    assert z.all_verified
    # with another alpha the filter pole must not leak into the result
    assert multisets_equal(invariant_zeros_general(sys, alpha=5.0), [-3.0], atol=1e-8)


def test_squaring_plan_validation(example3, example1):
    plan = make_squaring_plan(example3, rounds=3, seed=1)
    assert plan.rounds == 3 and plan.augmentations[0].shape == (1, 6)
    with pytest.raises(InvalidInputError):
        SquaringPlan((EXAMPLE3_CSQ1,))
    with pytest.raises(InvalidInputError):
        make_squaring_plan(example1)
    with pytest.raises(InvalidInputError):
        square_system(example3, SquaringPlan((np.ones((2, 6)), np.ones((2, 6)))))


def test_example3_fixed_augmentations(example3):
    plan = SquaringPlan((EXAMPLE3_CSQ1, EXAMPLE3_CSQ2))
    sq1, sq2 = square_system(example3, plan)
    z1 = invariant_zeros_izform(sq1)
    z2 = invariant_zeros_izform(sq2)
    assert multisets_equal(z1, [0.5, 1.0, 1.0], atol=5e-3, rtol=0)
    assert multisets_equal(z2, [0.142857, 1.0, 1.0], atol=5e-3, rtol=0)
    z = invariant_zeros_general(example3, plan=plan)
    assert multisets_equal(z, [1.0, 1.0], atol=1e-6, rtol=0)
    assert z.all_verified


def test_example3_random_augmentations(example3):
    for seed in range(5):
        z = invariant_zeros_general(example3, seed=seed)
        assert multisets_equal(z, [1.0, 1.0], atol=1e-6, rtol=0)


def test_tall_system_squared_by_columns():
    zs = [-1.5, 0.5]
    sys = random_system(6, 2, 3, seed=5, planted_zeros=zs)
    plan = make_squaring_plan(sys)
    assert plan.augmentations[0].shape == (6, 1)
    z = invariant_zeros_general(sys)
    assert multisets_equal(z, zs)


def test_squaring_failure_is_reported():
    # extra outputs of relative degree above one make every squared
    # realization lack a nonsingular decoupling matrix
    sys = random_system(6, 2, 3, seed=6, planted_zeros=[0.5, -1.2])
    try:
        z = invariant_zeros_general(sys)
    except MethodFailure as exc:
        assert "geometric" in str(exc)
    else:
        assert multisets_equal(z, [0.5, -1.2])


def test_random_feedthrough_systems_match_oracle():
    for k in range(30):
        rng = np.random.default_rng(k)
        nx = int(rng.integers(1, 8))
        m = int(rng.integers(1, 4))
        sys = random_system(nx, m, m, seed=900 + k, feedthrough=True)
        z = invariant_zeros_general(sys)
        assert multisets_equal(z, zeros_by_det_interpolation(sys))
        assert len(z) == 0 or z.all_verified


def test_square_without_feedthrough_is_izform(example1):
    z = invariant_zeros_general(example1)
    assert z.method == "izform"
    assert multisets_equal(z, [-1.0, 0.0], atol=1e-8)
