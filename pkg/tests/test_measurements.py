import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnb.errors import DimensionError, ValidationError
from qnb.measurements import (ProjectiveMeasurement, apply_measurement, degeneracy_structure,
                              eigenmeasurement, group_spectrum, is_locally_invariant,
                              rotate_measurement)
from qnb.qstate import (bell_state, classical_quantum, make_density, maximally_mixed,
                        partial_trace, random_density)

seeds = st.integers(0, 2**32 - 1)


def test_eigenmeasurement_nondegenerate():
    m, s = eigenmeasurement(make_density(np.diag([0.6, 0.4]), [2]))
    assert s.blocks == ((0,), (1,))
    assert np.allclose(m.projectors, [np.diag([1, 0]), np.diag([0, 1])])


def test_eigenmeasurement_maximally_mixed_is_one_block():
    _, s = eigenmeasurement(maximally_mixed((2,)))
    assert s.block_dims == (2,)
    assert s.n_params == 4


def test_cross_degenerate_product_spectrum():
    _, s = eigenmeasurement(make_density(np.diag([0.36, 0.24, 0.24, 0.16]), [2, 2]))
    assert s.block_dims == (1, 2, 1)
    assert sum(s.block_dims) == s.dim


def test_group_spectrum_gaps():
    groups = group_spectrum(np.array([0.5, 0.5 - 1e-12, 0.3, 0.2]), 1e-9)
    assert [tuple(g) for g in groups] == [(0, 1), (2,), (3,)]


def test_degeneracy_tolerance_scales_with_spectrum():
    s = degeneracy_structure(maximally_mixed((4,)))
    assert s.tolerance == pytest.approx(1e-8 * 0.25)


def test_projective_measurement_validation():
    with pytest.raises(ValidationError, match="incomplete"):
        ProjectiveMeasurement((2,), np.array([np.diag([1, 0])]))
    with pytest.raises(ValidationError, match="not-rank-one"):
        ProjectiveMeasurement((2,), np.array([np.eye(2)]))


def test_rotate_zero_params_is_identity():
    marg = random_density(3, None, 1)
    base, s = eigenmeasurement(marg)
    out = rotate_measurement(base, s, np.zeros(s.n_params))
    assert np.allclose(out.projectors, base.projectors)


def test_rotate_nondegenerate_only_changes_phase(rng):
    marg = random_density(3, None, 2)
    base, s = eigenmeasurement(marg)
    out = rotate_measurement(base, s, rng.normal(size=s.n_params))
    assert np.allclose(out.projectors, base.projectors)


def test_sigma_y_rotation():
    # coefficient on sigma_y / sqrt(2) chosen so H = -(pi/8) sigma_y
    base, s = eigenmeasurement(maximally_mixed((2,)))
    params = np.array([0.0, 0.0, -math.pi / 8 * math.sqrt(2), 0.0])
    out = rotate_measurement(base, s, params)
    v = np.array([math.cos(math.pi / 8), math.sin(math.pi / 8)])
    assert np.allclose(out.projectors[0], np.outer(v, v))
    assert is_locally_invariant(out, maximally_mixed((2,)))


def test_rotate_rejects_wrong_param_count():
    base, s = eigenmeasurement(maximally_mixed((2,)))
    with pytest.raises(DimensionError):
        rotate_measurement(base, s, np.zeros(3))


def test_rotations_stay_invariant_many_draws():
    rng = np.random.default_rng(0)
    marg = make_density(np.diag([0.36, 0.24, 0.24, 0.16]), [2, 2])
    base, s = eigenmeasurement(marg)
    for _ in range(1000):
        m = rotate_measurement(base, s, rng.normal(scale=3, size=s.n_params))
        assert is_locally_invariant(m, marg, 1e-9)


def test_nondegenerate_measurement_unique(rng):
    marg = random_density(4, None, 5, dims=(2, 2))
    base, s = eigenmeasurement(marg)
    a = rotate_measurement(base, s, rng.normal(size=s.n_params))
    b = rotate_measurement(base, s, rng.normal(size=s.n_params))
    assert np.allclose(a.projectors, b.projectors)


def test_hadamard_basis_not_invariant():
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    m = ProjectiveMeasurement.from_basis(h, (2,))
    assert not is_locally_invariant(m, make_density(np.diag([0.7, 0.3]), [2]))


def test_apply_classical_state_unchanged():
    rho = classical_quantum([0.7, 0.3], [random_density(2, None, 1), random_density(2, None, 2)],
                            side="right")
    m, _ = eigenmeasurement(partial_trace(rho, (1,)))
    assert np.allclose(apply_measurement(rho, m, (1,)).matrix, rho.matrix, atol=1e-12)


def test_apply_bell_computational():
    m = ProjectiveMeasurement.from_basis(np.eye(2), (2,))
    post = apply_measurement(bell_state().density(), m, (0,))
    assert np.allclose(post.matrix, np.diag([0.5, 0, 0, 0.5]))


@given(seeds)
def test_apply_measurement_invariants(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(12, None, rng, dims=(2, 3, 2))
    marg = partial_trace(rho, (1, 2))
    base, s = eigenmeasurement(marg)
    m = rotate_measurement(base, s, rng.normal(size=s.n_params))
    post = apply_measurement(rho, m, (1, 2))
    assert np.trace(post.matrix).real == pytest.approx(1, abs=1e-12)
    assert np.min(post.eigenvalues()) > -1e-10
    overlap = np.real(np.vdot(rho.matrix, post.matrix))
    assert post.purity() == pytest.approx(overlap, abs=1e-12)
    full = np.array([np.kron(np.eye(2), p) for p in m.projectors])
    assert np.allclose(full @ post.matrix, post.matrix @ full, atol=1e-10)


def test_apply_measurement_general_degenerate_block_invariance(rng):
    marg = maximally_mixed((2, 2))
    base, s = eigenmeasurement(marg)
    m = rotate_measurement(base, s, rng.normal(size=s.n_params))
    rho = random_density(8, None, rng, dims=(2, 2, 2))
    post = apply_measurement(rho, m, (0, 1))
    assert post.purity() == pytest.approx(np.real(np.vdot(rho.matrix, post.matrix)), abs=1e-12)
