import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qnb.errors import RangeError, ValidationError
from qnb.qstate import (DensityMatrix, PureState, bell_state, bloch_matrix, classical_quantum,
                        haar_unitary, isotropic, kron, load_state, local_unitary, make_density,
                        maximally_mixed, operator_basis, partial_trace, permute, product_ket,
                        random_density, random_pure, save_state, schmidt, state_from_json, werner)

seeds = st.integers(0, 2**32 - 1)


def test_make_density_accepts_maximally_mixed():
    rho = make_density(np.eye(4) / 4, [2, 2])
    assert rho.dims == (2, 2)
    assert rho.purity() == pytest.approx(0.25)


@pytest.mark.parametrize("diag, kind", [((0.6, 0.5, -0.1, 0), "not-psd"),
                                        ((0.6, 0.6, 0, 0), "bad-trace")])
def test_make_density_rejects(diag, kind):
    with pytest.raises(ValidationError) as e:
        make_density(np.diag(diag), [2, 2])
    assert e.value.kind == kind
    assert kind in str(e.value)


def test_make_density_rejects_non_hermitian_and_mismatch():
    m = np.eye(2, dtype=complex) / 2
    m[0, 1] = 0.1
    with pytest.raises(ValidationError, match="non-hermitian"):
        make_density(m, [2])
    with pytest.raises(ValidationError, match="dim-mismatch"):
        make_density(np.eye(4) / 4, [2, 3])


def test_pure_state_norm():
    with pytest.raises(ValidationError, match="bad-norm"):
        PureState((2,), np.array([1.0, 1.0]))


def test_kron_examples():
    half = maximally_mixed((2,))
    assert np.allclose(kron(half, half).matrix, np.eye(4) / 4)
    zero = make_density(np.diag([1, 0]), [2])
    one = make_density(np.diag([0, 1]), [2])
    assert np.allclose(kron(zero, one).matrix, np.diag([0, 1, 0, 0]))
    assert kron(bell_state().density(), half).purity() == pytest.approx(0.5)


def test_partial_trace_examples():
    bell = bell_state().density()
    assert np.allclose(partial_trace(bell, (0,)).matrix, np.eye(2) / 2)
    a, b = random_density(2, None, 1), random_density(3, None, 2)
    assert np.allclose(partial_trace(kron(a, b), (0,)).matrix, a.matrix)
    with pytest.raises(IndexError):
        partial_trace(bell, (2,))


def test_partial_trace_inner_pair_of_pure_product():
    # marginal on (b, c) is diag(s_i^2 r_j^2) in the Schmidt bases
    s, r = np.array([0.8, 0.6]), np.array([math.sqrt(0.7), math.sqrt(0.3)])
    psi_ab = PureState((2, 2), np.array([s[0], 0, 0, s[1]]))
    psi_cd = PureState((2, 2), np.array([r[0], 0, 0, r[1]]))
    rho = kron(psi_ab.density(), psi_cd.density())
    assert np.allclose(partial_trace(rho, (1, 2)).matrix, np.diag(np.outer(s**2, r**2).ravel()))


@given(seeds)
def test_partial_trace_composes(seed):
    rho = random_density(12, None, seed, dims=(2, 3, 2))
    step = partial_trace(partial_trace(rho, (0, 1)), (0,))
    assert np.allclose(step.matrix, partial_trace(rho, (0,)).matrix, atol=1e-12)


@given(seeds, seeds)
def test_purity_multiplies(s1, s2):
    a, b = random_density(3, None, s1), random_density(4, None, s2, dims=(2, 2))
    assert kron(a, b).purity() == pytest.approx(a.purity() * b.purity(), abs=1e-12)


def test_permute_swaps_factors():
    a, b = random_density(2, None, 3), random_density(3, None, 4)
    assert np.allclose(permute(kron(a, b), (1, 0)).matrix, kron(b, a).matrix)


def test_schmidt_examples():
    assert np.allclose(schmidt(product_ket((2, 2), (0, 0))).coefficients, [1, 0])
    assert np.allclose(schmidt(bell_state()).coefficients, [1 / math.sqrt(2)] * 2)
    c = schmidt(random_pure((3, 3), 7)).coefficients
    assert len(c) == 3 and np.sum(c**2) == pytest.approx(1)


@given(seeds)
def test_schmidt_reconstructs_and_is_local_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    psi = random_pure((2, 3), rng)
    dec = schmidt(psi)
    assert np.allclose(dec.reconstruct(), psi.amplitudes, atol=1e-10)
    u = np.kron(haar_unitary(2, rng), haar_unitary(3, rng))
    moved = PureState((2, 3), u @ psi.amplitudes)
    assert np.allclose(schmidt(moved).coefficients, dec.coefficients, atol=1e-10)


def test_operator_basis_qubit_is_pauli():
    paulis = [np.eye(2), [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]]
    assert np.allclose(operator_basis(2).elements, np.array(paulis) / math.sqrt(2))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_operator_basis_orthonormal(d):
    x = operator_basis(d).elements
    assert len(x) == d * d
    gram = np.einsum("kij,lji->kl", x, x)
    assert np.allclose(gram, np.eye(d * d), atol=1e-12)


@given(seeds, st.integers(2, 4))
def test_operator_basis_reconstruction(seed, d):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = m + m.conj().T
    basis = operator_basis(d)
    assert np.allclose(basis.reconstruct(basis.coefficients(m)), m, atol=1e-12)


def test_bloch_matrix_examples():
    lam = bloch_matrix(maximally_mixed((2, 3)))
    nz = np.argwhere(np.abs(lam.entries) > 1e-12)
    assert nz.tolist() == [[0, 0]]
    assert lam.entries[0, 0] == pytest.approx(1 / math.sqrt(6))
    assert bloch_matrix(bell_state().density()).norm2() == pytest.approx(1)
    assert bloch_matrix(werner(2, 0.5)).norm2() == pytest.approx(0.25)


@given(seeds)
def test_bloch_matrix_round_trip(seed):
    rho = random_density(6, None, seed, dims=(2, 3))
    lam = bloch_matrix(rho).entries
    xa, xb = operator_basis(2).elements, operator_basis(3).elements
    back = np.einsum("ij,iab,jcd->acbd", lam, xa, xb).reshape(6, 6)
    assert np.allclose(back, rho.matrix, atol=1e-10)
    assert bloch_matrix(rho).norm2() == pytest.approx(rho.purity(), abs=1e-10)


def test_bloch_matrix_rotated_basis_keeps_norm():
    rho = random_density(4, None, 11, dims=(2, 2))
    u = haar_unitary(2, 5)
    rotated = np.einsum("ij,kjl,ml->kim", u, operator_basis(2).elements, u.conj())
    from qnb.qstate import OperatorBasis
    basis = OperatorBasis(2, rotated)
    assert bloch_matrix(rho, basis, basis).norm2() == pytest.approx(rho.purity())


def test_bell_state():
    assert np.allclose(bell_state(2).amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert np.allclose(schmidt(bell_state(3)).coefficients, [1 / math.sqrt(3)] * 3)
    for m in (2, 3, 4):
        assert np.allclose(partial_trace(bell_state(m).density(), (0,)).matrix, np.eye(m) / m)


@pytest.mark.parametrize("m", [2, 3])
def test_family_maximally_mixed_points(m):
    assert np.allclose(isotropic(m, 1 / m**2).matrix, np.eye(m * m) / m**2, atol=1e-12)
    assert np.allclose(werner(m, 1 / m).matrix, np.eye(m * m) / m**2, atol=1e-12)
    assert np.allclose(isotropic(m, 1).matrix, bell_state(m).density().matrix)


@given(st.floats(-1, 1))
def test_werner_trace(x):
    assert np.trace(werner(3, x).matrix).real == pytest.approx(1)


def test_werner_singlet():
    rho = werner(2, -1)
    assert rho.purity() == pytest.approx(1)
    singlet = np.array([0, 1, -1, 0]) / math.sqrt(2)
    assert np.allclose(rho.matrix, np.outer(singlet, singlet))


def test_family_ranges():
    with pytest.raises(RangeError):
        isotropic(2, 1.5)
    with pytest.raises(RangeError):
        werner(2, -1.5)


def test_random_generators():
    rho = random_density(4, 4, 9)
    assert np.min(rho.eigenvalues()) > 0
    assert np.trace(rho.matrix).real == pytest.approx(1)
    assert np.allclose(random_pure((2, 2), 3).amplitudes, random_pure((2, 2), 3).amplitudes)
    assert np.linalg.matrix_rank(random_density(4, 2, 1).matrix, tol=1e-10) == 2


def test_haar_unitary_is_unitary():
    u = haar_unitary(3, 0, size=5)
    assert np.allclose(u @ np.conj(np.swapaxes(u, -1, -2)), np.eye(3), atol=1e-12)


def test_classical_quantum_degenerate_weights_give_product():
    s = [random_density(2, None, 1), random_density(2, None, 2)]
    rho = classical_quantum([1, 0], s, side="right")
    assert np.allclose(rho.matrix, np.kron(s[0].matrix, np.diag([1, 0])))


def test_local_unitary_preserves_spectrum():
    rho = random_density(4, None, 3, dims=(2, 2))
    moved = local_unitary(rho, [haar_unitary(2, 1), haar_unitary(2, 2)])
    assert np.allclose(moved.eigenvalues(), rho.eigenvalues())


def test_json_round_trip(tmp_path):
    rho = random_density(4, None, 3, dims=(2, 2))
    save_state(rho, tmp_path / "s.json")
    back = load_state(tmp_path / "s.json")
    assert back.dims == rho.dims and np.allclose(back.matrix, rho.matrix)
    pure = state_from_json({"dims": [2, 2], "amplitudes": [[0.6, 0], [0, 0], [0, 0], [0.8, 0]]})
    assert isinstance(pure, DensityMatrix) and pure.purity() == pytest.approx(1)
