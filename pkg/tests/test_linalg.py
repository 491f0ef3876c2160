import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import sqrtm

from witness_bounds.errors import DimensionMismatch, NonHermitian, NonSquare, NotPSD
from witness_bounds.linalg import (
    asum_norm,
    eigvalsh,
    entropy_of_spectrum,
    fidelity,
    frobenius_norm,
    hermitian_eig,
    matrix_from_dict,
    matrix_sqrt_psd,
    matrix_to_dict,
    random_hermitian,
    vector_from_dict,
    vector_to_dict,
    von_neumann_entropy,
)
from witness_bounds.states import child_rng, projector, random_mixed_state, random_pure_state

from conftest import mixed_states, seeds


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
def test_jacobi_matches_lapack(n, rng):
    a = random_hermitian(n, rng)
    eig = hermitian_eig(a)
    assert np.allclose(eig.eigenvalues, np.linalg.eigvalsh(a), atol=1e-11)
    assert frobenius_norm(eig.reconstruct() - a) < 1e-10
    v = eig.eigenvectors
    assert frobenius_norm(v.conj().T @ v - np.eye(n)) < 1e-10


def test_jacobi_degenerate_and_diagonal():
    a = np.diag([3.0, 1.0, 1.0, -2.0])
    eig = hermitian_eig(a)
    assert np.allclose(eig.eigenvalues, [-2, 1, 1, 3])
    # 2x2 with complex coupling: eigenvalues 1 +- |z|
    z = 0.3 - 0.4j
    eig = hermitian_eig([[1, z], [np.conj(z), 1]])
    assert np.allclose(eig.eigenvalues, [0.5, 1.5], atol=1e-14)


def test_eig_rejects_bad_input():
    with pytest.raises(NonSquare):
        hermitian_eig(np.zeros((2, 3)))
    with pytest.raises(NonHermitian):
        hermitian_eig([[0, 1], [0, 0]])


@given(seeds, st.integers(1, 10))
def test_eigen_reconstruction_property(seed, n):
    a = random_hermitian(n, np.random.default_rng(seed))
    eig = hermitian_eig(a)
    assert frobenius_norm(eig.reconstruct() - a) <= 1e-10 * max(1.0, frobenius_norm(a))
    assert np.all(np.diff(eig.eigenvalues) >= 0)


@given(seeds, st.integers(1, 8), st.integers(1, 8))
def test_asum_dominates_frobenius(seed, r, c):
    g = np.random.default_rng(seed)
    a = g.normal(size=(r, c)) + 1j * g.normal(size=(r, c))
    assert asum_norm(a) >= frobenius_norm(a) - 1e-12


def test_norms_small_cases():
    a = np.array([[3, 4j], [0, 0]])
    assert frobenius_norm(a) == pytest.approx(5.0)
    assert asum_norm(a) == pytest.approx(7.0)


@given(mixed_states())
def test_sqrt_psd_squares_back(rho):
    s = matrix_sqrt_psd(rho)
    assert frobenius_norm(s @ s - rho) < 1e-9
    assert frobenius_norm(s - sqrtm(rho)) < 1e-5  # scipy oracle (sqrtm is loose on singular input)


def test_sqrt_rejects_negative():
    with pytest.raises(NotPSD):
        matrix_sqrt_psd(np.diag([1.0, -0.1]))


def test_entropy_values():
    assert entropy_of_spectrum([0.5, 0.5]) == pytest.approx(1.0)
    assert entropy_of_spectrum([1.0, 0.0]) == 0.0
    assert von_neumann_entropy(np.eye(4) / 4) == pytest.approx(2.0)
    psi = random_pure_state(4, child_rng(3, 0))
    assert von_neumann_entropy(projector(psi)) == pytest.approx(0.0, abs=1e-9)


def test_fidelity_oracles():
    g = child_rng(5, 0)
    rho = random_mixed_state(4, 3, g)
    sigma = random_mixed_state(4, 2, g)
    s = sqrtm(rho)
    oracle = np.real(np.trace(sqrtm(s @ sigma @ s))) ** 2
    # sqrtm of a singular matrix is itself only good to ~1e-8
    assert fidelity(rho, sigma) == pytest.approx(oracle, abs=1e-7)
    full_a, full_b = random_mixed_state(4, 4, g), random_mixed_state(4, 4, g)
    s = sqrtm(full_a)
    oracle = np.real(np.trace(sqrtm(s @ full_b @ s))) ** 2
    assert fidelity(full_a, full_b) == pytest.approx(oracle, abs=1e-9)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    psi = random_pure_state(4, g)
    assert fidelity(projector(psi), sigma) == pytest.approx(np.real(psi.conj() @ sigma @ psi), abs=1e-9)
    assert fidelity(sigma, projector(psi)) == pytest.approx(np.real(psi.conj() @ sigma @ psi), abs=1e-9)
    with pytest.raises(DimensionMismatch):
        fidelity(np.eye(2) / 2, np.eye(4) / 4)


@given(mixed_states(dim=4), mixed_states(dim=4))
def test_fidelity_symmetric_and_bounded(rho, sigma):
    f = fidelity(rho, sigma)
    assert -1e-12 <= f <= 1.0
    assert f == pytest.approx(fidelity(sigma, rho), abs=1e-9)


def test_eigvalsh_ascending(rng):
    w = eigvalsh(random_hermitian(5, rng))
    assert np.all(np.diff(w) >= 0)


def test_serialisation_roundtrip(rng):
    a = random_hermitian(3, rng)
    assert np.array_equal(matrix_from_dict(matrix_to_dict(a)), a)
    v = a[:, 0]
    assert np.array_equal(vector_from_dict(vector_to_dict(v)), v)
    with pytest.raises(ValueError):
        matrix_from_dict({"rows": 2, "cols": 2, "re": [0.0], "im": [0.0]})
