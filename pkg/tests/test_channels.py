import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from witness_bounds.channels import (
    LOWERING,
    KrausSet,
    LindbladSpec,
    amplitude_damping_kraus,
    apply_local_channel,
    damp_all_qubits,
    embed,
    lindblad_rk4,
    p_of_gamma_t,
)
from witness_bounds.errors import IndexOutOfRange, OutOfRange, StepTooLarge
from witness_bounds.linalg import frobenius_norm, random_hermitian
from witness_bounds.states import basis_state, check_density_matrix, child_rng, projector, random_mixed_state

from conftest import mixed_states


def liouvillian_oracle(rho0, gamma, t, h=None):
    """exp(L t) applied to vec(rho0), column-stacking convention."""
    d = rho0.shape[0]
    n = int(round(math.log2(d)))
    h = np.zeros((d, d)) if h is None else h
    eye = np.eye(d)
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for k in range(n):
        lk = math.sqrt(gamma) * embed(LOWERING, k, n)
        ldl = lk.conj().T @ lk
        sup += np.kron(lk.conj(), lk) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    vec = expm(sup * t) @ rho0.reshape(-1, order="F")
    return vec.reshape(d, d, order="F")


def test_kraus_completeness_and_range():
    for p in (0.0, 0.3, 1.0):
        ks = amplitude_damping_kraus(p)
        total = sum(k.conj().T @ k for k in ks.operators)
        assert np.allclose(total, np.eye(2))
    for p in (-0.1, 1.1):
        with pytest.raises(OutOfRange):
            amplitude_damping_kraus(p)
    with pytest.raises(ValueError):
        KrausSet((np.eye(2), np.eye(2)))


def test_single_qubit_damping():
    p = 0.3
    out = apply_local_channel(projector(basis_state(1, 2)), 0, amplitude_damping_kraus(p))
    assert np.allclose(out, np.diag([p, 1 - p]))
    plus = projector(np.array([1, 1]) / math.sqrt(2))
    out = apply_local_channel(plus, 0, amplitude_damping_kraus(p))
    assert out[0, 1] == pytest.approx(0.5 * math.sqrt(1 - p))


def test_p_of_gamma_t():
    assert p_of_gamma_t(1.0, math.log(2)) == pytest.approx(0.5)
    assert p_of_gamma_t(0.0, 5.0) == 0.0
    with pytest.raises(OutOfRange):
        p_of_gamma_t(-1.0, 1.0)


def test_embed_and_qubit_range():
    op = np.array([[1, 2], [3, 4]])
    assert np.allclose(embed(op, 0, 2), np.kron(op, np.eye(2)))
    assert np.allclose(embed(op, 1, 2), np.kron(np.eye(2), op))
    with pytest.raises(IndexOutOfRange):
        embed(op, 2, 2)
    with pytest.raises(IndexOutOfRange):
        apply_local_channel(np.eye(4) / 4, 5, amplitude_damping_kraus(0.1))


@given(mixed_states(dim=4), st.floats(0.0, 1.0))
def test_damping_keeps_states_valid(rho, p):
    check_density_matrix(damp_all_qubits(rho, p))


@pytest.mark.parametrize("seed", range(4))
def test_kraus_matches_liouvillian_oracle(seed):
    rho = random_mixed_state(4, 2, child_rng(seed, 0), weights="uniform")
    gamma, t = 1.3, 0.6
    oracle = liouvillian_oracle(rho, gamma, t)
    assert frobenius_norm(damp_all_qubits(rho, p_of_gamma_t(gamma, t)) - oracle) < 1e-12
    assert frobenius_norm(lindblad_rk4(rho, LindbladSpec(gamma, 2), t) - oracle) < 1e-10


def test_rk4_with_hamiltonian_matches_oracle():
    g = child_rng(4, 0)
    rho = random_mixed_state(4, 3, g)
    h = random_hermitian(4, g)
    got = lindblad_rk4(rho, LindbladSpec(0.8, 2, h), 1.0, dt=1e-3)
    assert frobenius_norm(got - liouvillian_oracle(rho, 0.8, 1.0, h)) < 1e-9
    check_density_matrix(got)


def test_three_qubit_rk4():
    rho = random_mixed_state(8, 2, child_rng(2, 0))
    got = lindblad_rk4(rho, LindbladSpec(0.5, 3), 0.4)
    assert frobenius_norm(got - damp_all_qubits(rho, p_of_gamma_t(0.5, 0.4))) < 1e-10


def test_excited_state_half_life():
    rho = lindblad_rk4(projector(basis_state(1, 2)), LindbladSpec(1.0, 1), math.log(2))
    assert np.allclose(rho, np.diag([0.5, 0.5]), atol=1e-12)


def test_rk4_edge_cases():
    rho = random_mixed_state(4, 2, child_rng(0, 0))
    assert np.array_equal(lindblad_rk4(rho, LindbladSpec(1.0, 2), 0.0), rho)
    assert frobenius_norm(lindblad_rk4(rho, LindbladSpec(0.0, 2), 0.7) - rho) < 1e-12
    with pytest.raises(StepTooLarge):
        lindblad_rk4(rho, LindbladSpec(1.0, 2), 100.0, dt=50.0)
    with pytest.raises(OutOfRange):
        lindblad_rk4(rho, LindbladSpec(1.0, 2), 1.0, dt=0.0)
    with pytest.raises(OutOfRange):
        LindbladSpec(-1.0, 2)
