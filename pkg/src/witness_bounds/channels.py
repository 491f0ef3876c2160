"""Amplitude damping: Kraus form, local application on n qubits, and a Lindblad RK4 integrator."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, OutOfRange, StepTooLarge
from .linalg import as_matrix, check_hermitian, eigvalsh, frobenius_norm
from .states import n_qubits

log = logging.getLogger(__name__)

LOWERING = np.array([[0, 1], [0, 0]], dtype=np.complex128)  # |0><1|


@dataclass(frozen=True)
class KrausSet:
    operators: tuple

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.operators)
        d = ops[0].shape[1]
        total = sum(k.conj().T @ k for k in ops)
        if frobenius_norm(total - np.eye(d)) > 1e-10:
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "operators", ops)


@dataclass(frozen=True)
class LindbladSpec:
    jump_rate_gamma: float
    qubit_count: int
    hamiltonian: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.jump_rate_gamma < 0:
            raise OutOfRange("gamma must be nonnegative")
        d = 2**self.qubit_count
        h = np.zeros((d, d), dtype=np.complex128) if self.hamiltonian is None else check_hermitian(self.hamiltonian)
        object.__setattr__(self, "hamiltonian", h)


def amplitude_damping_kraus(p: float) -> KrausSet:
    """K0 = diag(1, sqrt(1-p)), K1 = sqrt(p) |0><1|."""
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"damping probability {p} outside [0, 1]")
    k0 = np.diag([1.0, math.sqrt(1.0 - p)]).astype(np.complex128)
    k1 = math.sqrt(p) * LOWERING
    return KrausSet((k0, k1))


def p_of_gamma_t(gamma: float, t: float) -> float:
    if gamma < 0 or t < 0:
        raise OutOfRange("gamma and t must be nonnegative")
    return -math.expm1(-gamma * t)


def embed(op, qubit: int, n: int) -> np.ndarray:
    """I (x) ... (x) op (x) ... (x) I with ``op`` on ``qubit`` (qubit 0 most significant)."""
    if not 0 <= qubit < n:
        raise IndexOutOfRange(f"qubit {qubit} out of range for {n} qubits")
    return np.kron(np.kron(np.eye(2**qubit), op), np.eye(2 ** (n - qubit - 1)))


def apply_local_channel(rho, qubit: int, kraus: KrausSet) -> np.ndarray:
    rho = as_matrix(rho)
    n = n_qubits(rho.shape[0])
    if not 0 <= qubit < n:
        raise IndexOutOfRange(f"qubit {qubit} out of range for {n} qubits")
    out = np.zeros_like(rho)
    for k in kraus.operators:
        full = embed(k, qubit, n)
        out += full @ rho @ full.conj().T
    return 0.5 * (out + out.conj().T)


def damp_all_qubits(rho, p: float) -> np.ndarray:
    """Amplitude damping with the same p applied once to every qubit."""
    rho = as_matrix(rho)
    kraus = amplitude_damping_kraus(p)
    for q in range(n_qubits(rho.shape[0])):
        rho = apply_local_channel(rho, q, kraus)
    return rho


def _jump_operators(spec: LindbladSpec) -> list:
    s = math.sqrt(spec.jump_rate_gamma)
    return [s * embed(LOWERING, k, spec.qubit_count) for k in range(spec.qubit_count)]


def lindblad_rhs(rho, h, jumps, decay) -> np.ndarray:
    """-i[H, rho] + sum_k L rho L^dagger - 1/2 {L^dagger L, rho}; ``decay`` = sum L^dagger L."""
    out = -1j * (h @ rho - rho @ h)
    for lk in jumps:
        out += lk @ rho @ lk.conj().T
    out -= 0.5 * (decay @ rho + rho @ decay)
    return out


def lindblad_rk4(rho0, spec: LindbladSpec, t: float, dt: float | None = None) -> np.ndarray:
    """Fixed-step classical RK4 for the amplitude-damping master equation.

    The state is re-Hermitised and trace-renormalised after every step.
    ``StepTooLarge`` is raised if the trace drifts by more than 1e-6 within a
    step, or if the result is not finite / not positive semidefinite (the
    signature of leaving RK4's stability region).
    """
    if t < 0:
        raise OutOfRange("t must be nonnegative")
    dt = t / 1000 if dt is None else dt
    if dt <= 0 and t > 0:
        raise OutOfRange("dt must be positive")
    rho = as_matrix(rho0).copy()
    if t == 0:
        return rho
    jumps = _jump_operators(spec)
    h = spec.hamiltonian
    decay = sum(lk.conj().T @ lk for lk in jumps)
    steps = max(1, int(math.ceil(t / dt - 1e-9)))
    hstep = t / steps
    for _ in range(steps):
        k1 = lindblad_rhs(rho, h, jumps, decay)
        k2 = lindblad_rhs(rho + 0.5 * hstep * k1, h, jumps, decay)
        k3 = lindblad_rhs(rho + 0.5 * hstep * k2, h, jumps, decay)
        k4 = lindblad_rhs(rho + hstep * k3, h, jumps, decay)
        nxt = rho + (hstep / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(nxt)):
            raise StepTooLarge(f"integration diverged with dt={hstep}")
        tr = np.trace(nxt)
        if abs(tr - 1.0) > 1e-6:
            raise StepTooLarge(f"trace drifted by {abs(tr - 1.0):.3e} within one step of dt={hstep}")
        herm = 0.5 * (nxt + nxt.conj().T)
        if frobenius_norm(herm - nxt) > 1e-9 or abs(tr - 1.0) > 1e-9:
            log.debug("rk4 correction: hermiticity %.2e, trace %.2e", frobenius_norm(herm - nxt), abs(tr - 1.0))
        rho = herm / tr.real
    lo = eigvalsh(rho)[0]
    if lo < -1e-6:
        raise StepTooLarge(f"state lost positivity (min eigenvalue {lo:.3e}) with dt={hstep}")
    return rho
