"""Dense complex matrix helpers and Hermitian spectral primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The Hermitian
eigensolver is a cyclic complex Jacobi iteration; matrices handled here are
at most a few dozen rows, where Jacobi is accurate and simple.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NonHermitian, NonSquare, NotPSD

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-10
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class HermitianEigenDecomposition:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> np.ndarray:
    return np.asarray(a, dtype=np.complex128)


def frobenius_norm(a) -> float:
    a = as_matrix(a)
    return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def asum_norm(a) -> float:
    """Sum of the absolute values of all entries (an upper bound on the F-norm)."""
    return float(np.sum(np.abs(as_matrix(a))))


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def _check_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(a)
    _check_square(a)
    err = frobenius_norm(a - a.conj().T)
    if err > tol:
        raise NonHermitian(f"||A - A^dagger||_F = {err:.3e} exceeds {tol:.1e}")
    return a


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return frobenius_norm(off)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    # Zero a[p, q] in place: U = diag(1, e^{-i theta}) @ [[c, s], [-s, c]].
    z = a[p, q]
    r = abs(z)
    phase = z / r
    tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(tau * tau + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
    idx = [p, q]
    a[:, idx] = a[:, idx] @ u
    a[idx, :] = u.conj().T @ a[idx, :]
    v[:, idx] = v[:, idx] @ u
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real


def hermitian_eig(a, tol: float = JACOBI_TOL) -> HermitianEigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Eigenvalues are returned in ascending order with the matching eigenvectors
    as columns.  Raises ``NonHermitian`` / ``NonSquare`` on bad input and
    ``NoConvergence`` if the off-diagonal mass does not fall below ``tol``.
    """
    a = check_hermitian(a)
    n = a.shape[0]
    work = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    thresh = tol * max(1.0, frobenius_norm(work))
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_norm(work) < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(work[p, q]) > 1e-300:
                    _jacobi_rotate(work, v, p, q)
    else:
        if _off_norm(work) >= thresh:
            raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    w = np.diag(work).real.copy()
    order = np.argsort(w, kind="stable")
    return HermitianEigenDecomposition(w[order], v[:, order])


def eigvalsh(a) -> np.ndarray:
    return hermitian_eig(a).eigenvalues


def _clamped(w: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    if w.size and w.min() < -tol:
        raise NotPSD(f"eigenvalue {w.min():.3e} is below -{tol:.0e}")
    return np.clip(w, 0.0, None)


def matrix_sqrt_psd(a) -> np.ndarray:
    """Principal square root of a Hermitian PSD matrix."""
    eig = hermitian_eig(a)
    w = _clamped(eig.eigenvalues)
    v = eig.eigenvectors
    return (v * np.sqrt(w)) @ v.conj().T


def entropy_of_spectrum(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def von_neumann_entropy(rho) -> float:
    """S(rho) in bits. Eigenvalues within 1e-10 below zero are treated as zero."""
    w = _clamped(eigvalsh(rho))
    return max(0.0, entropy_of_spectrum(w))


SUPPORT_TOL = 1e-14


def _support_sqrt_factor(rho) -> np.ndarray:
    """B with B B^dagger = rho restricted to its numerical support: V_s diag(sqrt w_s).

    Eigenvalues below ``SUPPORT_TOL * max(w)`` are Jacobi round-off and are
    dropped instead of square-rooted (sqrt would turn 1e-18 noise into 1e-9).
    """
    eig = hermitian_eig(rho)
    w = _clamped(eig.eigenvalues)
    keep = w > SUPPORT_TOL * max(w.max(), 1e-300)
    return eig.eigenvectors[:, keep] * np.sqrt(w[keep])


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity in the squared convention, ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Computed as the squared trace norm of B_rho^dagger B_sigma, which equals
    ``||sqrt(rho) sqrt(sigma)||_1``; the formula is symmetric in its arguments
    and gives ``fidelity(|psi><psi|, sigma) == <psi|sigma|psi>`` for pure input.
    """
    rho = as_matrix(rho)
    sigma = as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"{rho.shape} vs {sigma.shape}")
    m = dagger(_support_sqrt_factor(rho)) @ _support_sqrt_factor(sigma)
    # LAPACK singular values: computed directly, not as square roots of eigenvalues
    sv = np.linalg.svd(m, compute_uv=False)
    return float(min(1.0, np.sum(sv) ** 2))


def random_hermitian(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.uniform(-1, 1, (n, n)) + 1j * rng.uniform(-1, 1, (n, n))
    return 0.5 * (g + g.conj().T)


# -- JSON (de)serialisation -------------------------------------------------

def matrix_to_dict(a) -> dict:
    a = as_matrix(a)
    rows, cols = a.shape
    flat = a.reshape(-1)
    return {"rows": rows, "cols": cols, "re": flat.real.tolist(), "im": flat.imag.tolist()}


def matrix_from_dict(d: dict) -> np.ndarray:
    rows, cols = int(d["rows"]), int(d["cols"])
    re, im = d["re"], d["im"]
    if len(re) != rows * cols or len(im) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, got {len(re)} re / {len(im)} im")
    return (np.asarray(re, dtype=float) + 1j * np.asarray(im, dtype=float)).reshape(rows, cols)


def vector_to_dict(v) -> dict:
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    return {"d": v.size, "re": v.real.tolist(), "im": v.imag.tolist()}


def vector_from_dict(d: dict) -> np.ndarray:
    n = int(d["d"])
    if len(d["re"]) != n or len(d["im"]) != n:
        raise ValueError(f"expected {n} amplitudes")
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
