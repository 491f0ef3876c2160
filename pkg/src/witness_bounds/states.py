"""State construction: density matrices, Haar-random states, GHZ/W, partial trace.

Basis ordering for n qubits is big-endian: qubit 0 is the most significant
bit, so |100> is index 4.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidBipartition, InvalidState
from .linalg import as_matrix, eigvalsh, frobenius_norm, hermitian_eig

NORM_TOL = 1e-10
DENSITY_TOL = 1e-9


@dataclass(frozen=True)
class BipartitionSpec:
    """Contiguous split of a d = dim_a * dim_b dimensional space into A|B."""

    dim_a: int
    dim_b: int

    def __post_init__(self):
        if self.dim_a < 2 or self.dim_b < 2:
            raise InvalidBipartition(f"both sides need dimension >= 2, got {self.dim_a}|{self.dim_b}")

    @property
    def dim(self) -> int:
        return self.dim_a * self.dim_b

    def swapped(self) -> "BipartitionSpec":
        return BipartitionSpec(self.dim_b, self.dim_a)


@dataclass(frozen=True)
class MixedStateRecipe:
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.components) or w.size == 0:
            raise InvalidState("need one weight per component")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise InvalidState(f"weights must be a probability vector (sum={w.sum()!r})")
        dims = {np.asarray(c).size for c in self.components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components have differing dimensions {sorted(dims)}")


# -- validation ---------------------------------------------------------------

def check_pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise InvalidState(f"state is not normalised (|psi|^2 = {norm2!r})")
    return psi


def check_density_matrix(rho, tol: float = DENSITY_TOL) -> np.ndarray:
    """Raise ``InvalidState`` unless rho is Hermitian, unit-trace and PSD within ``tol``."""
    rho = as_matrix(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidState(f"density matrix must be square, got {rho.shape}")
    if frobenius_norm(rho - rho.conj().T) > tol:
        raise InvalidState("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise InvalidState(f"trace {tr!r} != 1")
    lo = eigvalsh(rho)[0]
    if lo < -tol:
        raise InvalidState(f"negative eigenvalue {lo!r}")
    return rho


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.outer(psi, psi.conj())


def basis_state(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=np.complex128)
    v[index] = 1.0
    return v


def n_qubits(d: int) -> int:
    n = int(round(np.log2(d)))
    if 2**n != d:
        raise DimensionMismatch(f"dimension {d} is not a power of two")
    return n


# -- random states ------------------------------------------------------------

def child_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream for item ``index`` of a run seeded by ``master_seed``.

    ``SeedSequence`` spawn keys are platform independent, so the i-th stream
    is the same everywhere regardless of how items are scheduled.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(index,))))


def random_cue_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the phases of R's diagonal removed."""
    if d < 2:
        raise ValueError("d must be >= 2")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """CUE unitary applied to |0...0>, i.e. its first column."""
    u = random_cue_unitary(d, rng)
    psi = u[:, 0].copy()
    return psi / np.linalg.norm(psi)


def mix(recipe: MixedStateRecipe) -> np.ndarray:
    d = np.asarray(recipe.components[0]).size
    rho = np.zeros((d, d), dtype=np.complex128)
    for p, psi in zip(np.asarray(recipe.weights, dtype=float), recipe.components):
        rho += p * projector(psi)
    return 0.5 * (rho + rho.conj().T)


def random_mixed_state(d: int, n_components: int, rng: np.random.Generator, weights: str = "equal") -> np.ndarray:
    """Mixture of ``n_components`` Haar-random pure states.

    ``weights="equal"`` uses p_i = 1/N; ``"uniform"`` draws each weight from
    U(0, 1) and normalises.
    """
    comps = tuple(random_pure_state(d, rng) for _ in range(n_components))
    if weights == "equal":
        w = np.full(n_components, 1.0 / n_components)
    elif weights == "uniform":
        w = rng.uniform(0.0, 1.0, n_components)
        w = w / w.sum()
        w[-1] = 1.0 - w[:-1].sum()
    else:
        raise ValueError(f"unknown weight law {weights!r}")
    return mix(MixedStateRecipe(w, comps))


# -- canonical states ---------------------------------------------------------

def ghz_state(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("GHZ needs n >= 2")
    psi = np.zeros(2**n, dtype=np.complex128)
    psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
    return psi


def w_state(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("W needs n >= 2")
    psi = np.zeros(2**n, dtype=np.complex128)
    for k in range(n):
        psi[1 << (n - 1 - k)] = 1.0 / np.sqrt(n)
    return psi


def bell_state() -> np.ndarray:
    return ghz_state(2)


# -- reductions ---------------------------------------------------------------

def _check_split(d: int, split: BipartitionSpec) -> None:
    if split.dim != d:
        raise InvalidBipartition(f"split {split.dim_a}x{split.dim_b} does not match dimension {d}")


def partial_trace(rho, split: BipartitionSpec, keep: str = "A") -> np.ndarray:
    rho = as_matrix(rho)
    _check_split(rho.shape[0], split)
    t = rho.reshape(split.dim_a, split.dim_b, split.dim_a, split.dim_b)
    if keep == "A":
        return np.einsum("ikjk->ij", t)
    if keep == "B":
        return np.einsum("kikj->ij", t)
    raise InvalidBipartition(f"keep must be 'A' or 'B', got {keep!r}")


def schmidt_spectrum(psi, split: BipartitionSpec) -> np.ndarray:
    """Squared Schmidt coefficients (eigenvalues of the A-side reduced state), descending."""
    psi = check_pure_state(psi)
    _check_split(psi.size, split)
    rho_a = partial_trace(projector(psi), split, keep="A")
    w = np.clip(hermitian_eig(rho_a).eigenvalues[::-1], 0.0, None)
    return w / w.sum()


def permute_qubits(psi, order: Sequence[int]) -> np.ndarray:
    """Reorder qubits so that new qubit k is old qubit ``order[k]``."""
    psi = np.asarray(psi, dtype=np.complex128)
    n = n_qubits(psi.size)
    return np.transpose(psi.reshape((2,) * n), list(order)).reshape(-1)


def qubit_bipartitions(n: int) -> list:
    """Subsets A with 1 <= |A| <= n // 2, one per {A, complement} pair, lexicographic."""
    out = []
    for k in range(1, n // 2 + 1):
        for a in itertools.combinations(range(n), k):
            if 2 * k == n and 0 not in a:
                continue
            out.append(a)
    return out


def split_for_qubits(psi, subset_a: Sequence[int]):
    """Reorder ``psi`` so the qubits in ``subset_a`` come first; return (psi', split)."""
    n = n_qubits(np.asarray(psi).size)
    rest = [q for q in range(n) if q not in subset_a]
    order = list(subset_a) + rest
    return permute_qubits(psi, order), BipartitionSpec(2 ** len(subset_a), 2 ** len(rest))


def dephase(rho) -> np.ndarray:
    """The diagonal part of rho: its closest incoherent state in F-norm."""
    rho = as_matrix(rho)
    return np.diag(np.diag(rho).real).astype(np.complex128)

