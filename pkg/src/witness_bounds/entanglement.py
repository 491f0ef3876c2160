"""Bipartite pure-state measures and witness-based GME lower bounds.

A GME witness W0 gives, through b = sqrt(Tr W0^2 - (Tr W0)^2 / d), a lower
bound -Tr(W0 rho) / b on the F-norm distance to the separable set that holds
for every bipartition at once (b only depends on d = m * n).  Monotone convex
maps f then turn that distance into bounds on concurrence, entanglement of
formation and geometric entanglement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .coherence import _clamp_distance, witness_normalization
from .errors import OutOfRange
from .linalg import as_matrix, check_hermitian, entropy_of_spectrum
from .states import (
    BipartitionSpec,
    check_pure_state,
    ghz_state,
    n_qubits,
    projector,
    qubit_bipartitions,
    schmidt_spectrum,
    split_for_qubits,
    w_state,
)


class MeasureKind(enum.Enum):
    CONCURRENCE = "C"
    ENTANGLEMENT_OF_FORMATION = "E_f"
    GEOMETRIC_ENTANGLEMENT = "E_g"


MEASURES = tuple(MeasureKind)


@dataclass(frozen=True)
class GMEWitness:
    operator: np.ndarray
    c_constant: float | None = None
    target: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "operator", check_hermitian(self.operator))


@dataclass(frozen=True)
class GMEBoundReport:
    d_sep_bound: float
    bounds: dict  # MeasureKind -> lower bound
    witness_expectation: float
    scale_b: float
    state: str = ""
    c: float | None = None

    CSV_HEADER = ("state", "c", "b", "tr_w_rho", "d_sep_bound", "C_bound", "E_f_bound", "E_g_bound")

    def csv_row(self) -> tuple:
        return (
            self.state,
            self.c,
            self.scale_b,
            self.witness_expectation,
            self.d_sep_bound,
            self.bounds[MeasureKind.CONCURRENCE],
            self.bounds[MeasureKind.ENTANGLEMENT_OF_FORMATION],
            self.bounds[MeasureKind.GEOMETRIC_ENTANGLEMENT],
        )

    def to_dict(self) -> dict:
        return dict(zip(self.CSV_HEADER, self.csv_row()))


def measures_from_spectrum(lam) -> dict:
    lam = np.clip(np.asarray(lam, dtype=float), 0.0, None)
    return {
        MeasureKind.ENTANGLEMENT_OF_FORMATION: entropy_of_spectrum(lam),
        MeasureKind.CONCURRENCE: math.sqrt(max(0.0, 2.0 * (1.0 - float(np.sum(lam**2))))),
        MeasureKind.GEOMETRIC_ENTANGLEMENT: max(0.0, 1.0 - float(lam.max())),
    }


def pure_bipartite_measures(psi, split: BipartitionSpec) -> dict:
    """E_f, C and E_g of a pure state across ``split``, from its Schmidt spectrum."""
    return measures_from_spectrum(schmidt_spectrum(psi, split))


def qubit_bipartition_measures(psi) -> dict:
    """Measures for every qubit bipartition A|rest, keyed by the tuple A."""
    psi = check_pure_state(psi)
    out = {}
    for subset in qubit_bipartitions(n_qubits(psi.size)):
        permuted, split = split_for_qubits(psi, subset)
        out[subset] = pure_bipartite_measures(permuted, split)
    return out


def pure_gme_measures(psi) -> dict:
    """GME versions of the pure-state measures: minimum over all bipartitions."""
    per = qubit_bipartition_measures(psi)
    return {k: min(m[k] for m in per.values()) for k in MEASURES}


def biseparable_overlap(psi) -> float:
    """max |<phi|psi>|^2 over biseparable pure phi: the largest squared Schmidt
    coefficient over all qubit bipartitions.  1/2 for GHZ_n, (n-1)/n for W_n."""
    psi = check_pure_state(psi)
    best = 0.0
    for subset in qubit_bipartitions(n_qubits(psi.size)):
        permuted, split = split_for_qubits(psi, subset)
        best = max(best, float(schmidt_spectrum(permuted, split)[0]))
    return best


def gme_witness_projector(psi, c: float) -> GMEWitness:
    """W0 = c I - |psi><psi|.

    Whether this is a valid GME witness depends on c; the standard choices are
    c = 1/2 for GHZ states and c = (N-1)/N for N-qubit W states.
    """
    if not 0.0 < c < 1.0:
        raise OutOfRange(f"c must lie in (0, 1), got {c}")
    psi = check_pure_state(psi)
    op = c * np.eye(psi.size, dtype=np.complex128) - projector(psi)
    return GMEWitness(op, float(c), psi)


def _operator(w):
    return w.operator if hasattr(w, "operator") else as_matrix(w)


def d_sep_witness_bound(w0, rho) -> float:
    """max(0, -Tr(W0 rho) / b): a bound on min over bipartitions of D_sep(rho)."""
    op = _operator(w0)
    b = witness_normalization(op).scale_b
    e = float(np.real(np.trace(op @ as_matrix(rho))))
    return max(0.0, -e / b)


def gme_lower_bound(kind: MeasureKind, d_sep: float) -> float:
    """Concurrence: sqrt(2) x; EoF: -log2(1 - x^2); geometric: x^2.

    The concurrence bound is not capped and can exceed the largest attainable
    concurrence when x > 1/sqrt(2).
    """
    x = _clamp_distance(float(d_sep))
    if kind is MeasureKind.CONCURRENCE:
        return math.sqrt(2.0) * x
    if kind is MeasureKind.ENTANGLEMENT_OF_FORMATION:
        return -math.log2(1.0 - x * x) + 0.0
    if kind is MeasureKind.GEOMETRIC_ENTANGLEMENT:
        return x * x
    raise OutOfRange(f"unknown measure {kind!r}")


def gme_bound_report(w0, rho, state: str = "") -> GMEBoundReport:
    op = _operator(w0)
    b = witness_normalization(op).scale_b
    e = float(np.real(np.trace(op @ as_matrix(rho))))
    x = max(0.0, -e / b)
    return GMEBoundReport(
        d_sep_bound=x,
        bounds={k: gme_lower_bound(k, x) for k in MEASURES},
        witness_expectation=e,
        scale_b=b,
        state=state,
        c=getattr(w0, "c_constant", None),
    )


def ghz_w_report(n: int = 3) -> tuple:
    """Bound reports for |GHZ_n> with c = 1/2 and |W_n> with c = (n-1)/n."""
    ghz = ghz_state(n)
    w = w_state(n)
    r_ghz = gme_bound_report(gme_witness_projector(ghz, 0.5), projector(ghz), state=f"ghz{n}")
    r_w = gme_bound_report(gme_witness_projector(w, (n - 1) / n), projector(w), state=f"w{n}")
    return r_ghz, r_w
