"""Witness-operator lower bounds on coherence and genuine multipartite entanglement.

Frobenius-norm distances to the incoherent and separable sets, estimated from
a single witness expectation value, are turned into lower bounds on standard
coherence measures (l1, geometric, relative entropy) and GME measures
(concurrence, entanglement of formation, geometric entanglement).  The package
also carries an amplitude-damping simulator and a small numpy MLP that learns
coherence from witness data.
"""
__version__ = "0.1.0"

from .coherence import (
    CoherenceReport,
    CoherenceWitness,
    GeometricOptions,
    c_geometric,
    c_l1,
    c_rel_ent,
    coherence_lower_bounds,
    coherence_report,
    d_inc_exact,
    d_inc_pure,
    d_inc_witness_bound,
    phase_matched_witness,
    witness_normalization,
)
from .entanglement import (
    GMEBoundReport,
    MeasureKind,
    biseparable_overlap,
    d_sep_witness_bound,
    gme_bound_report,
    gme_lower_bound,
    gme_witness_projector,
    pure_gme_measures,
)
from .linalg import fidelity
from .states import BipartitionSpec, child_rng, ghz_state, projector, random_mixed_state, random_pure_state, w_state

__all__ = [name for name in dir() if not name.startswith("_")]
