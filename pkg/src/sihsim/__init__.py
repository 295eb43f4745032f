"""Desk-scale simulation of sparse Hamiltonian evolution via self-inverse gadgets.

Pipeline: parse a sparse time-dependent Hamiltonian, partition it into
real/imaginary 1-sparse terms, approximate each by an equally weighted family
of commuting self-inverse unitaries, compile a segmented gadget schedule, run
it on a statevector simulator (postselected or stochastic with fault
correction), and verify against an exact evolution oracle plus the
concentration-bound cost analysis.
"""

__version__ = "0.1.0"

from .hamiltonian import (Coefficient, DiagonalEntry, DimensionCapError, MatrixEntry,
                          NormReport, SpecFormatError, SpecValidationError,
                          TimeDependentHamiltonian, load_spec, parse_spec)
from .onesparse import (ColoringPlan, OneSparseTerm, color_edges, one_sparse_terms,
                        verify_partition)
from .selfinverse import (SelfInverseFamily, SelfInverseTerm, apply_term, decompose,
                          rounded_data, rounded_dense, verify_family)
from .gadget import (FaultOperator, FaultRecord, GadgetOutcome, apply_gadget,
                     fault_operator, gadget_matrices, segment_weight_distribution,
                     success_probability)
from .planner import (ResourceEstimate, SegmentPlan, choose_gamma, choose_k1, choose_r,
                      resource_estimate, segment_plan)
from .executor import (IdealResult, RunTrace, StochasticRunner, error_vs_exact,
                       run_ideal, run_stochastic, trotter_product)
from .walk import (CostBoundParams, WalkParameters, WalkResult, cap_bound, chernoff_cap,
                   fault_pmf, fault_pmf_bound, mgf_beta, mgf_bound_params,
                   monte_carlo_walk)
from .reference import (ReferenceEvolution, exact_evolution, metrics,
                        phase_aligned_operator_distance, state_distance, state_fidelity)

__all__ = [
    "__version__",
    "Coefficient", "DiagonalEntry", "DimensionCapError", "MatrixEntry", "NormReport",
    "SpecFormatError", "SpecValidationError", "TimeDependentHamiltonian",
    "load_spec", "parse_spec",
    "ColoringPlan", "OneSparseTerm", "color_edges", "one_sparse_terms", "verify_partition",
    "SelfInverseFamily", "SelfInverseTerm", "apply_term", "decompose", "rounded_data",
    "rounded_dense", "verify_family",
    "FaultOperator", "FaultRecord", "GadgetOutcome", "apply_gadget", "fault_operator",
    "gadget_matrices", "segment_weight_distribution", "success_probability",
    "ResourceEstimate", "SegmentPlan", "choose_gamma", "choose_k1", "choose_r",
    "resource_estimate", "segment_plan",
    "IdealResult", "RunTrace", "StochasticRunner", "error_vs_exact", "run_ideal",
    "run_stochastic", "trotter_product",
    "CostBoundParams", "WalkParameters", "WalkResult", "cap_bound", "chernoff_cap",
    "fault_pmf", "fault_pmf_bound", "mgf_beta", "mgf_bound_params", "monte_carlo_walk",
    "ReferenceEvolution", "exact_evolution", "metrics",
    "phase_aligned_operator_distance", "state_distance", "state_fidelity",
]
