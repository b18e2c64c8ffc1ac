"""Canonical Jacobi frames along sub-Riemannian extremals of quaternionic contact models.

Modules:
    algebra     quaternionic structures on R^{4n}, Casimir decomposition
    model       constant-tensor models (flat, 3-Sasakian, custom) and curvature contractions
    flow        normal extremals and the quaternionic Heisenberg exponential map
    frame       structural matrices, symplectic products, canonical frame, R_cc
    comparison  Bonnet-Myers reports, conjugate times on the flat model
    suites      invariant checks driven by ``qcj validate``
"""

from .algebra import (QuaternionicStructure, StructureError, casimir, decompose, fatness_gram,
                      omega, standard_structure, validate_structure)
from .comparison import (BonnetMyersReport, ConjugateReport, bonnet_myers_report,
                         flat_conjugate_time, model_oscillator_time, trace_criterion_check)
from .flow import (ExtremalState, GroupPoint, flow_step, group_product, heisenberg_exp,
                   initial_state, integrate)
from .frame import (CurvatureUnavailable, FrameState, PhaseTangent, StructuralSlice,
                    canonical_vectors, dv_derivatives, evolve_frame, rcb, rcc, structural_slice,
                    sympl, trace_rcc)
from .model import (ModelValidationError, QcModelData, bianchi_rhs, bonnet_myers_form,
                    check_curvature, comp1_rhs, kappa, lemma_t0u_check, make_model,
                    random_model, rho_horizontal, ric, sum_sectional, torsion_xi)

__version__ = "0.1.0"

__all__ = [
    "BonnetMyersReport", "ConjugateReport", "CurvatureUnavailable", "ExtremalState",
    "FrameState", "GroupPoint", "ModelValidationError", "PhaseTangent", "QcModelData",
    "QuaternionicStructure", "StructuralSlice", "StructureError", "bianchi_rhs",
    "bonnet_myers_form", "bonnet_myers_report", "canonical_vectors", "casimir",
    "check_curvature", "comp1_rhs", "decompose", "dv_derivatives", "evolve_frame",
    "fatness_gram", "flat_conjugate_time", "flow_step", "group_product", "heisenberg_exp",
    "initial_state", "integrate", "kappa", "lemma_t0u_check", "make_model",
    "model_oscillator_time", "omega", "random_model", "rcb", "rcc", "rho_horizontal", "ric",
    "standard_structure", "structural_slice", "sum_sectional", "sympl", "torsion_xi",
    "trace_criterion_check", "trace_rcc", "validate_structure",
]
