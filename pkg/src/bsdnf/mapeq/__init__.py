"""Formal maps between BSD models and the mapping-equation machinery."""

from .certify import Certificate, compare_embeddings, is_embedding, normal_form, normalize_initial, rigidity_check
from .formal import FormalMap
from .residual import max_residual_degree, residual, residual_blocks, residual_matrix, substitute_defining
from .solver import (
    DegreeStepSolution,
    analyze_gauge,
    assign_step,
    degree_step_solve,
    gauge_directions,
    gauge_fix,
    gauge_generators,
    identity_kernel,
    step_labels,
)

__all__ = [
    "Certificate",
    "DegreeStepSolution",
    "FormalMap",
    "analyze_gauge",
    "assign_step",
    "compare_embeddings",
    "degree_step_solve",
    "gauge_directions",
    "gauge_fix",
    "gauge_generators",
    "identity_kernel",
    "is_embedding",
    "max_residual_degree",
    "normal_form",
    "normalize_initial",
    "residual",
    "residual_blocks",
    "residual_matrix",
    "rigidity_check",
    "step_labels",
    "substitute_defining",
]
