"""Feynman propagators for time-dependent quadratic Lagrangians.

The kernel is assembled from its complex phase: the classical action solved
as an exact quadratic form in the endpoints, a time-only quantum correction
obtained by regularized quadrature, and a short-time normalization constant.
Every result can be cross-checked against a time-sliced path integral, the
defining Hamilton-Jacobi residual, the Van Vleck-Pauli-Morette expression,
and direct Schrodinger evolution.
"""

from .backend import BACKEND
from .classical import (
    ActionQuadraticForm,
    BoundaryData,
    ClassicalPath,
    FundamentalSystem,
    action_quadratic_form,
    classical_trajectory,
    closed_form_action,
    fundamental_system,
)
from .errors import (
    CausticSingularity,
    DegenerateGaussian,
    DegenerateSlice,
    EdgeLeakage,
    NonPositiveMass,
    OverdampedPreset,
    ParseError,
    QhjpropError,
    StencilOutOfDomain,
    ToleranceNotMet,
    ValidationError,
)
from .lagrangian import (
    Constant,
    DampedOscillator,
    DrivenOscillator,
    Exponential,
    FreeParticle,
    HarmonicOscillator,
    Polynomial,
    QuadraticLagrangian,
    Sinusoid,
    effective_potential,
    eval_coefficient,
    lagrangian_from_dict,
    lagrangian_to_dict,
    lagrangian_value,
    preset_from_dict,
    preset_lagrangian,
    preset_to_dict,
)
from .oracles import (
    GridWavefunction,
    ResidualReport,
    coherent_state,
    complex_gaussian_integral,
    composition_check,
    crank_nicolson_evolve,
    delta_equation_residual,
    gaussian_packet,
    kernel_evolve,
    qhje_residual,
    residual_report,
    richardson_extrapolate,
    short_time_norm_check,
    sliced_kernel_extrapolated,
    time_sliced_kernel,
)
from .propagator import (
    KernelSlice,
    PropagatorValue,
    caustic_index,
    caustic_phase,
    kernel_slice,
    normalization_constant,
    propagator_evaluate,
    vvpm_propagator,
)
from .quantum import (
    QuantumAction,
    QuantumActionField,
    closed_form_delta,
    delta_correction,
    quantum_action_total,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
