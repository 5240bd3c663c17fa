"""Symbolic and numeric calculus for generalized Lie algebroids:
lifts to the generalized tangent bundle of a (dual) vector bundle,
Legendre transformations between fundamental functions, and executable
verification of the structural identities."""

from .algebroid import (
    CoordSystem,
    GeneralizedLieAlgebroid,
    SectionF,
    SmoothMap,
    check_anchor_morphism,
    check_antisymmetry,
    check_compatibility,
    check_jacobi,
    check_leibniz,
    coords,
    identity_map,
)
from .duality import (
    EquivalenceReport,
    LegendrePair,
    bracket_commutation,
    check_lift_transport,
    classical_reduced_conditions,
    legendre_equivalence,
    morphism_conditions,
    tangent_legendre_h,
    tangent_legendre_l,
    transformed_section,
)
from .expr import (
    Binding,
    EvaluationError,
    Expr,
    ExprSyntaxError,
    Sampler,
    UnboundVariableError,
    UnknownFunctionError,
    add,
    central_difference,
    compiled,
    cos,
    const,
    differentiate,
    equivalent,
    evaluate,
    exp,
    free_variables,
    log,
    max_residual,
    mul,
    neg,
    normalize,
    parse,
    power,
    sin,
    sqrt,
    substitute,
    to_string,
    var,
)
from .exterior import (
    BundleMorphism,
    FormQ,
    VectorBundle,
    basis_one_form,
    function_form,
    gh_lie_derivative,
    identity_morphism,
    lie_derivative,
    one_form,
    pullback_form,
    pushforward_section,
    wedge,
)
from .legendre import (
    Hamiltonian,
    HessianResult,
    HomogeneityReport,
    Lagrangian,
    NewtonConvergenceError,
    NewtonResult,
    SingularJacobianError,
    check_homogeneity,
    check_round_trip,
    legendre_transform,
    legendre_transform_h,
    phi_h,
    phi_l,
    solve_fiber,
    solve_fiber_h,
)
from .modelio import Model, ModelError, emit_report, format_model, load_model, parse_model
from .prolong import (
    AnchoredBundle,
    ProlongSection,
    Section,
    VectorFieldOnE,
    almost_tangent,
    basis_section,
    bracket_prolong,
    complete_lift,
    complete_lift_function,
    complete_lift_vf,
    hat_form,
    horizontal_basis,
    k_coefficients,
    k_coefficients_via_bracket,
    pull_from_algebroid,
    push_to_algebroid,
    rho_tilde,
    vertical_basis,
    vertical_lift,
    vertical_lift_function,
    vertical_lift_vf,
)
from .reporting import CheckReport, CheckRow

__all__ = [name for name in dir() if not name.startswith("_")]
