"""Spectral geometry of spacelike cross sections of the Minkowski lightcone.

A cross section of the standard future lightcone {t = r} is the graph
{r = omega} of a positive conformal factor omega on the round sphere; its
induced metric is omega^2 times the round metric.  This package computes the
associated geometry (curvatures, null expansions, the scalar second
fundamental form and its trace-free part), the action of the restricted
Lorentz group, null mean curvature flow of the factor, and the sharp
integral inequalities these quantities satisfy.
"""

from .sphere_spectral import (
    GridSpec,
    ScalarField,
    SpectralField,
    SymTensorField,
    TangentField,
    analyze,
    evaluate_at,
    first_harmonics,
    gradient,
    hessian,
    integrate,
    laplacian,
    make_grid,
    make_grid_oversampled,
    project_degrees,
    synthesize,
)
from .cross_section import CrossSection, GeometryReport, w22_distance, w22_norm
from .lorentz import (
    FourVector,
    LorentzMatrix,
    MoebiusMap,
    apply_to_section,
    balance,
    boost_toward,
    decompose,
    kappa_bound,
    special_boost,
    stcmc_from_z,
    z_vector,
)
from .flow import FlowConfig, FlowResult, FlowState, gradient_monitor, monotone_quantity, run, step, velocity
from . import estimates, families

__all__ = [
    "GridSpec",
    "ScalarField",
    "SpectralField",
    "SymTensorField",
    "TangentField",
    "analyze",
    "evaluate_at",
    "first_harmonics",
    "gradient",
    "hessian",
    "integrate",
    "laplacian",
    "make_grid",
    "make_grid_oversampled",
    "project_degrees",
    "synthesize",
    "CrossSection",
    "GeometryReport",
    "w22_distance",
    "w22_norm",
    "FourVector",
    "LorentzMatrix",
    "MoebiusMap",
    "apply_to_section",
    "balance",
    "boost_toward",
    "decompose",
    "kappa_bound",
    "special_boost",
    "stcmc_from_z",
    "z_vector",
    "FlowConfig",
    "FlowResult",
    "FlowState",
    "gradient_monitor",
    "monotone_quantity",
    "run",
    "step",
    "velocity",
    "estimates",
    "families",
]
