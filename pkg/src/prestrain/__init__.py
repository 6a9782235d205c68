"""Prestrained thin plates: curvature of the prescribed metric, the limiting
h^4 energy and direct evaluation of the 3D energy."""

from .elastic import ElasticModel, density_eval, minimizer_map_c, q2_reduced, q2a, q3
from .energy3d import (
    ansatz_kirchhoff,
    energy_Eh,
    exact_flat,
    recovery_deformation,
    recovery_pair,
    scaling_study,
)
from .errors import DomainError, PreconditionError, UnsupportedMetricError
from .fields import Poly2D, PolyVectorField, harmonic_polynomial
from .functional import (
    AdmissiblePair,
    I4Breakdown,
    constraint_residual_V,
    evaluate_I4,
    evaluate_I4_ex1,
    evaluate_I4_ex2,
    minimize_ex1,
)
from .geometry import (
    Regime,
    classify_regime,
    conformal,
    diag_lambda,
    identity_metric,
    polynomial_metric,
    riemann_covariant,
)
from .grid import Grid2D
from .immersion import (
    catalog_immersion,
    check_isometry_conditions,
    christoffel_expansion_check,
    cosserat_b0,
    curvature_identity_residual,
    director_d0,
    p_from_V,
)
from .optim import OptimizerOptions, lbfgs

__version__ = "0.1.0"

__all__ = [
    "AdmissiblePair",
    "DomainError",
    "ElasticModel",
    "Grid2D",
    "I4Breakdown",
    "OptimizerOptions",
    "Poly2D",
    "PolyVectorField",
    "PreconditionError",
    "Regime",
    "UnsupportedMetricError",
    "ansatz_kirchhoff",
    "catalog_immersion",
    "check_isometry_conditions",
    "christoffel_expansion_check",
    "classify_regime",
    "conformal",
    "constraint_residual_V",
    "cosserat_b0",
    "curvature_identity_residual",
    "density_eval",
    "diag_lambda",
    "director_d0",
    "energy_Eh",
    "evaluate_I4",
    "evaluate_I4_ex1",
    "evaluate_I4_ex2",
    "exact_flat",
    "harmonic_polynomial",
    "identity_metric",
    "lbfgs",
    "minimize_ex1",
    "minimizer_map_c",
    "p_from_V",
    "polynomial_metric",
    "q2_reduced",
    "q2a",
    "q3",
    "recovery_deformation",
    "recovery_pair",
    "riemann_covariant",
    "scaling_study",
]
