"""Variational third-order equations of 3D (pseudo-)Euclidean space and their attached connection."""

from .connection import (
    ConnectionCoeffs,
    FDeriv,
    Multipliers,
    attached_connection,
    attached_multipliers,
    autoparallel_rhs,
    f_derivatives,
    mu_lambda_analytic,
    psi,
    reducibility_multipliers,
    rhs_f,
)
from .errors import DomainExit, GeometryError
from .euler_poisson import (
    AffineCoeffs,
    GaugeTerm,
    ModelParams,
    ep_expression,
    ep_operator_oracle,
    ep_reduced,
    equivariance_residual,
    extract_affine_coeffs,
    helmholtz_residuals,
    lagrangian,
)
from .integrate import State3, Trajectory, compare_images, curvature_torsion, integrate, step_rk4
from .pseudo_euclidean import EUCLID, PSEUDO, CausalClass, Metric, cross, dot, norm, random_pseudo_rotation, triple
from .reduction import ContactState, coeff_correspondence, lift_lagrangian, project_state, reduce_ep

__version__ = "0.1.0"
