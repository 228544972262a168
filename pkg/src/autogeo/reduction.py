"""Projection from second-order velocities to contact elements.

A curve zeta -> x(zeta) in E^3 with x^0 increasing is read as the graph
t -> (x^1, x^2) with t = x^0.  The maps below carry jets, Euler-Poisson
densities, Lagrangians and affine coefficients between the two pictures.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ChartViolation, InconsistentDensity
from .euler_poisson import AffineCoeffs
from .pseudo_euclidean import EPS_NULL


@dataclass(frozen=True)
class ContactState:
    t: float
    x: np.ndarray
    v: np.ndarray
    vprime: np.ndarray

    def as_dict(self):
        return {
            "t": float(self.t),
            "x": [float(a) for a in self.x],
            "v": [float(a) for a in self.v],
            "vprime": [float(a) for a in self.vprime],
        }


def _check_u0(u0):
    if abs(u0) <= EPS_NULL:
        raise ChartViolation("u0: chart violation (u0 = 0)")


def project_state(x, u, udot):
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    u0 = u[0]
    _check_u0(u0)
    v = u[1:] / u0
    vprime = udot[1:] / u0**2 - udot[0] * u[1:] / u0**3
    return ContactState(t=float(x[0]), x=x[1:].copy(), v=v, vprime=vprime)


def contact_jet(u, udot, uddot):
    """``(v, v', v'')`` of the projected curve.

    v'' is the zeta-derivative of the v' formula divided by u0 = dt/dzeta.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    a = np.asarray(uddot, dtype=float)
    u0 = u[0]
    _check_u0(u0)
    ua, wa, aa = u[1:], w[1:], a[1:]
    v = ua / u0
    vprime = wa / u0**2 - w[0] * ua / u0**3
    dvprime = (
        aa / u0**2
        - 3.0 * w[0] * wa / u0**3
        - a[0] * ua / u0**3
        + 3.0 * w[0] ** 2 * ua / u0**4
    )
    return v, vprime, dvprime / u0


def reduce_ep(E3, u, tol=1e-10):
    """Planar EP components ``E_a = E3_a / u0`` of a covariant density.

    The time component must satisfy ``E3_0 = -(u^a/u^0) E3_a``, i.e. ``E3 . u = 0``.
    """
    E3 = np.asarray(E3, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_u0(u[0])
    defect = float(np.dot(E3, u))
    scale = max(1.0, float(np.max(np.abs(E3)) * np.max(np.abs(u))))
    if abs(defect) > tol * scale:
        raise InconsistentDensity(f"E.u = {defect:.3g} != 0")
    return E3[1:] / u[0]


def lift_lagrangian(L, u0):
    _check_u0(u0)
    return u0 * L


def coeff_correspondence(coeffs: AffineCoeffs, u0):
    """Homogeneous counterparts ``(A / u0^2, B / u0, u0 c)`` of planar coefficients."""
    _check_u0(u0)
    return (
        np.asarray(coeffs.A, dtype=float) / u0**2,
        np.asarray(coeffs.B, dtype=float) / u0,
        u0 * np.asarray(coeffs.c, dtype=float),
    )
