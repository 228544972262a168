"""Third-order Euler-Poisson expressions and their variational checks.

The homogeneous expression lives on second-order velocities ``(u, udot,
uddot)`` of curves in E^3; the reduced one lives on contact jets ``(v, v',
v'')`` of graphs ``t -> (x1(t), x2(t))``.  Both are checked against an
independent finite-difference Euler-Poisson operator and against the
Helmholtz conditions for third-order systems.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (
    AxisSingular,
    ChartViolation,
    GaugeViolation,
    NotAnIsometry,
    NullSpeed,
    StepOutOfRange,
)
from .pseudo_euclidean import EUCLID, CausalClass, Metric, causal_class, dot, dual2, lowered_cross

EPS_SING = 1e-8
ZETA_STEP = 1e-2
ZETA_RADIUS = 4
LEVI2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class ModelParams:
    m: float = 0.0
    A: float = 0.0
    metric: Metric = EUCLID


def speed_squared(u, g=EUCLID, name="u"):
    """Return ``u.u``; raise NullSpeed unless u is timelike-positive."""
    cls = causal_class(u, g)
    if cls is CausalClass.NULL:
        raise NullSpeed(f"{name}: null speed")
    if cls is CausalClass.SPACELIKE:
        raise NullSpeed(f"{name}: spacelike velocity (u.u < 0) outside the timelike domain")
    return dot(u, u, g)


def ep_expression(u, udot, uddot, params=ModelParams()):
    """Covariant Euler-Poisson vector of the invariant third-order problem.

    The contravariant form is

        (uddot x u)/|u|^3 - 3 (udot x u)(udot.u)/|u|^5
            + m [udot (u.u) - u (udot.u)]/|u|^3

    and the returned components are lowered with the metric, so that
    ``E . u`` is the plain contraction ``sum(E * u)``.
    """
    g = params.metric
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    uddot = np.asarray(uddot, dtype=float)
    s = speed_squared(u, g)
    p = dot(udot, u, g)
    s32 = s * np.sqrt(s)
    return (
        lowered_cross(uddot, u) / s32
        - 3.0 * p * lowered_cross(udot, u) / (s32 * s)
        + params.m * g.diag * (udot * s - u * p) / s32
    )


def _chart_factor(v):
    S = 1.0 + float(np.dot(v, v))
    if not S > 0.0:
        raise ChartViolation(f"v: chart violation (1 + v.v = {S})")
    return S


def ep_reduced(v, vprime, vsecond, m=0.0):
    """Euler-Poisson expression of the planar (contact-space) system."""
    v = np.asarray(v, dtype=float)
    vp = np.asarray(vprime, dtype=float)
    vs = np.asarray(vsecond, dtype=float)
    S = _chart_factor(v)
    vpv = float(np.dot(vp, v))
    return (
        -dual2(vs) / S**1.5
        + 3.0 * dual2(vp) * vpv / S**2.5
        + m * (S * vp - vpv * v) / S**1.5
    )


# ---------------------------------------------------------------- Lagrangians


@dataclass
class GaugeTerm:
    """Null Lagrangian ``udot . d(phi)/du + a . u``.

    ``phi`` must be homogeneous of degree zero (``u . dphi/du = 0``).
    ``grad_phi`` is optional; without it the gradient is taken by central
    differences, which is too noisy to sit inside the oracle.
    """

    phi: Optional[Callable] = None
    avec: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grad_phi: Optional[Callable] = None

    def gradient(self, u, h=1e-6):
        if self.phi is None:
            return np.zeros(3)
        if self.grad_phi is not None:
            return np.asarray(self.grad_phi(u), dtype=float)
        return _central_gradient(self.phi, np.asarray(u, dtype=float), h)

    def value(self, u, udot):
        return float(np.dot(udot, self.gradient(u)) + np.dot(self.avec, u))

    def check(self, points, tol=1e-6, h=1e-6):
        """Raise GaugeViolation if ``u . dphi/du`` exceeds ``tol`` at any point."""
        if self.phi is None:
            return
        for u in points:
            u = np.asarray(u, dtype=float)
            r = float(np.dot(u, _central_gradient(self.phi, u, h)))
            if abs(r) > tol:
                raise GaugeViolation(f"u . dphi/du = {r:.3g} at u = {u.tolist()}")


def _central_gradient(f, y, h):
    grad = np.empty(y.size)
    for i in range(y.size):
        e = np.zeros(y.size)
        e[i] = h
        grad[i] = (f(y + e) - f(y - e)) / (2.0 * h)
    return grad


def lagrangian(rho, u, udot, params=ModelParams(), gauge=None):
    """Member ``rho`` of the Lagrangian family producing ``ep_expression``.

    L_rho = u^rho [u, udot, e_rho] / (|u| (u.u - g_rho rho (u^rho)^2)) - m |u|
            + udot . dphi/du + a . u

    The denominator equals ``g_rho rho |u x e_rho|^2`` (Lagrange identity),
    i.e. ``|u x e_rho|^2`` in the Euclidean case.
    """
    g = params.metric
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    s = speed_squared(u, g)
    axis = s - g.diag[rho] * u[rho] ** 2
    if abs(axis) <= EPS_SING:
        raise AxisSingular(f"u is parallel to frame axis {rho}")
    # [u, udot, e_rho] = (u x udot)_rho with lowered (metric-free) components
    bracket = lowered_cross(u, udot)[rho]
    value = u[rho] * bracket / (np.sqrt(s) * axis) - params.m * np.sqrt(s)
    if gauge is not None:
        value += gauge.value(u, udot)
    return float(value)


# ---------------------------------------------------------------- oracle


def stencil_weights(radius, order):
    """Central finite-difference weights on the nodes -radius..radius (unit spacing)."""
    k = np.arange(-radius, radius + 1, dtype=float)
    rhs = np.zeros(k.size)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(np.vander(k, increasing=True).T, rhs)


_W1 = stencil_weights(ZETA_RADIUS, 1)
_W2 = stencil_weights(ZETA_RADIUS, 2)


def ep_operator_oracle(L, curve, zeta=0.0, h=1e-4):
    """Euler-Poisson operator of an arbitrary ``L(u, udot)`` along a polynomial curve.

    Computes ``-D(dL/du) + D^2(dL/dudot)`` at ``curve(zeta)``.  ``curve`` is a
    ``(k, 3)`` coefficient table (row j multiplies zeta**j, k <= 4).  Partials
    of L use central differences with step ``h``; the total derivatives D are
    five-point stencils in zeta (step ``ZETA_STEP``) applied to partials
    evaluated on the exact curve.  The stencils have ``2 * ZETA_RADIUS + 1``
    nodes; the five-point versions leave a truncation error near 1e-3 close
    to the axis singularity.
    """
    if not 1e-6 <= h <= 1e-2:
        raise StepOutOfRange(f"h = {h} outside [1e-6, 1e-2]")
    c = np.asarray(curve, dtype=float)
    if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] > 4:
        raise ValueError("curve must be a (k<=4, 3) coefficient table")
    cu = P.polyder(c, 1, axis=0)
    cw = P.polyder(c, 2, axis=0)

    def partials(z):
        u = P.polyval(z, cu)
        w = P.polyval(z, cw)
        y = np.concatenate([u, w])
        grad = _central_gradient(lambda yy: L(yy[:3], yy[3:]), y, h)
        return grad[:3], grad[3:]

    H = ZETA_STEP
    pts = [partials(zeta + k * H) for k in range(-ZETA_RADIUS, ZETA_RADIUS + 1)]
    dLu = np.array([p[0] for p in pts])
    dLw = np.array([p[1] for p in pts])
    return -(_W1 @ dLu) / H + (_W2 @ dLw) / H**2


def curve_through_jet(u, udot, uddot, x0=(0.0, 0.0, 0.0)):
    """Cubic coefficient table whose zeta=0 jet is (x0, u, udot, uddot)."""
    return np.array([x0, u, np.asarray(udot) / 2.0, np.asarray(uddot) / 6.0], dtype=float)


# ---------------------------------------------------------------- affine form


@dataclass
class AffineCoeffs:
    """``E = A v'' + (v'.d_v)A v' + B v' + c`` for a planar third-order system."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    dA: Optional[np.ndarray] = None  # dA[a, b, k] = d A_ab / d v_k

    def evaluate(self, vprime, vsecond):
        vp = np.asarray(vprime, dtype=float)
        vs = np.asarray(vsecond, dtype=float)
        if self.dA is None:
            raise ValueError("dA is needed to evaluate the quadratic term")
        dirA = np.einsum("abk,k->ab", self.dA, vp)
        return self.A @ vs + dirA @ vp + self.B @ vp + self.c


def extract_affine_coeffs(v, m=0.0, verify=True):
    """Closed-form A, B, c of the planar invariant system at ``v``.

    A_ab = e_ab / S^(3/2), B_ab = m (S delta_ab - v_a v_b) / S^(3/2), c = 0,
    with S = 1 + v.v.  When ``verify`` is set the reconstruction is compared
    with ``ep_reduced`` at three fixed random (v', v'') pairs.
    """
    v = np.asarray(v, dtype=float)
    S = _chart_factor(v)
    A = LEVI2 / S**1.5
    dA = -3.0 * LEVI2[:, :, None] * v[None, None, :] / S**2.5
    B = m * (S * np.eye(2) - np.outer(v, v)) / S**1.5
    coeffs = AffineCoeffs(A=A, B=B, c=np.zeros(2), dA=dA)
    if verify:
        rng = np.random.default_rng(20240611)
        for _ in range(3):
            vp, vs = rng.uniform(-1.0, 1.0, size=(2, 2))
            ref = ep_reduced(v, vp, vs, m)
            err = np.max(np.abs(coeffs.evaluate(vp, vs) - ref))
            if err > 1e-10 * max(1.0, np.max(np.abs(ref))):
                raise ArithmeticError(f"affine reconstruction off by {err:.3g}")
    return coeffs


# ---------------------------------------------------------------- Helmholtz

HELMHOLTZ_BLOCKS = (
    "closed_A",
    "skew_B",
    "B_A_compat",
    "sym_c",
    "curl_c_B",
    "curl_c_A",
)


def helmholtz_residuals(v, m=0.0, h=1e-4, coeffs=None, t=0.0, x=(0.0, 0.0), h_cartan=1e-3):
    """Max-abs residual of each of the six Helmholtz conditions at (t, x, v).

    ``coeffs(t, x, v) -> AffineCoeffs`` defaults to the invariant system with
    parameter ``m``.  Derivatives in v and x use central differences with step
    ``h``; powers of the Cartan field D1 = d_t + v.d_x are derivatives along
    (t + e, x + e v) with step ``h_cartan``.  The brackets follow the usual
    weights: T_[ab] = (T_ab - T_ba)/2, T_(ab) = (T_ab + T_ba)/2.
    """
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    _chart_factor(v)
    if coeffs is None:
        coeffs = lambda tt, xx, vv: extract_affine_coeffs(vv, m, verify=False)

    def field_at(name, tt, xx, vv):
        return np.asarray(getattr(coeffs(tt, xx, vv), name), dtype=float)

    def d_v(f, k):
        def g(tt, xx, vv):
            e = np.zeros(2)
            e[k] = h
            return (f(tt, xx, vv + e) - f(tt, xx, vv - e)) / (2.0 * h)

        return g

    def d_x(f, k):
        def g(tt, xx, vv):
            e = np.zeros(2)
            e[k] = h
            return (f(tt, xx + e, vv) - f(tt, xx - e, vv)) / (2.0 * h)

        return g

    def cartan(f, order=1):
        def g(tt, xx, vv):
            e = h_cartan

            def shifted(k):
                return f(tt + k * e, xx + k * e * vv, vv)

            if order == 1:
                return (shifted(1) - shifted(-1)) / (2.0 * e)
            if order == 2:
                return (shifted(1) - 2.0 * shifted(0) + shifted(-1)) / e**2
            if order == 3:
                return (shifted(2) - 2.0 * shifted(1) + 2.0 * shifted(-1) - shifted(-2)) / (2.0 * e**3)
            raise ValueError(order)

        return g

    Af = lambda tt, xx, vv: field_at("A", tt, xx, vv)
    Bf = lambda tt, xx, vv: field_at("B", tt, xx, vv)
    cf = lambda tt, xx, vv: field_at("c", tt, xx, vv)
    at = (t, x, v)

    A = Af(*at)
    B = Bf(*at)
    dvA = np.stack([d_v(Af, k)(*at) for k in range(2)])  # [k, a, b]
    dxA = np.stack([d_x(Af, k)(*at) for k in range(2)])
    dvB = np.stack([d_v(Bf, k)(*at) for k in range(2)])
    dxB = np.stack([d_x(Bf, k)(*at) for k in range(2)])
    dvc = np.stack([d_v(cf, k)(*at) for k in range(2)])  # [k, a] = d_k c_a
    dxc = np.stack([d_x(cf, k)(*at) for k in range(2)])
    D1A = cartan(Af)(*at)
    D1B = cartan(Bf)(*at)
    D3A = cartan(Af, 3)(*at)
    D1dvA = np.stack([cartan(d_v(Af, k))(*at) for k in range(2)])
    D2dvA = np.stack([cartan(d_v(Af, k), 2)(*at) for k in range(2)])
    D1dxA = np.stack([cartan(d_x(Af, k))(*at) for k in range(2)])
    D1dvc = np.stack([cartan(d_v(cf, k))(*at) for k in range(2)])
    ddvc = np.stack([np.stack([d_v(d_v(cf, j), k)(*at) for j in range(2)]) for k in range(2)])  # [k, j, a]

    perms = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1), ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]

    def alt3(T, a, b, c):
        # 6 * T_[abc] for T[k, a, b] = d_k A_ab
        idx = (a, b, c)
        return sum(sgn * T[idx[p[0]], idx[p[1]], idx[p[2]]] for p, sgn in perms)

    res = dict.fromkeys(HELMHOLTZ_BLOCKS, 0.0)

    def bump(name, value):
        res[name] = max(res[name], float(np.max(np.abs(value))))

    r2 = range(2)
    for a in r2:
        for b in r2:
            bump("skew_B", (B[a, b] - B[b, a]) - 3.0 * D1A[a, b])
            bump("sym_c", 0.5 * (dvc[a, b] + dvc[b, a]) - 0.5 * (D1B[a, b] + D1B[b, a]))
            bump(
                "curl_c_A",
                2.0 * (dxc[a, b] - dxc[b, a]) - D1dvc[a, b] + D1dvc[b, a] - D3A[a, b],
            )
            for c in r2:
                bump("closed_A", alt3(dvA, a, b, c) / 6.0)
                bump(
                    "B_A_compat",
                    (dvB[a, b, c] - dvB[b, a, c])
                    - 2.0 * (dxA[a, b, c] - dxA[b, a, c])
                    + dxA[c, a, b]
                    + 2.0 * D1dvA[c, a, b],
                )
                bump(
                    "curl_c_B",
                    (ddvc[c, a, b] - ddvc[c, b, a])
                    - 2.0 * (dxB[a, b, c] - dxB[b, a, c])
                    + D2dvA[c, a, b]
                    + alt3(D1dxA, a, b, c),
                )
    return res


# ---------------------------------------------------------------- symmetry


def equivariance_residual(u, udot, uddot, params, R):
    """``|E(Ru, Rudot, Ruddot) - R^{-T} E(u, udot, uddot)|_inf``."""
    g = params.metric
    R = np.asarray(R, dtype=float)
    if np.max(np.abs(R.T @ g.G @ R - g.G)) > 1e-10:
        raise NotAnIsometry("R^T G R != G")
    E = ep_expression(u, udot, uddot, params)
    ER = ep_expression(R @ u, R @ udot, R @ uddot, params)
    return float(np.max(np.abs(ER - np.linalg.solve(R.T, E))))
