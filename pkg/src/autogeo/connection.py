"""The solved third-order system and the second-order connection attached to it.

Everything is written in a flat (pseudo-)orthonormal frame, where the
structure forms vanish and the coefficients of the prolonged system are
ordinary partial derivatives of the right-hand side F(u, udot).

Squared lengths of u and udot are the metric quadratic forms ``u.u`` and
``udot.udot`` (signed); only the 4/3-power term uses ``|z.z|`` with
``z = u x udot``.  With the signed forms both reducibility multipliers
vanish identically in either signature.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import CrossSingular
from .euler_poisson import ModelParams, speed_squared
from .pseudo_euclidean import EUCLID, cross, dot

EPS_CROSS = 1e-9
SMOOTH_CROSS = 0.1
REDUCIBLE_TOL = 1e-8


def cross_ratio(u, udot, g=EUCLID):
    """``sqrt|z.z| / (|u|_E |udot|_E)`` for z = u x udot (0 if udot = 0)."""
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    z = cross(u, udot, g)
    scale = np.linalg.norm(u) * np.linalg.norm(udot)
    if scale == 0.0:
        return 0.0
    return float(np.sqrt(abs(dot(z, z, g))) / scale)


def _check_cross(u, udot, g, A, bound=EPS_CROSS):
    if A != 0.0 and cross_ratio(u, udot, g) <= bound:
        raise CrossSingular(f"|u x udot| too small for the 4/3-power term (ratio <= {bound})")


def psi(u, udot, A, g=EUCLID):
    """Psi = (3/2) udot.udot / u.u + 3 A |udot x u|^(4/3) / u.u."""
    s = speed_squared(u, g)
    _check_cross(u, udot, g, A)
    value = 1.5 * dot(udot, udot, g) / s
    if A != 0.0:
        z = cross(udot, u, g)
        value += 3.0 * A * abs(dot(z, z, g)) ** (2.0 / 3.0) / s
    return value


def psi_gradients(u, udot, A, g=EUCLID):
    """``(Psi, dPsi/du, dPsi/dudot)`` with covector gradients."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    J = _scalar_jets(u, w, g, A)
    val = J["psi"]
    return val.val, val.grad[:3], val.grad[3:]


def rhs_f(u, udot, params=ModelParams()):
    """Right-hand side of the solved autogeodesic equation ``uddot = F(u, udot)``."""
    g = params.metric
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    s = speed_squared(u, g)
    _check_cross(u, w, g, params.A)
    p = dot(w, u, g)
    q = dot(w, w, g)
    bracket = p * p / (s * s) - q / (2.0 * s)
    if params.A != 0.0:
        z = cross(w, u, g)
        bracket -= params.A * abs(dot(z, z, g)) ** (2.0 / 3.0) / s
    return 3.0 * p / s * w - 3.0 * bracket * u - params.m * cross(u, w, g)


# ---------------------------------------------------------------- analytic partials
#
# Each quantity is carried together with its exact gradient and Hessian in the
# six variables y = (u, udot).  The building blocks are quadratic forms in y
# (u.u, udot.u, udot.udot, the components of z), combined with the product,
# quotient and power rules below.  No finite differences are involved.


class _Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def const(cls, c):
        return cls(float(c), np.zeros(6), np.zeros((6, 6)))

    @classmethod
    def quadratic(cls, Q, y):
        """``y^T Q y`` for symmetric Q."""
        Qy = Q @ y
        return cls(float(y @ Qy), 2.0 * Qy, 2.0 * Q)

    def __add__(self, other):
        other = other if isinstance(other, _Jet) else _Jet.const(other)
        return _Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return _Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, _Jet):
            return _Jet(self.val * other, self.grad * other, self.hess * other)
        g1, g2 = self.grad, other.grad
        return _Jet(
            self.val * other.val,
            self.val * g2 + other.val * g1,
            self.val * other.hess + other.val * self.hess + np.outer(g1, g2) + np.outer(g2, g1),
        )

    __rmul__ = __mul__

    def apply(self, f0, f1, f2):
        """Compose with a scalar function given its value and first two derivatives."""
        return _Jet(f0, f1 * self.grad, f1 * self.hess + f2 * np.outer(self.grad, self.grad))

    def reciprocal(self):
        v = self.val
        return self.apply(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other):
        if not isinstance(other, _Jet):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def abs_power(self, k):
        """``|val|^k``."""
        v = self.val
        a = abs(v)
        sg = 1.0 if v >= 0 else -1.0
        return self.apply(a**k, sg * k * a ** (k - 1.0), k * (k - 1.0) * a ** (k - 2.0))


def _block(M, which):
    Q = np.zeros((6, 6))
    if which == "uu":
        Q[:3, :3] = M
    elif which == "ww":
        Q[3:, 3:] = M
    else:  # symmetric mixed form u^T M w
        Q[:3, 3:] = 0.5 * M
        Q[3:, :3] = 0.5 * M.T
    return Q


def _levi_civita():
    e = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (1, 0, 2): -1, (0, 2, 1): -1, (2, 1, 0): -1}.items():
        e[i, j, k] = s
    return e


LEVI3 = _levi_civita()


def _scalar_jets(u, w, g, A):
    y = np.concatenate([u, w])
    G = g.G
    s = _Jet.quadratic(_block(G, "uu"), y)
    p = _Jet.quadratic(_block(G, "uw"), y)
    q = _Jet.quadratic(_block(G, "ww"), y)
    # z^a = g^aa e_abc u^b w^c  (this is u x udot)
    z = [_Jet.quadratic(_block(g.diag[a] * LEVI3[a], "uw"), y) for a in range(3)]
    zz = sum((g.diag[a] * z[a] * z[a] for a in range(3)), _Jet.const(0.0))
    out = {"s": s, "p": p, "q": q, "z": z, "zz": zz}
    if A != 0.0:
        out["Z"] = zz.abs_power(2.0 / 3.0)
    inv_s = s.reciprocal()
    psi_jet = 1.5 * q * inv_s
    if A != 0.0:
        psi_jet = psi_jet + 3.0 * A * out["Z"] * inv_s
    out["psi"] = psi_jet
    out["inv_s"] = inv_s
    return out


@dataclass
class FDeriv:
    """Coefficients of the first prolongation of ``uddot = F(u, udot)``.

    ``F1[r, b] = dF^r/du^b``, ``F2[r, b] = dF^r/dudot^b``,
    ``F22[r, b, c] = d2F^r/dudot^b dudot^c``, ``F21[r, b, c] = d2F^r/dudot^b du^c``.
    F0 and F20 (position derivatives) vanish for the autonomous flat-frame system.
    """

    F: np.ndarray
    F1: np.ndarray
    F2: np.ndarray
    F22: np.ndarray
    F21: np.ndarray
    F0: np.ndarray = None
    F20: np.ndarray = None

    def __post_init__(self):
        if self.F0 is None:
            self.F0 = np.zeros((3, 3))
        if self.F20 is None:
            self.F20 = np.zeros((3, 3, 3))


def f_derivatives(u, udot, params=ModelParams()):
    """Closed-form partials of ``rhs_f`` up to the mixed second order."""
    g = params.metric
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    speed_squared(u, g)
    _check_cross(u, w, g, params.A, bound=SMOOTH_CROSS if params.A != 0.0 else EPS_CROSS)
    J = _scalar_jets(u, w, g, params.A)
    inv_s = J["inv_s"]
    p = J["p"]
    alpha = 3.0 * p * inv_s
    beta = -3.0 * (p * p * inv_s * inv_s - 0.5 * J["q"] * inv_s)
    if params.A != 0.0:
        beta = beta + 3.0 * params.A * J["Z"] * inv_s
    F = []
    for r in range(3):
        eu = np.zeros(6)
        eu[r] = 1.0
        ew = np.zeros(6)
        ew[3 + r] = 1.0
        ur = _Jet(u[r], eu, np.zeros((6, 6)))
        wr = _Jet(w[r], ew, np.zeros((6, 6)))
        F.append(alpha * wr + beta * ur - params.m * J["z"][r])
    grads = np.array([f.grad for f in F])
    hess = np.array([f.hess for f in F])
    return FDeriv(
        F=np.array([f.val for f in F]),
        F1=grads[:, :3],
        F2=grads[:, 3:],
        F22=hess[:, 3:, 3:],
        F21=hess[:, 3:, :3],
    )


def f_derivatives_fd(u, udot, params=ModelParams(), h=1e-5, h2=3e-4):
    """Finite-difference counterpart of ``f_derivatives`` (used as a guard).

    Five-point central stencils: step ``h`` for the first partials, and a
    nested stencil with step ``h2`` for the second partials (a single step
    cannot serve both: roundoff of nested differences grows like eps/h^2).
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)

    def F_of(y):
        return rhs_f(y[:3], y[3:], params)

    def jac(y, step):
        out = np.empty((3, 6))
        for i in range(6):
            e = np.zeros(6)
            e[i] = step
            out[:, i] = (F_of(y - 2 * e) - 8 * F_of(y - e) + 8 * F_of(y + e) - F_of(y + 2 * e)) / (12.0 * step)
        return out

    y = np.concatenate([u, w])
    J0 = jac(y, h)
    H = np.empty((3, 6, 6))
    for i in range(6):
        e = np.zeros(6)
        e[i] = h2
        H[:, :, i] = (jac(y - 2 * e, h2) - 8 * jac(y - e, h2) + 8 * jac(y + e, h2) - jac(y + 2 * e, h2)) / (12.0 * h2)
    return FDeriv(F=F_of(y), F1=J0[:, :3], F2=J0[:, 3:], F22=H[:, 3:, 3:], F21=H[:, 3:, :3])


# ---------------------------------------------------------------- reducibility


@dataclass
class Reducibility:
    mu: float
    lam: float
    residual_mu: float
    residual_lam: float
    reducible: bool


def _split_along(vec, u, g):
    s = dot(u, u, g)
    coef = dot(vec, u, g) / s
    return coef, float(np.linalg.norm(vec - coef * u))


def reducibility_multipliers(fd: FDeriv, u, udot, g=EUCLID, tol=REDUCIBLE_TOL):
    """Multipliers mu, lambda with 3F - F1 u - 2 F2 udot = 3 mu u and 3 udot - F2 u = 3 lambda u.

    The coefficients are metric projections onto u; the residuals are the
    Euclidean lengths of the remaining metric-orthogonal parts.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    speed_squared(u, g)
    lhs_mu = 3.0 * fd.F - fd.F1 @ u - 2.0 * fd.F2 @ w
    lhs_lam = 3.0 * w - fd.F2 @ u
    c_mu, r_mu = _split_along(lhs_mu, u, g)
    c_lam, r_lam = _split_along(lhs_lam, u, g)
    scale = max(1.0, float(np.max(np.abs(fd.F))), float(np.max(np.abs(w))))
    return Reducibility(
        mu=c_mu / 3.0,
        lam=c_lam / 3.0,
        residual_mu=r_mu,
        residual_lam=r_lam,
        reducible=bool(r_mu <= tol * scale and r_lam <= tol * scale),
    )


def mu_lambda_analytic(u, udot, A=0.0, g=EUCLID, psi_terms: Optional[Callable] = None):
    """mu and lambda of the solved system through Psi and its gradients.

    mu = (2 Psi - 2 udot . dPsi/dudot - u . dPsi/du) / 3
    lambda = u.udot / u.u - (u . dPsi/dudot) / 3

    ``psi_terms(u, udot) -> (Psi, dPsi/du, dPsi/dudot)`` replaces the built-in Psi.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    s = speed_squared(u, g)
    if psi_terms is None:
        _check_cross(u, w, g, A)
        val, gu, gw = psi_gradients(u, w, A, g)
    else:
        val, gu, gw = psi_terms(u, w)
    mu = (2.0 * val - 2.0 * float(np.dot(w, gw)) - float(np.dot(u, gu))) / 3.0
    lam = dot(u, w, g) / s - float(np.dot(u, gw)) / 3.0
    return mu, lam


# ---------------------------------------------------------------- connection


@dataclass
class ConnectionCoeffs:
    Gamma1: np.ndarray  # Gamma^r_b
    Gamma2: np.ndarray  # Gamma^r_bc, symmetric in (b, c)


@dataclass
class Multipliers:
    mu: float = 0.0
    lam: float = 0.0
    lambda1: float = 0.0
    lambda2: float = 0.0


def connection_from_derivatives(fd: FDeriv):
    Gamma1 = fd.F2 / 3.0
    Pi = (
        fd.F20 / 3.0
        + (np.einsum("rbm,mc->rbc", fd.F22, fd.F1) + np.einsum("rbm,mc->rbc", fd.F21, fd.F2)) / 9.0
        + 2.0 / 27.0 * np.einsum("rbm,mn,nc->rbc", fd.F22, fd.F2, fd.F2)
    )
    return ConnectionCoeffs(Gamma1=Gamma1, Gamma2=0.5 * (Pi + Pi.transpose(0, 2, 1)))


def attached_connection(u, udot, params=ModelParams()):
    return connection_from_derivatives(f_derivatives(u, udot, params))


def higher_multipliers(mu, lam, dlam_du=None, dlam_dudot=None, u=None, udot=None,
                       uddot=None, F2=None, read_typo_as_sum=False):
    """Multipliers lambda^(1), lambda^(2) of the autoparallel equation.

    For a strictly reducible equation (mu = lambda = 0) both vanish.  The
    general lambda^(1) formula has a missing operator between the udot and
    uddot terms in its only printed source; it is evaluated (reading the gap
    as '+') only when ``read_typo_as_sum`` is set.
    """
    lambda2 = 2.0 * lam
    if mu == 0.0 and lam == 0.0:
        return 0.0, lambda2
    if not read_typo_as_sum:
        raise ValueError("general lambda^(1) needs read_typo_as_sum=True")
    l1 = np.asarray(dlam_du, dtype=float)
    l2 = np.asarray(dlam_dudot, dtype=float)
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    uddot = np.asarray(uddot, dtype=float)
    lambda1 = (
        float(l1 @ udot) + float(l2 @ uddot)
        + mu * (1.0 - float(l2 @ u))
        - lam * (float(l1 @ u) + 2.0 / 3.0 * float(l2 @ (np.asarray(F2) @ u)))
        - 2.0 * lam**2
    )
    return lambda1, lambda2


def autoparallel_rhs(cc: ConnectionCoeffs, mult: Multipliers, u, udot):
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    return (
        cc.Gamma1 @ w
        + np.einsum("rmn,m,n->r", cc.Gamma2, u, u)
        + mult.lambda2 * w
        + mult.lambda1 * u
    )


def attached_multipliers(u, udot, params=ModelParams()):
    """Multipliers of the attached connection, computed from the prolonged system."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(udot, dtype=float)
    red = reducibility_multipliers(f_derivatives(u, w, params), u, w, params.metric)
    if not red.reducible:
        raise ArithmeticError("equation is not reducible at this point")
    # strict reducibility is decided at the same tolerance as reducibility itself
    strict = abs(red.mu) <= REDUCIBLE_TOL and abs(red.lam) <= REDUCIBLE_TOL
    mu, lam = (0.0, 0.0) if strict else (red.mu, red.lam)
    lambda1, lambda2 = higher_multipliers(mu, lam)
    return Multipliers(mu=mu, lam=lam, lambda1=lambda1, lambda2=lambda2)
