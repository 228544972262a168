"""Fixed-step RK4 integration of the autogeodesic equation and curve diagnostics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .connection import EPS_CROSS, cross_ratio, rhs_f
from .errors import DomainExit, EmptyTrajectory, GeometryError, NullSpeed, StepBudgetExceeded
from .euler_poisson import ModelParams, ep_expression
from .pseudo_euclidean import EUCLID, CausalClass, causal_class, cross, dot, triple

MAX_STEPS = 10**7


@dataclass(frozen=True)
class State3:
    t: float
    x: np.ndarray
    u: np.ndarray
    udot: np.ndarray

    @classmethod
    def make(cls, x, u, udot, t=0.0):
        return cls(float(t), np.asarray(x, dtype=float), np.asarray(u, dtype=float),
                   np.asarray(udot, dtype=float))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    udot: np.ndarray
    uddot: np.ndarray
    params: ModelParams
    h: float
    h_step: float
    scheme: str = "rk4"
    ep_residual: Optional[np.ndarray] = None
    error_estimate: Optional[float] = None
    complete: bool = True

    def __len__(self):
        return len(self.t)

    @property
    def samples(self):
        return [State3(float(self.t[i]), self.x[i], self.u[i], self.udot[i]) for i in range(len(self))]

    @property
    def max_ep_residual(self):
        if self.ep_residual is None or len(self.ep_residual) == 0:
            return 0.0
        return float(np.max(self.ep_residual))

    def truncated(self, n):
        return Trajectory(
            t=self.t[:n], x=self.x[:n], u=self.u[:n], udot=self.udot[:n], uddot=self.uddot[:n],
            params=self.params, h=self.h, h_step=self.h_step, scheme=self.scheme,
            ep_residual=None if self.ep_residual is None else self.ep_residual[:n],
            complete=self.complete,
        )


def _rhs(y, params):
    return np.concatenate([y[3:6], y[6:9], rhs_f(y[3:6], y[6:9], params)])


def _rk4(y, params, h, k1=None):
    def stage(i, yi):
        try:
            k = _rhs(yi, params)
        except GeometryError as exc:
            raise DomainExit(f"stage {i}: {exc}", stage=i) from exc
        if not np.all(np.isfinite(k)):
            raise DomainExit(f"stage {i}: non-finite derivative", stage=i)
        return k

    if k1 is None:
        k1 = stage(1, y)
    k2 = stage(2, y + 0.5 * h * k1)
    k3 = stage(3, y + 0.5 * h * k2)
    k4 = stage(4, y + h * k3)
    y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_new)):
        raise DomainExit("overflow", stage="overflow")
    return y_new


def step_rk4(s: State3, params=ModelParams(), h=1e-3):
    """One classical RK4 step of d/dt (x, u, udot) = (u, udot, F(u, udot))."""
    if not h > 0:
        raise ValueError("h must be positive")
    y = np.concatenate([s.x, s.u, s.udot])
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            y1 = _rk4(y, params, h)
        except DomainExit as exc:
            exc.state = s
            raise
    return State3(s.t + h, y1[:3], y1[3:6], y1[6:9])


def _ep_residuals(u, udot, uddot, params):
    return np.array([
        float(np.max(np.abs(ep_expression(u[i], udot[i], uddot[i], params)))) for i in range(len(u))
    ])


def integrate(s0: State3, params=ModelParams(), t_end=1.0, h=1e-3, max_steps=MAX_STEPS,
              richardson=False):
    """Fixed-step RK4 sweep from ``s0.t`` to ``t_end``.

    The number of steps is ``round((t_end - t0)/h)`` and the step actually
    used is ``(t_end - t0)/n``, so the grid lands on ``t_end`` exactly.
    Raises DomainExit (with the partial trajectory attached) if a stage
    leaves the admissible domain.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if not t_end > s0.t:
        raise ValueError("t_end must exceed the initial time")
    span = t_end - s0.t
    if span / h > max_steps:
        raise StepBudgetExceeded(f"{span / h:.3g} steps exceed the budget of {max_steps}")
    n = max(1, int(round(span / h)))
    h_step = span / n

    t = s0.t + h_step * np.arange(n + 1)
    Y = np.empty((n + 1, 9))
    K = np.empty((n + 1, 3))
    Y[0] = np.concatenate([s0.x, s0.u, s0.udot])
    try:
        K[0] = rhs_f(s0.u, s0.udot, params)
    except GeometryError as exc:
        raise DomainExit(f"initial state: {exc}", stage=0, state=s0) from exc

    def build(count, complete):
        traj = Trajectory(
            t=t[:count], x=Y[:count, :3].copy(), u=Y[:count, 3:6].copy(), udot=Y[:count, 6:].copy(),
            uddot=K[:count].copy(), params=params, h=h, h_step=h_step, complete=complete,
        )
        traj.ep_residual = _ep_residuals(traj.u, traj.udot, traj.uddot, params)
        return traj

    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            try:
                Y[i + 1] = _rk4(Y[i], params, h_step, k1=np.concatenate([Y[i, 3:6], Y[i, 6:9], K[i]]))
                K[i + 1] = rhs_f(Y[i + 1, 3:6], Y[i + 1, 6:9], params)
                if not np.all(np.isfinite(K[i + 1])):
                    raise DomainExit("non-finite derivative", stage="overflow")
            except (DomainExit, GeometryError) as exc:
                last = State3(float(t[i]), Y[i, :3].copy(), Y[i, 3:6].copy(), Y[i, 6:].copy())
                err = exc if isinstance(exc, DomainExit) else DomainExit(str(exc), stage="sample")
                err.state = last
                err.trajectory = build(i + 1, complete=False)
                raise err from exc

    traj = build(n + 1, complete=True)
    if richardson:
        # the h/2 run is 16 times more accurate, so |coarse - fine| is 15/16 of the coarse error
        fine = integrate(s0, params, t_end, h_step / 2.0, max_steps=2 * max_steps)
        traj.error_estimate = float(np.max(np.abs(fine.x[::2] - traj.x))) * 16.0 / 15.0
    return traj


@dataclass
class CurveDiagnostics:
    kappa: float
    tau: Optional[float]
    speed_class: CausalClass = CausalClass.TIMELIKE
    binormal_class: Optional[CausalClass] = None

    @property
    def straight(self):
        return self.tau is None


def curvature_torsion(u, udot, uddot, g=EUCLID):
    """First curvature and torsion from the first three derivatives.

    kappa = |u x udot| / |u|^3 and tau = [u, udot, uddot] / |u x udot|^2,
    with |w| = sqrt|w.w|.  tau is None on straight pieces (u x udot null).
    """
    u = np.asarray(u, dtype=float)
    udot = np.asarray(udot, dtype=float)
    speed_class = causal_class(u, g)
    if speed_class is CausalClass.NULL:
        raise NullSpeed("u: null speed")
    su = abs(dot(u, u, g))
    z = cross(u, udot, g)
    zz = abs(dot(z, z, g))
    kappa = float(np.sqrt(zz) / su**1.5)
    if cross_ratio(u, udot, g) <= EPS_CROSS:
        return CurveDiagnostics(kappa=0.0, tau=None, speed_class=speed_class,
                                binormal_class=CausalClass.NULL)
    tau = triple(u, udot, uddot) / zz
    return CurveDiagnostics(kappa=kappa, tau=float(tau), speed_class=speed_class,
                            binormal_class=causal_class(z, g))


def _positions(a):
    return np.asarray(a.x if isinstance(a, Trajectory) else a, dtype=float)


def point_to_polyline(points, polyline, chunk=512):
    """Euclidean distance from every point to the polyline through ``polyline``."""
    P = np.atleast_2d(points)
    Q = np.atleast_2d(polyline)
    if len(Q) == 1:
        return np.linalg.norm(P - Q[0], axis=1)
    A = Q[:-1]
    D = Q[1:] - A
    dd = np.einsum("ij,ij->i", D, D)
    dd = np.where(dd == 0.0, 1.0, dd)
    out = np.empty(len(P))
    for lo in range(0, len(P), chunk):
        Pc = P[lo:lo + chunk]
        R = Pc[:, None, :] - A[None, :, :]
        s = np.clip(np.einsum("psk,sk->ps", R, D) / dd, 0.0, 1.0)
        diff = R - s[:, :, None] * D[None, :, :]
        out[lo:lo + chunk] = np.sqrt(np.min(np.einsum("psk,psk->ps", diff, diff), axis=1))
    return out


def compare_images(a, b):
    """Symmetric mean point-to-polyline distance between two position sequences."""
    pa = _positions(a)
    pb = _positions(b)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyTrajectory("cannot compare an empty trajectory")
    return 0.5 * (float(np.mean(point_to_polyline(pa, pb))) + float(np.mean(point_to_polyline(pb, pa))))
