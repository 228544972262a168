"""Seeded verification suites for the variational and connection identities.

Every suite returns a ``SuiteReport``.  Sample ``i`` draws its randomness
from ``np.random.default_rng([seed, i])`` and results are combined with max
reductions, so reports do not depend on the number of workers.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .connection import (
    SMOOTH_CROSS,
    Multipliers,
    attached_connection,
    autoparallel_rhs,
    cross_ratio,
    f_derivatives,
    reducibility_multipliers,
    rhs_f,
)
from .errors import DomainExit, GeometryError
from .euler_poisson import (
    HELMHOLTZ_BLOCKS,
    GaugeTerm,
    ModelParams,
    ep_expression,
    ep_operator_oracle,
    ep_reduced,
    extract_affine_coeffs,
    helmholtz_residuals,
    lagrangian,
)
from .integrate import State3, compare_images, curvature_torsion, integrate, step_rk4
from .pseudo_euclidean import EUCLID, PSEUDO, CausalClass, causal_class, cross, dot, random_pseudo_rotation
from .reduction import contact_jet, reduce_ep

METRICS = (EUCLID, PSEUDO)
MIN_SPEED = 0.3
MIN_CROSS = 0.1
AXIS_GUARD = 0.1
CIRCLE = dict(x=(1.0, 0.0, 0.0), u=(0.0, 1.0, 0.0), udot=(-1.0, 0.0, 0.0))


@dataclass
class SuiteReport:
    suite: str
    samples: int
    seed: int
    max_residual: float
    tol: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "suite": self.suite,
            "samples": self.samples,
            "seed": self.seed,
            "max_residual": _json_float(self.max_residual),
            "tol": self.tol,
            "pass": self.passed,
            "detail": {k: _json_float(v) for k, v in self.detail.items()},
        }


def _json_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


# ---------------------------------------------------------------- sampling


def sample_velocity(rng, g=EUCLID, min_speed=MIN_SPEED):
    """Uniform [-1, 1]^3 draw, resampled until timelike with |u| >= min_speed."""
    while True:
        u = rng.uniform(-1.0, 1.0, 3)
        if causal_class(u, g) is CausalClass.TIMELIKE and dot(u, u, g) >= min_speed**2:
            return u


def sample_acceleration(rng, u, g=EUCLID, A=0.0):
    """Uniform draw; where the A-term is active keep |udot x u| >= 0.1 and the C^2 guard."""
    while True:
        w = rng.uniform(-1.0, 1.0, 3)
        if A == 0.0:
            return w
        z = cross(w, u, g)
        if math.sqrt(abs(dot(z, z, g))) >= MIN_CROSS and cross_ratio(u, w, g) >= SMOOTH_CROSS:
            return w


def run_samples(fn, n, seed, workers=1):
    """``[fn(i, rng_i) for i in range(n)]`` with per-index RNG streams."""
    def one(i):
        return fn(i, np.random.default_rng([seed, i]))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(n)))
    return [one(i) for i in range(n)]


def _scale(*arrays):
    return max(1.0, *(float(np.max(np.abs(a))) for a in arrays))


# ---------------------------------------------------------------- suites


def suite_weierstrass(samples=1000, seed=0, tol=1e-12, workers=1, params=None):
    """|E . u| relative to |E||u| on random jets, both metrics, m in [-2, 2]."""

    def one(i, rng):
        g = METRICS[i % 2]
        u = sample_velocity(rng, g)
        w, a = rng.uniform(-1.0, 1.0, (2, 3))
        m = rng.uniform(-2.0, 2.0)
        E = ep_expression(u, w, a, ModelParams(m=m, metric=g))
        denom = math.hypot(*E) * math.hypot(*u)
        return abs(float(np.dot(E, u))) / denom if denom > 0 else 0.0

    worst = max(run_samples(one, samples, seed, workers))
    return SuiteReport("weierstrass", samples, seed, worst, tol, worst <= tol)


def _phi_gauge(b):
    b = np.asarray(b, dtype=float)

    def phi(u):
        return float(np.dot(b, u) / np.linalg.norm(u))

    def grad(u):
        n = np.linalg.norm(u)
        return b / n - np.dot(b, u) * u / n**3

    return phi, grad


def suite_lagrangian_oracle(samples=100, seed=0, tol=5e-5, workers=1, params=None):
    """Finite-difference EP operator of each L_rho against the closed form.

    ``samples`` random cubic curves per axis rho in the metric of ``params``
    (Euclidean by default).  Also measures how much a gauge term moves the
    oracle output.
    """
    g = params.metric if params is not None else EUCLID

    def one(i, rng):
        rho = i % 3
        m = rng.uniform(-2.0, 2.0)
        p = ModelParams(m=m, metric=g)
        while True:
            u = sample_velocity(rng, g)
            if abs(dot(u, u, g) - g.diag[rho] * u[rho] ** 2) < AXIS_GUARD:
                continue
            w, a = rng.uniform(-1.0, 1.0, (2, 3))
            curve = np.array([rng.uniform(-1.0, 1.0, 3), u, w / 2.0, a / 6.0])
            b, avec = rng.uniform(-1.0, 1.0, (2, 3))
            phi, grad = _phi_gauge(b)
            gauge = GaugeTerm(phi=phi, avec=avec, grad_phi=grad)
            try:
                gauge.check([u])
                base = ep_operator_oracle(lambda uu, ww: lagrangian(rho, uu, ww, p), curve)
                gauged = ep_operator_oracle(lambda uu, ww: lagrangian(rho, uu, ww, p, gauge), curve)
            except GeometryError:
                continue
            E = ep_expression(u, w, a, p)
            return float(np.max(np.abs(base - E))), float(np.max(np.abs(gauged - base)))

    out = run_samples(one, 3 * samples, seed, workers)
    oracle = max(r[0] for r in out)
    gauge = max(r[1] for r in out)
    worst = max(oracle, gauge)
    return SuiteReport("lagrangian-oracle", 3 * samples, seed, worst, tol, worst <= tol,
                       {"oracle": oracle, "gauge": gauge})


def suite_helmholtz(samples=25, seed=0, tol=1e-6, workers=1, params=None, m_values=(0.0, 1.0, -2.0)):
    """All six Helmholtz blocks on an n x n grid of v in [-1, 1]^2 (n = round(sqrt(samples))).

    Also checks that tampering with B (B_12 += 0.1) is detected with a
    residual of at least 0.01.
    """
    n = max(2, int(round(math.sqrt(samples))))
    grid = np.linspace(-1.0, 1.0, n)
    points = [(m, np.array([a, b])) for m in m_values for a in grid for b in grid]

    def one(i, rng):
        m, v = points[i]
        return helmholtz_residuals(v, m)

    out = run_samples(one, len(points), seed, workers)
    blocks = {name: max(r[name] for r in out) for name in HELMHOLTZ_BLOCKS}
    worst = max(blocks.values())

    def tampered(tt, xx, vv):
        c = extract_affine_coeffs(vv, 1.0, verify=False)
        B = c.B.copy()
        B[0, 1] += 0.1
        return type(c)(A=c.A, B=B, c=c.c, dA=c.dA)

    detector = max(helmholtz_residuals(np.array([0.3, -0.2]), coeffs=tampered).values())
    detail = dict(blocks, detector=detector)
    return SuiteReport("helmholtz", len(points), seed, worst, tol, worst <= tol and detector >= 0.01, detail)


def suite_equivariance(samples=200, seed=0, tol=1e-10, workers=1, params=None, jets=20):
    """E and rhs_f under ``samples`` random proper (pseudo-)rotations times ``jets`` jets.

    Residuals are relative to max(1, largest component involved).
    """

    def one(i, rng):
        g = METRICS[i % 2]
        R = random_pseudo_rotation(int(rng.integers(2**32)), g)
        worst_e = worst_f = 0.0
        for k in range(jets):
            A = float(k % 2)
            p = ModelParams(m=rng.uniform(-2.0, 2.0), A=A, metric=g)
            u = sample_velocity(rng, g)
            w = sample_acceleration(rng, u, g, A)
            a = rng.uniform(-1.0, 1.0, 3)
            E = ep_expression(u, w, a, p)
            ER = ep_expression(R @ u, R @ w, R @ a, p)
            E_pushed = np.linalg.solve(R.T, E)
            worst_e = max(worst_e, float(np.max(np.abs(ER - E_pushed))) / _scale(ER, E_pushed))
            F = rhs_f(u, w, p)
            FR = rhs_f(R @ u, R @ w, p)
            worst_f = max(worst_f, float(np.max(np.abs(FR - R @ F))) / _scale(FR, R @ F))
        return worst_e, worst_f

    out = run_samples(one, samples, seed, workers)
    we = max(r[0] for r in out)
    wf = max(r[1] for r in out)
    worst = max(we, wf)
    return SuiteReport("equivariance", samples * jets, seed, worst, tol, worst <= tol,
                       {"ep_expression": we, "rhs_f": wf})


_MA_GRID = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))


def suite_reducibility(samples=1000, seed=0, tol=1e-10, workers=1, params=None):
    """mu, lambda and orthogonal residuals of the solved system, every (m, A) in {0,1}^2, both metrics."""

    def one(i, rng):
        g = METRICS[i % 2]
        worst = 0.0
        for m, A in _MA_GRID:
            p = ModelParams(m=m, A=A, metric=g)
            u = sample_velocity(rng, g)
            w = sample_acceleration(rng, u, g, A)
            red = reducibility_multipliers(f_derivatives(u, w, p), u, w, g)
            worst = max(worst, abs(red.mu), abs(red.lam), red.residual_mu, red.residual_lam)
        return worst

    worst = max(run_samples(one, samples, seed, workers))
    return SuiteReport("reducibility", samples * len(_MA_GRID), seed, worst, tol, worst <= tol)


def suite_attachment(samples=1000, seed=0, tol=1e-8, workers=1, params=None):
    """Autoparallel RHS of the attached connection against rhs_f, relative, both metrics."""

    def one(i, rng):
        g = METRICS[i % 2]
        m, A = _MA_GRID[(i // 2) % 4]
        p = ModelParams(m=m, A=A, metric=g)
        u = sample_velocity(rng, g)
        w = sample_acceleration(rng, u, g, A)
        F = rhs_f(u, w, p)
        got = autoparallel_rhs(attached_connection(u, w, p), Multipliers(), u, w)
        return float(np.max(np.abs(got - F))) / _scale(F)

    worst = max(run_samples(one, samples, seed, workers))
    return SuiteReport("attachment", samples, seed, worst, tol, worst <= tol)


def suite_geodesic_circle(samples=1, seed=0, tol=1e-9, workers=1, params=None, h=1e-3,
                          t_end=2.0 * math.pi, kappa_tol=1e-6, tau_tol=1e-8):
    """Integrate circle initial data over [0, 2 pi]: constant kappa, zero tau, closure.

    ``params`` defaults to m = 0, A = 0 in the Euclidean metric.
    """
    p = params if params is not None else ModelParams()
    s0 = State3.make(**CIRCLE)
    try:
        traj = integrate(s0, p, t_end, h)
    except DomainExit as exc:
        t_exit = float(exc.state.t) if exc.state is not None else float("nan")
        return SuiteReport("geodesic-circle", 1, seed, float("inf"), tol, False,
                           {"domain_exit_t": t_exit, "t_end": t_end})
    diag = [curvature_torsion(traj.u[i], traj.udot[i], traj.uddot[i], p.metric) for i in range(len(traj))]
    kappa = np.array([d.kappa for d in diag])
    tau = np.array([0.0 if d.tau is None else d.tau for d in diag])
    spread = float(np.std(kappa) / np.mean(kappa))
    tau_max = float(np.max(np.abs(tau)))
    gap = float(np.linalg.norm(traj.x[-1] - traj.x[0]))
    ok = gap <= tol and spread <= kappa_tol and tau_max <= tau_tol
    return SuiteReport("geodesic-circle", len(traj), seed, gap, tol, ok,
                       {"kappa_spread": spread, "tau_max": tau_max, "ep_residual": traj.max_ep_residual})


def trim_to_point(traj, target):
    """Positions of ``traj`` cut where it passes closest to ``target``.

    The cut sample is completed by a partial RK4 step whose length minimises
    the distance to ``target``.
    """
    d = np.linalg.norm(traj.x - target, axis=1)
    j = int(np.argmin(d))
    lo = max(0, j - 1)
    s = State3(float(traj.t[lo]), traj.x[lo], traj.u[lo], traj.udot[lo])
    span = traj.h_step * (2 if j + 1 < len(traj) else 1)

    def dist(tau):
        if tau <= 0.0:
            return float(np.linalg.norm(s.x - target))
        return float(np.linalg.norm(step_rk4(s, traj.params, tau).x - target))

    res = minimize_scalar(dist, bounds=(0.0, span), method="bounded", options={"xatol": 1e-14})
    end = step_rk4(s, traj.params, res.x).x if res.x > 0 else s.x
    return np.vstack([traj.x[: lo + 1], end])


def suite_image_independence(samples=1, seed=0, tol=1e-5, workers=1, params=None, h=1e-3,
                             t_end=0.4, A_values=(0.0, 1.0)):
    """Images of equal initial data under two values of A, compared over the first arc.

    The reference run (first A) goes to ``t_end``; the second is integrated
    far enough and cut where it reaches the reference endpoint.
    """
    metric = params.metric if params is not None else EUCLID
    m = params.m if params is not None else 0.0
    s0 = State3.make(**CIRCLE)
    a0, a1 = A_values
    ref = integrate(s0, ModelParams(m=m, A=a0, metric=metric), t_end, h)
    try:
        other = integrate(s0, ModelParams(m=m, A=a1, metric=metric), 2.0 * t_end, h)
    except DomainExit as exc:
        other = exc.trajectory
    cut = trim_to_point(other, ref.x[-1])
    dist = compare_images(ref, cut)
    return SuiteReport("image-independence", len(ref) + len(cut), seed, dist, tol, dist <= tol,
                       {"A_ref": a0, "A_other": a1, "t_end": t_end})


def suite_rk4_order(samples=1, seed=0, tol=0.2, workers=1, params=None, h=0.02, t_end=1.0):
    """Observed order from runs at h, h/2 and an h/4 reference (|order - 4| <= tol, factor >= 14).

    The test problem is m = 1, A = 0 with generic initial data, which stays
    well inside the domain on [0, 1].
    """
    s0 = State3.make(x=(0.0, 0.0, 0.0), u=(1.0, 0.2, -0.1), udot=(0.1, -0.3, 0.4))
    p = params if params is not None else ModelParams(m=1.0)
    ends = [integrate(s0, p, t_end, h / k).x[-1] for k in (1, 2, 4)]
    e1 = float(np.linalg.norm(ends[0] - ends[2]))
    e2 = float(np.linalg.norm(ends[1] - ends[2]))
    factor = e1 / e2
    order = math.log2(factor)
    dev = abs(order - 4.0)
    return SuiteReport("rk4-order", 3, seed, dev, tol, dev <= tol and factor >= 14.0,
                       {"order": order, "factor": factor, "error_h": e1, "error_h2": e2})


def suite_reduction(samples=500, seed=0, tol=1e-9, workers=1, params=None):
    """reduce_ep(ep_expression(jet)) against ep_reduced(projected jet), Euclidean, u0 > 0."""

    def one(i, rng):
        m = rng.uniform(-2.0, 2.0)
        u = sample_velocity(rng, EUCLID)
        while abs(u[0]) < 0.1:
            u = sample_velocity(rng, EUCLID)
        u[0] = abs(u[0])
        w, a = rng.uniform(-1.0, 1.0, (2, 3))
        E3 = ep_expression(u, w, a, ModelParams(m=m))
        lhs = reduce_ep(E3, u)
        rhs = ep_reduced(*contact_jet(u, w, a), m=m)
        return float(np.max(np.abs(lhs - rhs))) / _scale(lhs, rhs)

    worst = max(run_samples(one, samples, seed, workers))
    return SuiteReport("reduction", samples, seed, worst, tol, worst <= tol)


SUITES = {
    "weierstrass": (suite_weierstrass, 1000),
    "lagrangian-oracle": (suite_lagrangian_oracle, 100),
    "helmholtz": (suite_helmholtz, 25),
    "equivariance": (suite_equivariance, 200),
    "reducibility": (suite_reducibility, 1000),
    "attachment": (suite_attachment, 1000),
    "geodesic-circle": (suite_geodesic_circle, 1),
    "image-independence": (suite_image_independence, 1),
    "rk4-order": (suite_rk4_order, 1),
    "reduction": (suite_reduction, 500),
}


def run_suite(name, samples=None, seed=0, tol=None, workers=1, params=None, **kwargs):
    try:
        fn, default_samples = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}") from None
    if samples is None:
        samples = default_samples
    if tol is not None:
        kwargs["tol"] = tol
    return fn(samples=samples, seed=seed, workers=workers, params=params, **kwargs)
