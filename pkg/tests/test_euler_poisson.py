import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from autogeo.errors import AxisSingular, ChartViolation, GaugeViolation, NotAnIsometry, NullSpeed, StepOutOfRange
from autogeo.euler_poisson import (
    HELMHOLTZ_BLOCKS,
    AffineCoeffs,
    GaugeTerm,
    ModelParams,
    curve_through_jet,
    ep_expression,
    ep_operator_oracle,
    ep_reduced,
    equivariance_residual,
    extract_affine_coeffs,
    helmholtz_residuals,
    lagrangian,
    stencil_weights,
)
from autogeo.pseudo_euclidean import EUCLID, PSEUDO, random_pseudo_rotation

METRICS = [EUCLID, PSEUDO]


# ---------------------------------------------------------------- ep_expression


def test_ep_straight_line_vanishes():
    for m in (0.0, 1.0, -3.0):
        np.testing.assert_array_equal(ep_expression([1, 0, 0], [0, 0, 0], [0, 0, 0], ModelParams(m=m)), 0.0)


def test_ep_unit_circle_vanishes():
    E = ep_expression([0, 1, 0], [-1, 0, 0], [0, -1, 0], ModelParams())
    np.testing.assert_allclose(E, 0.0, atol=1e-15)


def test_ep_hand_value():
    E = ep_expression([1, 0, 0], [0, 1, 0], [0, 0, 1], ModelParams(m=1.0))
    np.testing.assert_allclose(E, [0.0, 2.0, 0.0], atol=1e-15)


def test_ep_rejects_null_and_spacelike():
    with pytest.raises(NullSpeed, match="u: null speed"):
        ep_expression([0, 0, 0], [1, 0, 0], [0, 0, 0])
    with pytest.raises(NullSpeed):
        ep_expression([1, 1, 0], [1, 0, 0], [0, 0, 0], ModelParams(metric=PSEUDO))
    with pytest.raises(NullSpeed):
        ep_expression([0, 1, 0], [1, 0, 0], [0, 0, 0], ModelParams(metric=PSEUDO))


@settings(max_examples=200, deadline=None)
@given(
    u=st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    w=st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    a=st.lists(st.floats(-1, 1), min_size=3, max_size=3),
    m=st.floats(-2, 2),
    idx=st.integers(0, 1),
)
def test_weierstrass_orthogonality(u, w, a, m, idx):
    g = METRICS[idx]
    u = np.array(u)
    if g.index == 2:
        u[0] = 1.0 + abs(u[0])
    if np.linalg.norm(u) < 0.3 or (g.index == 2 and u[0] ** 2 - u[1] ** 2 - u[2] ** 2 < 0.09):
        return
    E = ep_expression(u, w, a, ModelParams(m=m, metric=g))
    # hypot, unlike a sum of squares, does not underflow for tiny components
    assert abs(np.dot(E, u)) <= 1e-12 * math.hypot(*E) * math.hypot(*u)


# ---------------------------------------------------------------- ep_reduced


def test_ep_reduced_examples():
    np.testing.assert_allclose(ep_reduced([0, 0], [1, 0], [0, 1], 0.0), [1.0, 0.0])
    np.testing.assert_array_equal(ep_reduced([0, 0], [0, 0], [0, 0], 5.0), [0.0, 0.0])
    np.testing.assert_allclose(ep_reduced([0, 0], [1, 0], [0, 0], 2.0), [2.0, 0.0])


# ---------------------------------------------------------------- Lagrangians


def test_lagrangian_examples():
    # the bracket [u, udot, e_rho] makes the family reproduce E (see the sympy check below)
    assert lagrangian(0, [1, 1, 0], [0, 0, 1]) == pytest.approx(1.0 / math.sqrt(2.0))
    assert lagrangian(2, [1, 0, 0], [0, 1, 0]) == 0.0
    assert lagrangian(0, [1, 1, 0], [0, 0, 0], ModelParams(m=1.0)) == pytest.approx(-math.sqrt(2.0))


def test_lagrangian_axis_singular():
    with pytest.raises(AxisSingular):
        lagrangian(0, [1, 0, 0], [0, 1, 0])


def _symbolic_ep(rho, g, m):
    """Euler-Poisson expression of L_rho built symbolically, as a function of the jet."""
    u = sp.symbols("u0:3")
    w = sp.symbols("w0:3")
    a = sp.symbols("a0:3")
    j = sp.symbols("j0:3")
    d = [sp.Integer(int(x)) for x in g.diag]
    s = sum(d[k] * u[k] ** 2 for k in range(3))
    bracket = sp.Matrix([u, w, [1 if k == rho else 0 for k in range(3)]]).det()
    L = u[rho] * bracket / (sp.sqrt(s) * (s - d[rho] * u[rho] ** 2)) - m * sp.sqrt(s)

    def D(f):
        return sum(sp.diff(f, u[k]) * w[k] + sp.diff(f, w[k]) * a[k] + sp.diff(f, a[k]) * j[k] for k in range(3))

    E = [-D(sp.diff(L, u[k])) + D(D(sp.diff(L, w[k]))) for k in range(3)]
    return sp.lambdify((u, w, a, j), E, "numpy")


@pytest.mark.parametrize("g", METRICS, ids=lambda g: g.name)
@pytest.mark.parametrize("rho", [0, 1, 2])
def test_lagrangian_family_symbolic(rho, g):
    m = 0.7
    E_sym = _symbolic_ep(rho, g, m)
    rng = np.random.default_rng(11 + rho)
    for _ in range(5):
        u = rng.uniform(-1, 1, 3)
        u[0] = 1.5 + abs(u[0])
        w, a, j = rng.uniform(-1, 1, (3, 3))
        got = np.array(E_sym(u, w, a, j), dtype=float)
        np.testing.assert_allclose(got, ep_expression(u, w, a, ModelParams(m=m, metric=g)), atol=1e-11)


# ---------------------------------------------------------------- oracle


def test_stencil_weights_are_exact_on_polynomials():
    k = np.arange(-4, 5, dtype=float)
    w1, w2 = stencil_weights(4, 1), stencil_weights(4, 2)
    for p in range(9):
        assert w1 @ k**p == pytest.approx(1.0 if p == 1 else 0.0, abs=1e-9)
        assert w2 @ k**p == pytest.approx(2.0 if p == 2 else 0.0, abs=1e-9)


def test_oracle_straight_line():
    curve = np.array([[0.3, -1, 2], [1.0, 0.4, -0.7]])
    L = lambda u, w: lagrangian(0, u, w)
    for zeta in (0.0, 0.5):
        np.testing.assert_allclose(ep_operator_oracle(L, curve, zeta), 0.0, atol=1e-6)


def test_oracle_pure_gauge():
    a = np.array([0.3, -1.2, 2.0])
    curve = np.array([[0, 0, 0], [1, 2, 0], [0, 0.5, 0.5], [1 / 6, 0, 0]])
    np.testing.assert_allclose(ep_operator_oracle(lambda u, w: float(a @ u), curve), 0.0, atol=1e-6)


def test_oracle_matches_closed_form():
    p = ModelParams(m=1.0)
    u, w, a = [1, 2, 0], [0, 1, 1], [1, 0, 0]
    curve = curve_through_jet(u, w, a)
    got = ep_operator_oracle(lambda uu, ww: lagrangian(0, uu, ww, p), curve)
    np.testing.assert_allclose(got, ep_expression(u, w, a, p), atol=5e-5)


def test_oracle_step_range():
    curve = np.array([[0, 0, 0], [1, 0, 0]])
    with pytest.raises(StepOutOfRange):
        ep_operator_oracle(lambda u, w: 0.0, curve, h=1e-7)
    with pytest.raises(StepOutOfRange):
        ep_operator_oracle(lambda u, w: 0.0, curve, h=0.1)


def test_gauge_term_invariance_and_check():
    b = np.array([0.2, -0.5, 0.9])
    phi = lambda u: float(b @ u / np.linalg.norm(u))
    gauge = GaugeTerm(phi=phi, avec=np.array([1.0, -2.0, 0.5]))
    gauge.check([np.array([1.0, 0.3, -0.2]), np.array([0.4, 1.0, 0.1])])
    p = ModelParams(m=0.5)
    curve = curve_through_jet([1, 0.6, -0.3], [0.2, -0.4, 0.5], [0.1, 0.3, -0.2])
    base = ep_operator_oracle(lambda u, w: lagrangian(1, u, w, p), curve)
    gauged = ep_operator_oracle(lambda u, w: lagrangian(1, u, w, p, gauge), curve)
    np.testing.assert_allclose(gauged, base, atol=5e-5)
    with pytest.raises(GaugeViolation):
        GaugeTerm(phi=lambda u: float(u @ u)).check([np.array([1.0, 0.0, 0.0])])


# ---------------------------------------------------------------- affine coefficients


def test_affine_examples():
    c = extract_affine_coeffs([0, 0], 0.0)
    np.testing.assert_allclose(c.A, [[0, 1], [-1, 0]])
    np.testing.assert_array_equal(c.c, [0, 0])
    k = 2 ** -1.5
    np.testing.assert_allclose(extract_affine_coeffs([1, 0], 0.0).A, [[0, k], [-k, 0]])


@settings(max_examples=100, deadline=None)
@given(v=st.lists(st.floats(-3, 3), min_size=2, max_size=2), m=st.floats(-2, 2))
def test_affine_A_is_skew(v, m):
    A = extract_affine_coeffs(v, m).A
    assert np.max(np.abs(A + A.T)) <= 1e-12


def test_affine_rejects_bad_chart():
    with pytest.raises(ChartViolation):
        ep_reduced([np.nan, 0], [0, 0], [0, 0])


# ---------------------------------------------------------------- Helmholtz


def test_helmholtz_examples():
    res = helmholtz_residuals([0.3, -0.2], 1.0, h=1e-4)
    assert set(res) == set(HELMHOLTZ_BLOCKS)
    assert max(res.values()) <= 1e-6
    assert max(helmholtz_residuals([0.0, 0.0], 0.0, h=1e-4).values()) <= 1e-8


def test_helmholtz_detects_tampering():
    def tampered(t, x, v):
        c = extract_affine_coeffs(v, 1.0, verify=False)
        B = c.B.copy()
        B[0, 1] += 0.1
        return AffineCoeffs(c.A, B, c.c, c.dA)

    res = helmholtz_residuals([0.3, -0.2], coeffs=tampered)
    assert res["skew_B"] >= 0.05


@pytest.mark.parametrize("m", [0.0, 1.0, -2.0])
def test_helmholtz_grid(m):
    for a in np.linspace(-1, 1, 5):
        for b in np.linspace(-1, 1, 5):
            assert max(helmholtz_residuals([a, b], m).values()) <= 1e-6


def _nonautonomous_system():
    """Coefficients of the Euler-Poisson expression of L = alpha(t,x,v).v' + beta(t,x,v)."""
    t = sp.Symbol("t")
    x = sp.symbols("x1:3")
    v = sp.symbols("v1:3")
    vp = sp.symbols("p1:3")
    vs = sp.symbols("s1:3")
    alpha = [sp.sin(t) * x[1] * v[0] ** 2 + x[0] ** 2 * v[1], t * v[0] * v[1] ** 2 + sp.cos(x[0]) * v[0]]
    beta = t * x[0] * v[1] + x[1] ** 2 * v[0] ** 2 + sp.exp(x[1] / 3) * v[0] * v[1]
    L = alpha[0] * vp[0] + alpha[1] * vp[1] + beta

    def D(f):
        return (sp.diff(f, t) + sum(sp.diff(f, x[k]) * v[k] + sp.diff(f, v[k]) * vp[k]
                                    + sp.diff(f, vp[k]) * vs[k] for k in range(2)))

    E = sp.Matrix([sp.diff(L, x[k]) - D(sp.diff(L, v[k])) + D(D(sp.diff(L, vp[k]))) for k in range(2)])
    E = sp.expand(E)
    A = E.jacobian(vs)
    rest = sp.expand(E - A * sp.Matrix(vs))
    dirA = sum((sp.diff(A, v[k]) * vp[k] for k in range(2)), sp.zeros(2, 2))
    rest = sp.expand(rest - dirA * sp.Matrix(vp))
    B = rest.jacobian(vp)
    c = sp.expand(rest - B * sp.Matrix(vp))
    assert all(sp.diff(c, p).is_zero_matrix for p in vp)
    args = (t, x, v)
    fA, fB, fc = (sp.lambdify(args, M, "numpy") for M in (A, B, c))

    def coeffs(tt, xx, vv):
        return AffineCoeffs(
            A=np.array(fA(tt, xx, vv), dtype=float),
            B=np.array(fB(tt, xx, vv), dtype=float),
            c=np.array(fc(tt, xx, vv), dtype=float).ravel(),
        )

    return coeffs


def test_helmholtz_nonautonomous_variational_system():
    coeffs = _nonautonomous_system()
    probe = coeffs(0.4, np.array([0.3, -0.5]), np.array([0.2, 0.7]))
    # all blocks are exercised: c and the x/t dependence are non-trivial here
    assert np.max(np.abs(probe.c)) > 0.1 and np.max(np.abs(probe.B - probe.B.T)) > 0.1
    for t, x, v in [(0.4, [0.3, -0.5], [0.2, 0.7]), (-1.1, [1.0, 0.2], [-0.6, 0.1])]:
        res = helmholtz_residuals(np.array(v), coeffs=coeffs, t=t, x=np.array(x))
        assert max(res.values()) <= 1e-5, res


def _tamper(coeffs, dA=None, dB=None, dc=None):
    def tampered(t, x, v):
        c0 = coeffs(t, x, v)
        A = c0.A if dA is None else c0.A + dA(t, x, v)
        B = c0.B if dB is None else c0.B + dB(t, x, v)
        c = c0.c if dc is None else c0.c + dc(t, x, v)
        return AffineCoeffs(A, B, c)

    return tampered


@pytest.mark.parametrize(
    "kind, blocks",
    [
        ("c", ("sym_c", "curl_c_B", "curl_c_A")),
        ("B", ("B_A_compat", "sym_c", "curl_c_B")),
        ("A", ("skew_B", "B_A_compat")),
    ],
)
def test_helmholtz_nonautonomous_detects_tampering(kind, blocks):
    coeffs = _nonautonomous_system()
    perturb = {
        "c": dict(dc=lambda t, x, v: np.array([x[1] * v[0], 0.0])),
        "B": dict(dB=lambda t, x, v: 0.5 * x[0] * v[1] * np.array([[0.0, 1.0], [1.0, 0.0]])),
        "A": dict(dA=lambda t, x, v: 0.3 * x[1] * np.array([[0.0, 1.0], [-1.0, 0.0]])),
    }[kind]
    res = helmholtz_residuals(np.array([0.2, 0.7]), coeffs=_tamper(coeffs, **perturb), t=0.4,
                              x=np.array([0.3, -0.5]))
    assert max(res[b] for b in blocks) >= 0.01


# ---------------------------------------------------------------- equivariance


def test_equivariance_examples():
    u, w, a = np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])
    assert equivariance_residual(u, w, a, ModelParams(m=1.0), np.eye(3)) == 0.0
    R = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1.0]])
    assert equivariance_residual(u, w, a, ModelParams(m=1.0), R) <= 1e-12
    rng = np.random.default_rng(7)
    R = random_pseudo_rotation(7, PSEUDO)
    u = np.array([1.5, 0.3, -0.4])
    w, a = rng.uniform(-1, 1, (2, 3))
    assert equivariance_residual(u, w, a, ModelParams(m=0.5, metric=PSEUDO), R) <= 1e-10


def test_equivariance_rejects_non_isometry():
    with pytest.raises(NotAnIsometry):
        equivariance_residual([1, 0, 0], [0, 1, 0], [0, 0, 1], ModelParams(), np.diag([2.0, 1, 1]))
