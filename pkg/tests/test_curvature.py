import numpy as np
import pytest
import sympy as sp

from conftest import exprs, torsion_structure
from crgeo import curvature
from crgeo.exprjet import parse_expr, to_source
from crgeo.models import COORDS, SPHERE_FACTOR, SPHERE_W, builtin
from crgeo.structure import Chart, Geometry, PHStructure, ext_d, halton, validate


def P(src):
    return parse_expr(src, COORDS)


def test_heisenberg_is_flat(heisenberg):
    pts = halton(heisenberg.chart, 256, 7).points
    c = curvature.connection(heisenberg, pts)
    q = curvature.q_curvature(heisenberg, pts)
    for v in (c.form.value, c.A11.value, curvature.tw_curvature(heisenberg, pts).W.value,
              curvature.cartan_tensor(heisenberg, pts).value, q.R1.value, q.Q.value):
        assert np.abs(v).max() < 1e-10


def test_sphere_curvature(sphere):
    pts = halton(sphere.chart, 256, 7).points
    W = curvature.tw_curvature(sphere, pts).W.value
    assert np.ptp(W) < 1e-8 and W.mean() == pytest.approx(SPHERE_W, abs=1e-9)
    assert np.abs(curvature.connection(sphere, pts).A11.value).max() < 1e-9
    assert np.abs(curvature.cartan_tensor(sphere, pts).value).max() < 1e-7
    q = curvature.q_curvature(sphere, pts)
    assert np.abs(q.R1.value).max() < 1e-7 and np.abs(q.Q.value).max() < 1e-7


def test_sphere_constant_against_transformation_law(sphere):
    # independent route: for theta~ = u^2 theta on the flat model, W~ = -4 u^-3 Delta_b u
    # with Delta_b = (e1^2 + e2^2)/2, e1 = d_x + y d_t, e2 = d_y - x d_t, done in sympy
    x, y, t = sp.symbols("x y t")
    u = sp.exp(sp.sympify(SPHERE_FACTOR.replace("^", "**")))
    e1 = lambda f: sp.diff(f, x) + y * sp.diff(f, t)  # noqa: E731
    e2 = lambda f: sp.diff(f, y) - x * sp.diff(f, t)  # noqa: E731
    W = sp.lambdify((x, y, t), -2 * (e1(e1(u)) + e2(e2(u))) / u**3)
    pts = halton(sphere.chart, 16, 7).points
    oracle = np.array([W(*p) for p in pts])
    computed = curvature.tw_curvature(sphere, pts).W.value
    np.testing.assert_allclose(computed, oracle, rtol=1e-10)
    np.testing.assert_allclose(oracle, 2.0, rtol=1e-10)


@pytest.mark.parametrize("name", ["heisenberg", "cr_sphere"])
def test_curvature_report_consistency(name):
    s = builtin(name).structure
    rep = curvature.curvature_report(s, halton(s.chart, 64, 7).points)
    assert rep.passed, rep.summary()


def test_torsion_model_consistency(torsion):
    # the torsion parts of dtheta_1^1 close with the signs as printed
    rep = curvature.curvature_report(torsion, halton(torsion.chart, 64, 7).points)
    assert rep.passed, rep.summary()
    assert np.abs(rep.values["A11"]).max() > 0.1


def test_connection_form_imaginary_and_dd_zero(sphere, torsion):
    for s in (sphere, torsion):
        g = Geometry(s, halton(s.chart, 32, 7).points, 5)
        c = curvature.connection_data(g)
        assert np.abs((c.form + c.form.conj()).value).max() < 1e-9
        F = ext_d(g.theta1)
        ddF = F[1, 2].d(0) + F[2, 0].d(1) + F[0, 1].d(2)
        assert np.abs(ddF.value).max() < 1e-10


def test_constant_rescaling_of_flat_model(heisenberg, pts32):
    s = curvature.rescaled_structure(heisenberg, P("0.3"))
    assert np.abs(curvature.tw_curvature(s, pts32).W.value).max() < 1e-12


def _rotated(s: PHStructure, chi: str) -> PHStructure:
    e1 = [to_source(c) for c in s.e1]
    e2 = [to_source(c) for c in s.e2]
    r1 = [f"cos({chi})*({a}) + sin({chi})*({b})" for a, b in zip(e1, e2)]
    r2 = [f"-sin({chi})*({a}) + cos({chi})*({b})" for a, b in zip(e1, e2)]
    return PHStructure(s.chart, s.theta, exprs(*r1), exprs(*r2), s.params, s.name + " rotated")


@pytest.mark.parametrize("model", ["cr_sphere", "torsion"])
def test_gauge_covariance(model):
    s = torsion_structure() if model == "torsion" else builtin(model).structure
    rot = _rotated(s, "0.7*x - 0.4*y*t + 0.2")
    pts = halton(s.chart, 32, 7).points
    a, b = Geometry(s, pts, 5), Geometry(rot, pts, 5)
    pairs = [
        (curvature.tw_curvature(a).W, curvature.tw_curvature(b).W),
        (curvature.connection_data(a).A11, curvature.connection_data(b).A11),
        (curvature.cartan_tensor(a), curvature.cartan_tensor(b)),
        (curvature.q_curvature(a).Q, curvature.q_curvature(b).Q),
        (curvature.q_curvature(a).R1, curvature.q_curvature(b).R1),
    ]
    for u, v in pairs:
        assert np.abs(np.abs(u.value) - np.abs(v.value)).max() < 1e-8


def _perturbed(F: str, Fx: str) -> PHStructure:
    # theta = dt + F dy - y dx, so dtheta = (1 + F_x) dx^dy; e2 rescaled to keep dtheta(e1, e2) = 2
    chart = Chart(COORDS, ((-1.0, 1.0),) * 3)
    L = f"(1 + {Fx})"
    return PHStructure(chart, exprs("-y", F, "1"), exprs("1", "0", "y"), exprs("0", f"2/{L}", f"-2*({F})/{L}"), name="perturbed")


def test_non_spherical_perturbation():
    s = _perturbed("x + 0.2*x^3", "0.6*x^2 + 1")
    pts = halton(s.chart, 32, 7).points
    assert validate(s, pts).passed
    assert np.abs(curvature.cartan_tensor(s, pts).value).max() > 1e-3
    assert np.abs(curvature.q_curvature(s, pts).R1.value).max() > 1e-3


def test_quadratic_perturbation_stays_spherical():
    # theta + eps x^2 dy with the frame rebuilt is still pseudohermitian flat: W = A11 = Q11 = 0
    s = _perturbed("x + 0.2*x^2", "0.4*x + 1")
    pts = halton(s.chart, 32, 7).points
    assert validate(s, pts).passed
    assert np.abs(curvature.cartan_tensor(s, pts).value).max() < 1e-12
    assert np.abs(curvature.connection(s, pts).A11.value).max() < 1e-12
    assert np.abs(curvature.tw_curvature(s, pts).W.value).max() < 1e-12


def test_paneitz_examples(heisenberg, pts32):
    P1, P0 = curvature.paneitz(heisenberg, P("4"), pts32)
    assert np.abs(P1.value).max() == 0 and np.abs(P0.value).max() == 0
    P1, _ = curvature.paneitz(heisenberg, P("x"), pts32)
    assert np.abs(P1.value).max() < 1e-14
    # flat model, phi = x^2 y is t-free so Z1 = (d_x - i d_y)/2, Zbar1 = (d_x + i d_y)/2:
    # phi_1bar = x y + i x^2/2, phi_1bar1 = y/2, phi_1bar11 = -i/4
    P1, _ = curvature.paneitz(heisenberg, P("x^2*y"), pts32)
    np.testing.assert_allclose(P1.value, -0.25j, atol=1e-13)


# conformal change -------------------------------------------------------------


def test_conformal_identity(sphere):
    pts = halton(sphere.chart, 16, 7).points
    new, rep = curvature.conformal_change(sphere, P("0"), pts)
    assert rep.passed
    a = curvature.q_curvature(sphere, pts).R1.value
    b = curvature.q_curvature(new, pts).R1.value
    assert np.abs(a - b).max() < 1e-12


def test_conformal_constant_on_sphere(sphere):
    _, rep = curvature.conformal_change(sphere, P("0.4"), halton(sphere.chart, 32, 7).points, tol=1e-8)
    assert rep.passed, rep.summary()


def test_conformal_linear_on_heisenberg(heisenberg):
    _, rep = curvature.conformal_change(heisenberg, P("0.1*x"), halton(heisenberg.chart, 64, 7).points)
    assert rep.passed, rep.summary()


def test_conformal_law_detects_wrong_factor(heisenberg):
    # dual-path negative control: the law with 6 replaced by 5 must not close
    pts = halton(heisenberg.chart, 32, 7).points
    g = P("0.2*x^2 + 0.1*y*t")
    new, _ = curvature.conformal_change(heisenberg, g, pts)
    og, ng = Geometry(heisenberg, pts, 5), Geometry(new, pts, 5)
    eg = np.exp(og.field(g).value)
    R1o = curvature.q_curvature(og).R1.value
    P1g = curvature.paneitz_p1(og, g).value
    direct = curvature.q_curvature(ng).R1.value
    assert np.abs(direct - eg**-3 * (R1o - 6 * P1g)).max() < 1e-6
    assert np.abs(direct - eg**-3 * (R1o - 5 * P1g)).max() > 1e-3
