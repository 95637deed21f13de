"""Acceptance criteria, one test per criterion, 256 Halton samples and seed 7 unless noted."""

import subprocess
import sys

import numpy as np

from conftest import random_polynomial
from crgeo import calculus, curvature
from crgeo.exprjet import parse_expr
from crgeo.models import COORDS, builtin
from crgeo.riemann import adapted_metric_report, critical_set, isoparametric_check, level_surface_report
from crgeo.soliton import SolitonCandidate, check_cr_soliton, check_pseudo_gradient, conserved_quantities, harnack_residual
from crgeo.structure import Geometry, halton, validate

N, SEED = 256, 7
MODELS = ("heisenberg", "cr_sphere")
LAMBDAS = (0.5, 1.0, 2.0)
LEVELS = (0.5, 1.0, 2.0)


def P(src, params=()):
    return parse_expr(src, COORDS, params)


def samples(model):
    return halton(model.chart, N, SEED).points


def worst(rep, names=None):
    return max(c.residual for c in rep.checks if names is None or c.name in names)


def test_structure_normalization(criterion):
    names = {"theta(e1)", "theta(e2)", "normalization", "dtheta_structure"}
    res = 0.0
    for name in MODELS:
        s = builtin(name).structure
        res = max(res, worst(validate(s, samples(s), 1e-9), names))
    assert criterion(1, "structure normalization", res < 1e-9, f"max residual {res:.2e}")


def test_commutation_relations(criterion):
    res = 0.0
    for name in MODELS:
        s = builtin(name).structure
        g = Geometry(s, samples(s), 5)
        rng = np.random.default_rng(SEED)
        for _ in range(20):
            res = max(res, worst(calculus.commutation_residuals(g, P(random_polynomial(rng)))))
    assert criterion(2, "commutation relations", res < 1e-8, f"max residual {res:.2e}")


def test_flat_model(criterion):
    s = builtin("heisenberg").structure
    g = Geometry(s, samples(s), 5)
    conn = curvature.connection(g)
    q = curvature.q_curvature(g)
    parts = {
        "W": curvature.tw_curvature(g).W.value,
        "A11": conn.A11.value,
        "theta_1^1": conn.form.value,
        "Q11": curvature.cartan_tensor(g).value,
        "R1": q.R1.value,
    }
    res = max(float(np.abs(v).max()) for v in parts.values())
    assert criterion(3, "flat model", res < 1e-10, f"max |value| {res:.2e}")


def test_sphere_model(criterion):
    s = builtin("cr_sphere").structure
    g = Geometry(s, samples(s), 5)
    W = curvature.tw_curvature(g).W.value.real
    spread = float(np.ptp(W))
    A = float(np.abs(curvature.connection(g).A11.value).max())
    Q = float(np.abs(curvature.cartan_tensor(g).value).max())
    anchor = max(adapted_metric_report(g, lam)["scalar curvature"].residual for lam in LAMBDAS)
    ok = spread < 1e-8 and A < 1e-9 and Q < 1e-7 and anchor < 1e-7
    detail = f"W spread {spread:.2e}, A11 {A:.2e}, Q11 {Q:.2e}, R = 4W - 2/lam^2 {anchor:.2e}"
    assert criterion(4, "sphere model", ok, detail)


def test_adapted_ricci_matrix(criterion):
    res = 0.0
    for name in MODELS:
        s = builtin(name).structure
        g = Geometry(s, samples(s), 5)
        for lam in LAMBDAS:
            rep = adapted_metric_report(g, lam)
            res = max(res, rep["Ricci matrix"].residual, rep["Ricci off-diagonal"].residual)
    assert criterion(5, "adapted metric Ricci matrix", res < 1e-7, f"max residual {res:.2e}")


def test_soliton_suite(criterion):
    s = builtin("heisenberg").structure
    pts = samples(s)
    grad = max(worst(check_pseudo_gradient(builtin("heisenberg_gaussian", {"mu": mu}).candidate(), pts)) for mu in (-1.0, 0.0, 1.0, 2.0))
    cont = max(worst(check_cr_soliton(builtin("heisenberg_contact", {"mu": mu}).candidate(), pts)) for mu in (-1.0, 0.0, 1.0, 2.0))
    neg_phi = worst(check_pseudo_gradient(SolitonCandidate(s, P("x^3"), 0.0, "gradient"), pts))
    neg_f = worst(check_cr_soliton(SolitonCandidate(s, P("t^2"), 0.0, "contact"), pts))
    ok = grad < 1e-9 and cont < 1e-9 and neg_phi > 1e-2 and neg_f > 1e-2
    detail = f"gaussian {grad:.2e}, contact {cont:.2e}, phi = x^3 {neg_phi:.2e}, f = t^2 {neg_f:.2e}"
    assert criterion(6, "soliton suite", ok, detail)


def test_harnack_identity(criterion):
    s = builtin("heisenberg").structure
    pts = samples(s)
    exact = True
    res = 0.0
    for mu in (-1.0, 0.5, 1.0, 2.0):
        c = builtin("heisenberg_contact", {"mu": mu}).candidate()
        assert check_cr_soliton(c, pts).passed
        h = harnack_residual(c, pts)
        exact = exact and h.values["max |H|"] == 0
        res = max(res, h["Harnack quantity"].residual)
    sphere = builtin("cr_sphere")
    trivial = SolitonCandidate(sphere.structure, P("0"), float(sphere.derived["W"]), "contact")
    sp = samples(sphere)
    assert check_cr_soliton(trivial, sp).passed
    res = max(res, harnack_residual(trivial, sp)["Harnack quantity"].residual)
    assert criterion(7, "Harnack identity", res < 1e-7 and exact, f"max residual {res:.2e}, heisenberg_contact exactly 0: {exact}")


def test_conserved_quantities(criterion):
    m = builtin("heisenberg_gaussian", {"mu": 1.0})
    rep = conserved_quantities(m.candidate(), samples(m))
    spread = rep.values["C spread"]
    grad = rep["grad_b(W e^-phi) = 0"].residual
    inter = rep["W_1 = -i A11 phi_1bar + W phi_1"].residual
    ok = spread < 1e-7 and grad < 1e-7 and inter < 1e-8
    assert criterion(8, "conserved quantity", ok, f"C spread {spread:.2e}, grad_b {grad:.2e}, W_1 identity {inter:.2e}")


def test_conformal_law(criterion):
    law, div = 0.0, 0.0
    for name in MODELS:
        s = builtin(name).structure
        pts = samples(s)
        rng = np.random.default_rng(SEED)
        for _ in range(10):
            g = P(f"0.1*({random_polynomial(rng, degree=2, terms=4)})")
            _, rep = curvature.conformal_change(s, g, pts)
            law = max(law, rep["R1 law"].residual)
            div = max(div, rep["divergence identity"].residual)
    ok = law < 1e-6 and div < 1e-6
    assert criterion(9, "conformal law", ok, f"R1 dual path {law:.2e}, divergence identity {div:.2e}")


def test_level_set_package(criterion):
    c = builtin("heisenberg_gaussian", {"mu": 1.0}).candidate()
    lam = 1.0
    table = level_surface_report(c, lam, LEVELS, N, SEED).values["table"]
    ii33 = max(abs(r["II(E3,E3)"]) for r in table)
    ii23 = max(abs(r["II(E2,E3)"] - 1 / lam) for r in table)
    rm = max(abs(r["Rm(E2,E3,E2,E3)"] - lam**-2) for r in table)
    K = max(r["max |K|"] for r in table)
    iso = isoparametric_check(c, lam, LEVELS, N, SEED)
    spread = max(ch.residual for ch in iso.checks if ch.name.endswith("spread"))
    # the stated identity, taken literally: Delta phi = Delta_b phi
    lap = max(ch.residual for ch in iso.checks if ch.identity == "Delta phi = Delta_b phi")
    ok = ii33 < 1e-8 and ii23 < 1e-7 and rm < 1e-7 and K < 1e-7 and spread < 1e-6 and lap < 1e-8
    detail = f"II33 {ii33:.2e}, II23 {ii23:.2e}, Rm {rm:.2e}, K {K:.2e}, spreads {spread:.2e}, Delta phi - Delta_b phi {lap:.2e}"
    assert criterion(10, "level-set package", ok, detail)


def test_critical_set(criterion):
    m = builtin("heisenberg_gaussian", {"mu": 1.0})
    res = critical_set(m.candidate(), hypotheses=dict(m.hypotheses), seed=SEED)
    comps = res.components
    ok = (
        len(comps) == 1
        and comps[0].dimension == 1
        and comps[0].tag == "line"
        and res.report.case == "ii"
        and res.report.concluded == "R^3"
    )
    detail = f"{len(comps)} component(s), " + ", ".join(f"dim {c.dimension} {c.tag}" for c in comps) + f", case {res.report.case} -> {res.report.concluded}"
    assert criterion(11, "critical set", ok, detail)


def test_determinism(criterion):
    argv = [sys.executable, "-m", "crgeo.cli", "all", "--model", "heisenberg_gaussian", "--mu", "1", "--seed", "7"]
    runs = [subprocess.run(argv, capture_output=True) for _ in range(2)]
    ok = runs[0].stdout == runs[1].stdout and len(runs[0].stdout) > 0 and runs[0].stdout.startswith(b"{")
    assert criterion(12, "determinism", ok, f"{len(runs[0].stdout)} bytes, exit codes {[r.returncode for r in runs]}")
