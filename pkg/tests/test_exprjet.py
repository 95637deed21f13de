import itertools
import math
import re

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from crgeo.exprjet import (
    Add,
    ArityError,
    Call,
    EvaluationError,
    ExprSyntaxError,
    Jet,
    Mul,
    Neg,
    Num,
    Param,
    Pow,
    UnboundParameter,
    UnknownIdentifier,
    Var,
    eval_float,
    eval_jet,
    fd_check,
    parse_expr,
    to_source,
)
from crgeo.exprjet.jet import multi_indices, n_coeffs
from crgeo.models import builtin
from crgeo.structure import halton

C = ("x", "y", "t")
SYM = sp.symbols("x y t")
SAFE_FUNCS = ("sin", "cos", "atan", "tanh")


def random_source(rng: np.random.Generator, depth: int) -> str:
    """Random expression over x, y, t whose every subexpression stays in its domain."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return str(rng.choice(C))
        return f"{rng.uniform(-2, 2):.3f}"
    kind = rng.integers(0, 7)
    a = random_source(rng, depth - 1)
    if kind == 0:
        return f"({a} + {random_source(rng, depth - 1)})"
    if kind == 1:
        return f"({a} - {random_source(rng, depth - 1)})"
    if kind == 2:
        return f"({a} * {random_source(rng, depth - 1)})"
    if kind == 3:
        return f"({a} / (2 + sin({random_source(rng, depth - 1)})))"
    if kind == 4:
        return f"{rng.choice(SAFE_FUNCS)}({a})"
    if kind == 5:
        return f"exp(tanh({a}))"
    return f"sqrt(1 + ({a})^2)" if rng.random() < 0.5 else f"log(2 + cos({a}))"


def sympy_derivatives(source: str, p, order: int, params=None) -> dict:
    e = sp.sympify(source.replace("^", "**"), locals={"t": SYM[2]})
    if params:
        e = e.subs({sp.Symbol(k): v for k, v in params.items()})
    sub = dict(zip(SYM, p))
    out = {}
    for alpha in multi_indices(order):
        d = e
        for v, k in zip(SYM, alpha):
            if k:
                d = sp.diff(d, v, k)
        out[alpha] = float(d.evalf(subs=sub))
    return out


# parser -------------------------------------------------------------------------


def test_parse_tree_shape():
    e = parse_expr("mu*(x^2+y^2)", C, ("mu",))
    assert e == Mul(Param("mu"), Add(Pow(Var("x", 0), Num(2.0)), Pow(Var("y", 1), Num(2.0))))
    e = parse_expr("sin(x)*exp(-t)", C)
    assert e == Mul(Call("sin", Var("x", 0)), Call("exp", Neg(Var("t", 2))))


def test_precedence_and_associativity():
    p = np.array([2.0, 3.0, 0.5])
    cases = {
        "2^3^2": 2.0 ** 9,
        "-x^2": -4.0,
        "x-y-t": 2 - 3 - 0.5,
        "x/y/t": 2 / 3 / 0.5,
        "x+y*t": 2 + 1.5,
        "2^-1": 0.5,
        "1e-1*x": 0.2,
    }
    for src, want in cases.items():
        assert eval_float(parse_expr(src, C), p) == pytest.approx(want, rel=1e-15), src


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse_expr("x+", C)
    assert exc.value.offset == 2


def test_parse_errors():
    with pytest.raises(UnknownIdentifier):
        parse_expr("z + x", C)
    with pytest.raises(UnknownIdentifier):
        parse_expr("foo(x)", C)
    with pytest.raises(ArityError):
        parse_expr("sin()", C)
    with pytest.raises(ArityError):
        parse_expr("sin(x, y)", C)
    with pytest.raises(ExprSyntaxError):
        parse_expr("x^y", C)


def test_roundtrip_source():
    rng = np.random.default_rng(3)
    p = halton(builtin("heisenberg").chart, 8, 7).points * 0.5
    for _ in range(40):
        e = parse_expr(random_source(rng, 4), C)
        again = parse_expr(to_source(e), C)
        np.testing.assert_allclose(eval_float(again, p), eval_float(e, p), rtol=1e-14, atol=1e-14)


# evaluation -------------------------------------------------------------------------


def test_jet_polynomial_examples():
    j = eval_jet(parse_expr("x^2", C), np.array([3.0, 0, 0]), order=2)
    d = j.derivatives()
    assert d.pop((0, 0, 0)) == 9 and d.pop((1, 0, 0)) == 6 and d.pop((2, 0, 0)) == 2
    assert all(v == 0 for v in d.values())
    j = eval_jet(parse_expr("mu*(x^2+y^2)", C, ("mu",)), np.array([1.0, 2, 5]), {"mu": 1}, order=2)
    assert (j.value, j.partial((1, 0, 0)), j.partial((0, 1, 0))) == (5, 2, 4)
    assert j.partial((2, 0, 0)) == j.partial((0, 2, 0)) == 2 and j.partial((0, 0, 1)) == 0


def test_jet_transcendental_example():
    j = eval_jet(parse_expr("exp(x)*sin(y)", C), np.array([0, math.pi / 2, 0]), order=1)
    assert j.value == pytest.approx(1) and j.partial((1, 0, 0)) == pytest.approx(1)
    assert abs(j.partial((0, 1, 0))) < 1e-15


def test_coefficient_count():
    for order in range(6):
        j = eval_jet(parse_expr("x", C), np.zeros(3), order=order)
        assert len(j.coeffs) == n_coeffs(order) == math.comb(order + 3, 3)


def test_domain_errors_name_the_node():
    with pytest.raises(EvaluationError, match="log"):
        eval_jet(parse_expr("log(x - 5)", C), np.zeros(3))
    with pytest.raises(EvaluationError, match="division"):
        eval_jet(parse_expr("1/x", C), np.zeros(3))
    with pytest.raises(UnboundParameter):
        eval_jet(parse_expr("mu*x", C, ("mu",)), np.zeros(3))


def test_jets_match_sympy_on_random_expressions():
    rng = np.random.default_rng(11)
    for _ in range(25):
        src = random_source(rng, 4)
        p = rng.uniform(-1, 1, 3)
        jet = eval_jet(parse_expr(src, C), p, order=3).derivatives()
        ref = sympy_derivatives(src, p, 3)
        for alpha, v in ref.items():
            assert jet[alpha] == pytest.approx(v, rel=1e-10, abs=1e-10), (src, alpha)


def test_batched_jets_match_single_point():
    e = parse_expr("sin(x*y) + exp(t)*x^3", C)
    p = halton(builtin("heisenberg").chart, 10, 7).points
    batch = eval_jet(e, p, order=4)
    for i in range(len(p)):
        single = eval_jet(e, p[i], order=4)
        np.testing.assert_allclose(batch.coeffs[:, i], single.coeffs, rtol=1e-15)


# jet algebra ----------------------------------------------------------------------

coef = st.floats(-3, 3, allow_nan=False)


def _random_jet(seed: int, order: int = 3, complex_: bool = False) -> Jet:
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n_coeffs(order))
    if complex_:
        c = c + 1j * rng.normal(size=n_coeffs(order))
    return Jet(c, order)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000), st.integers(0, 10_000))
def test_product_commutative_associative(a, b, c):
    A, B, Cj = _random_jet(a), _random_jet(b), _random_jet(c)
    np.testing.assert_allclose((A * B).coeffs, (B * A).coeffs, rtol=1e-14, atol=1e-14)
    np.testing.assert_allclose(((A * B) * Cj).coeffs, (A * (B * Cj)).coeffs, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 10_000))
def test_complex_conjugation_consistent(a, b):
    A, B = _random_jet(a, complex_=True), _random_jet(b, complex_=True)
    np.testing.assert_allclose((A * B).conj().coeffs, (A.conj() * B.conj()).coeffs, atol=1e-13)
    assert np.abs((A * A.conj()).imag.coeffs).max() < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_product_is_truncation_local(a, k):
    # order-k coefficients of a product only see orders <= k of the factors
    A, B = _random_jet(a), _random_jet(a + 1)
    low = (A.truncate(k) * B.truncate(k)).coeffs
    full = (A * B).truncate(k).coeffs
    np.testing.assert_allclose(low, full, rtol=1e-14, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(coef, coef, coef)
def test_product_rule_first_order(u, v, w):
    p = np.array([u, v, w])
    f, g = parse_expr("sin(x)*y + t", C), parse_expr("exp(y - t) + x^2", C)
    F, G = eval_jet(f, p, order=2), eval_jet(g, p, order=2)
    prod = F * G
    for i in range(3):
        alpha = tuple(int(j == i) for j in range(3))
        want = F.partial(alpha) * G.value + F.value * G.partial(alpha)
        assert prod.partial(alpha) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_chain_rule_on_100_random_compositions():
    rng = np.random.default_rng(2024)
    order = 4
    worst = 0.0
    for _ in range(100):
        outer = random_source(rng, 2)
        inner = [random_source(rng, 2) for _ in range(3)]
        p = rng.uniform(-1, 1, 3)
        # textual substitution gives the composed expression, depth <= 5 after wrapping
        composed = _substitute(outer, dict(zip(C, inner)))
        direct = eval_jet(parse_expr(composed, C), p, order=order)
        inner_jets = [eval_jet(parse_expr(s, C), p, order=order) for s in inner]
        q = np.array([float(j.value) for j in inner_jets])
        outer_jet = eval_jet(parse_expr(outer, C), q, order=order)
        via = outer_jet.compose(inner_jets)
        scale = max(1.0, float(np.abs(direct.coeffs).max()))
        worst = max(worst, float(np.abs(direct.coeffs - via.coeffs).max()) / scale)
    assert worst < 1e-12


def _substitute(source: str, inner: dict) -> str:
    # one simultaneous pass, so substituted text is never rewritten again
    return re.sub(r"(?<![A-Za-z_])[xyt](?![A-Za-z_(])", lambda m: f"({inner[m.group(0)]})", source)


# finite-difference oracle -------------------------------------------------------------


def test_fd_check_examples():
    dyadic = np.array([0.5, -0.25, 0.75])
    assert fd_check(parse_expr("3*x^2 - x*y + t^2 + 2*y - 1", C), dyadic, order=2) < 1e-9
    assert fd_check(parse_expr("sin(x*y)", C), np.array([0.3, 0.7, 0.0]), order=2) < 1e-4
    assert fd_check(parse_expr("x", C), np.array([0.3, 0.7, 0.0]), order=1) < 1e-12


@pytest.mark.parametrize("name", ["heisenberg", "cr_sphere"])
def test_fd_check_on_model_expressions(name):
    s = builtin(name).structure
    p = halton(s.chart, 64, 7).points
    worst = max(float(np.max(fd_check(e, p, s.params, order=2))) for e in s.expressions())
    assert worst < 1e-4


def test_all_multi_indices_ordered():
    idx = multi_indices(3)
    assert idx[0] == (0, 0, 0) and len(set(idx)) == len(idx)
    assert all(sum(a) <= sum(b) for a, b in itertools.pairwise(idx))
