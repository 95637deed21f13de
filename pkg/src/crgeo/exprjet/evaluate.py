"""Evaluation of expression trees on jets or plain float arrays."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from . import jet as _jet
from .expr import Add, Call, Div, Expr, Mul, Neg, Num, Param, Pow, Sub, Var, to_source
from .jet import NVARS, DomainError, Jet

# Binary-exact step near 1e-5: x +- h stays exact for dyadic x, so the
# stencils reproduce quadratics without rounding noise.
FD_STEP = 2.0 ** -17


class EvaluationError(DomainError):
    """A domain violation, tagged with the offending subexpression."""

    def __init__(self, node: Expr, reason: str):
        self.node = node
        super().__init__(f"{reason} in '{to_source(node)}'")


class UnboundParameter(KeyError):
    pass


def evaluate(e: Expr, coords: Sequence, params: Mapping[str, float] | None = None):
    """Evaluate ``e`` with ``coords[i]`` substituted for coordinate ``i``.

    ``coords`` entries may be Jets or numpy arrays; the result has the same kind.
    """
    params = params or {}

    def ev(node: Expr):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return coords[node.index]
        if isinstance(node, Param):
            try:
                return float(params[node.name])
            except KeyError:
                raise UnboundParameter(f"parameter '{node.name}' is not bound") from None
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, Add):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Sub):
            return ev(node.left) - ev(node.right)
        if isinstance(node, Mul):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Div):
            den = ev(node.right)
            den_value = den.value if isinstance(den, Jet) else np.asarray(den)
            if np.any(den_value == 0):
                raise EvaluationError(node, "division by zero")
            return ev(node.left) / den
        if isinstance(node, Pow):
            r = ev(node.exponent)
            if isinstance(r, Jet) or np.ndim(r):
                raise EvaluationError(node, "exponent must be constant")
            try:
                return _jet.power(ev(node.base), float(r))
            except DomainError as exc:
                raise EvaluationError(node, str(exc)) from None
        if isinstance(node, Call):
            try:
                return _jet.FUNCTIONS[node.func](ev(node.arg))
            except DomainError as exc:
                raise EvaluationError(node, str(exc)) from None
        raise TypeError(f"not an expression node: {node!r}")

    with np.errstate(divide="ignore", invalid="ignore"):
        out = ev(e)
    return out


def coordinate_jets(p, order: int) -> list[Jet]:
    """Jets of the three coordinate functions at ``p`` (shape (3,) or (n, 3))."""
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != NVARS:
        raise ValueError(f"points must have {NVARS} coordinates, got shape {p.shape}")
    return [Jet.variable(i, p[..., i], order) for i in range(NVARS)]


def eval_jet(e: Expr, p, params: Mapping[str, float] | None = None, order: int = _jet.DEFAULT_ORDER) -> Jet:
    """Order-``order`` Taylor jet of ``e`` at ``p`` (one point or a batch)."""
    xs = coordinate_jets(p, order)
    out = evaluate(e, xs, params)
    if not isinstance(out, Jet):
        out = Jet.constant(np.broadcast_to(np.asarray(out, dtype=float), xs[0].shape).copy(), order)
    return out


def eval_float(e: Expr, p, params: Mapping[str, float] | None = None) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = evaluate(e, [p[..., i] for i in range(NVARS)], params)
    return np.broadcast_to(np.asarray(out, dtype=float), p.shape[:-1]).copy()


def fd_check(e: Expr, p, params: Mapping[str, float] | None = None, order: int = 2, h: float = FD_STEP) -> float:
    """Max of ``|jet - finite difference| / (1 + |jet|)`` over derivatives of order <= ``order``.

    First derivatives use the central 2-point rule, pure second derivatives
    the 5-point rule and mixed ones the 4-point cross stencil.
    """
    if order not in (0, 1, 2):
        raise ValueError("fd_check supports derivative orders 0, 1 and 2")
    p = np.asarray(p, dtype=float)
    j = eval_jet(e, p, params, order)

    def f(*steps):
        q = p.copy()
        for var, s in steps:
            q[..., var] += s * h
        return eval_float(e, q, params)

    def rel(exact, approx):
        return float(np.max(np.abs(exact - approx) / (1 + np.abs(exact))))

    worst = rel(j.partial((0, 0, 0)), f())
    unit = np.eye(NVARS, dtype=int)
    for i in range(NVARS if order >= 1 else 0):
        d1 = (f((i, 1)) - f((i, -1))) / (2 * h)
        worst = max(worst, rel(j.partial(unit[i]), d1))
    if order == 2:
        f0 = f()
        for i in range(NVARS):
            dii = (-f((i, 2)) + 16 * f((i, 1)) - 30 * f0 + 16 * f((i, -1)) - f((i, -2))) / (12 * h * h)
            worst = max(worst, rel(j.partial(2 * unit[i]), dii))
            for k in range(i + 1, NVARS):
                dik = (f((i, 1), (k, 1)) - f((i, 1), (k, -1)) - f((i, -1), (k, 1)) + f((i, -1), (k, -1))) / (4 * h * h)
                worst = max(worst, rel(j.partial(unit[i] + unit[k]), dik))
    return worst
