"""Covariant derivatives, sub-Laplacian, commutation relations and contact fields.

Complex index labels are ``'1'`` (Z1), ``'1b'`` (Z1bar) and ``'0'`` (T).  A
coefficient ``C_I`` has weight ``k = #1 - #1b`` and its covariant derivative in
direction ``X`` is ``X(C_I) - k * theta_1^1(X) * C_I``.

Real-frame labels are the integers ``1`` (e1), ``2`` (e2) and ``0`` (T); the
real connection is ``nabla e1 = sigma (x) e2``, ``nabla e2 = -sigma (x) e1``
with ``sigma = -i theta_1^1`` and ``nabla T = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import curvature
from .exprjet import Expr, Jet
from .report import Report, residual_check
from .structure import GEOMETRY_ORDER, Geometry, PHStructure, apply, ext_d, pair, two_form

COMPLEX_LABELS = ("1", "1b", "0")
_WEIGHT = {"1": 1, "1b": -1, "0": 0}
COMMUTATION_TOL = 1e-8


def geometry_of(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER) -> Geometry:
    if isinstance(s, Geometry):
        return s
    return Geometry(s, p, order)


def scalar(g: Geometry, phi: Expr | Jet) -> Jet:
    return phi if isinstance(phi, Jet) else g.field(phi)


def weight(indices: Iterable[str]) -> int:
    return sum(_WEIGHT[a] for a in indices)


def conj_label(a: str) -> str:
    return {"1": "1b", "1b": "1", "0": "0"}[a]


# complex covariant derivatives --------------------------------------------


def connection_along(g: Geometry, direction: str) -> Jet:
    """``theta_1^1`` evaluated on Z1, Z1bar or T."""
    c = curvature.connection_data(g)
    return {"1": c.alpha, "1b": c.beta, "0": c.gamma}[direction]


def cov(g: Geometry, C: Jet, k: int, direction: str) -> Jet:
    """``C_{I,X}`` for a weight-``k`` coefficient ``C``."""
    out = apply(g.direction(direction), C)
    if k:
        out = out - connection_along(g, direction) * C * k
    return out


@dataclass(frozen=True)
class IndexedCoeff:
    value: Jet
    indices: tuple[str, ...]
    weight: int

    def __post_init__(self):
        if weight(self.indices) != self.weight:
            raise ValueError(f"weight {self.weight} does not match indices {self.indices}")


def cov_derivative(g: Geometry, C: IndexedCoeff, direction: str) -> IndexedCoeff:
    """Covariant derivative; the new index is appended to ``C.indices``.

    The appended index is a derivative index, so the result's weight counts it.
    """
    value = cov(g, C.value, C.weight, direction)
    return IndexedCoeff(value, C.indices + (direction,), C.weight + _WEIGHT[direction])


def derivative_chain(g: Geometry, phi: Expr | Jet, indices: Sequence[str], base_weight: int = 0) -> Jet:
    """``phi_{i1 i2 ...}``: successive covariant derivatives of a weight ``base_weight`` field."""
    C = scalar(g, phi)
    k = base_weight
    for a in indices:
        C = cov(g, C, k, a)
        k += _WEIGHT[a]
    return C


def d(g: Geometry, phi: Expr | Jet, indices: str | Sequence[str]) -> Jet:
    """Shorthand: ``d(g, phi, '1 1b 1')`` is ``phi_{1 1b 1}`` for a scalar ``phi``.

    Chains of model expressions are cached on the geometry, prefix by prefix.
    """
    if isinstance(indices, str):
        indices = indices.split()
    indices = tuple(indices)
    if isinstance(phi, Jet):
        return derivative_chain(g, phi, indices)
    key = ("chain", phi, indices)
    if key not in g.cache:
        if not indices:
            g.cache[key] = g.field(phi)
        else:
            prev = d(g, phi, indices[:-1])
            g.cache[key] = cov(g, prev, weight(indices[:-1]), indices[-1])
    return g.cache[key]


@dataclass(frozen=True)
class HorizontalGradient:
    phi_1: np.ndarray
    phi_1bar: np.ndarray
    phi_e1: np.ndarray
    phi_e2: np.ndarray


def horizontal_gradient(g: Geometry, phi: Expr | Jet) -> HorizontalGradient:
    f = scalar(g, phi)
    return HorizontalGradient(
        d(g, f, "1").value, d(g, f, "1b").value, apply(g.e1, f).value, apply(g.e2, f).value
    )


def grad_b_norm2(g: Geometry, phi: Expr | Jet) -> Jet:
    """``|grad_b phi|^2 = 2 phi_1 phi_1bar`` (real jet)."""
    f = scalar(g, phi)
    return (d(g, f, "1") * d(g, f, "1b")).real * 2


# real frame ---------------------------------------------------------------


def sigma(g: Geometry) -> dict[int, Jet]:
    """Real connection form ``sigma_1^2`` on e1, e2 and T."""
    if "sigma" not in g.cache:
        c = curvature.connection_data(g)
        # theta_1^1(e1) = alpha + beta, theta_1^1(e2) = i(alpha - beta)
        th = {1: c.alpha + c.beta, 2: (c.alpha - c.beta) * 1j, 0: c.gamma}
        g.cache["sigma"] = {k: (v * -1j).real for k, v in th.items()}
        g.cache["sigma_imag"] = max(float(np.max(np.abs((v * -1j).imag.value))) for v in th.values())
    return g.cache["sigma"]


def _real_dir(g: Geometry, j: int) -> Jet:
    return {1: g.e1, 2: g.e2, 0: g.T}[j]


def real_tensor_derivatives(g: Geometry, phi: Expr | Jet, depth: int) -> dict[tuple[int, ...], Jet]:
    """All real covariant derivatives ``phi_{e_i e_j ...}`` up to ``depth`` indices.

    ``C_{I,j} = e_j(C_I) - sum over slots s of sigma_{i_s}^k(e_j) C_{I[s -> k]}``.
    """
    sig = sigma(g)
    out = {(): scalar(g, phi)}
    layer = [()]
    for _ in range(depth):
        nxt = []
        for I in layer:
            C = out[I]
            for j in (1, 2, 0):
                val = apply(_real_dir(g, j), C)
                for s, i in enumerate(I):
                    if i == 1:
                        val = val - sig[j] * out[I[:s] + (2,) + I[s + 1:]]
                    elif i == 2:
                        val = val + sig[j] * out[I[:s] + (1,) + I[s + 1:]]
                out[I + (j,)] = val
                nxt.append(I + (j,))
        layer = nxt
    return out


# operators ----------------------------------------------------------------


def sub_laplacian(s: PHStructure | Geometry, phi: Expr | Jet, p=None, order: int = GEOMETRY_ORDER) -> Jet:
    """``Delta_b phi = phi_{1 1b} + phi_{1b 1}`` as a real jet."""
    g = geometry_of(s, p, order)
    f = scalar(g, phi)
    return (d(g, f, "1 1b") + d(g, f, "1b 1")).real


def sub_laplacian_real(s: PHStructure | Geometry, phi: Expr | Jet, p=None, order: int = GEOMETRY_ORDER) -> Jet:
    """``Delta_b phi = (phi_{e1 e1} + phi_{e2 e2}) / 2``."""
    g = geometry_of(s, p, order)
    r = real_tensor_derivatives(g, phi, 2)
    return (r[(1, 1)] + r[(2, 2)]) * 0.5


def commutation_residuals(
    s: PHStructure | Geometry, phi: Expr | Jet, samples=None, order: int = GEOMETRY_ORDER, tol: float = COMMUTATION_TOL
) -> Report:
    """Max residuals of the complex and real commutation relations for ``phi``."""
    g = geometry_of(s, getattr(samples, "points", samples), order)
    pts = g.points
    f = scalar(g, phi)
    c = curvature.connection_data(g)
    A, Ab = c.A11, c.A11.conj()
    W = curvature.tw_curvature(g).W
    rep = Report("commutation relations")

    # complex relations on C = phi (k = 0), phi_1 (k = 1) and phi_1bar (k = -1)
    for I in ((), ("1",), ("1b",)):
        C = derivative_chain(g, f, I)
        k = weight(I)
        dC = lambda idx: derivative_chain(g, C, idx, k)  # noqa: E731
        A_1b = cov(g, A, 2, "1b")
        Ab_1 = cov(g, Ab, -2, "1")
        tag = "C" if not I else "phi_" + "".join(I)
        lhs = dC(("0", "1")) - dC(("1", "0"))
        rhs = dC(("1b",)) * A - C * A_1b * k
        rep.add(residual_check(f"{tag}: [0,1]", "C_{I,01} - C_{I,10} = C_{I,1b} A11 - k C_I A11,1b", (lhs - rhs).value, tol, pts))
        lhs = dC(("0", "1b")) - dC(("1b", "0"))
        rhs = dC(("1",)) * Ab + C * Ab_1 * k
        rep.add(residual_check(f"{tag}: [0,1b]", "C_{I,01b} - C_{I,1b0} = C_{I,1} A1b1b + k C_I A1b1b,1", (lhs - rhs).value, tol, pts))
        lhs = dC(("1", "1b")) - dC(("1b", "1"))
        rhs = dC(("0",)) * 1j + C * W * k
        rep.add(residual_check(f"{tag}: [1,1b]", "C_{I,11b} - C_{I,1b1} = i C_{I,0} + k W C_I", (lhs - rhs).value, tol, pts))

    r = real_tensor_derivatives(g, f, 3)
    reA, imA = A.real, A.imag
    real_rel = [
        ("e1e2", "phi_e1e2 - phi_e2e1 = 2 phi_0", r[(1, 2)] - r[(2, 1)] - r[(0,)] * 2),
        ("0e1", "phi_0e1 - phi_e10 = phi_e1 ReA11 - phi_e2 ImA11", r[(0, 1)] - r[(1, 0)] - (r[(1,)] * reA - r[(2,)] * imA)),
        ("0e2", "phi_0e2 - phi_e20 = -(phi_e1 ImA11 + phi_e2 ReA11)", r[(0, 2)] - r[(2, 0)] + (r[(1,)] * imA + r[(2,)] * reA)),
        ("e1e1e2", "phi_e1e1e2 - phi_e1e2e1 = 2 phi_e10 - 2 phi_e2 W", r[(1, 1, 2)] - r[(1, 2, 1)] - (r[(1, 0)] * 2 - r[(2,)] * W * 2)),
        ("e2e1e2", "phi_e2e1e2 - phi_e2e2e1 = 2 phi_e20 + 2 phi_e1 W", r[(2, 1, 2)] - r[(2, 2, 1)] - (r[(2, 0)] * 2 + r[(1,)] * W * 2)),
    ]
    for name, ident, res in real_rel:
        rep.add(residual_check("real " + name, ident, res.value, tol, pts))
    return rep


# contact vector fields ----------------------------------------------------


def contact_vector(g: Geometry, f: Expr | Jet) -> Jet:
    """``X_f = i f_1 Z1bar - i f_1bar Z1 - f T`` as a real (3, n) jet."""
    fj = scalar(g, f)
    f1, f1b = d(g, fj, "1"), d(g, fj, "1b")
    X = g.Z1bar * f1 * 1j - g.Z1 * f1b * 1j - g.T * fj
    return X.real


def bracket(X: Jet, Y: Jet) -> Jet:
    return apply(X, Y) - apply(Y, X)


def contact_field(
    s: PHStructure | Geometry, f: Expr | Jet, p=None, order: int = GEOMETRY_ORDER, tol: float = 1e-9
) -> Report:
    """``X_f`` with its Lie derivatives of ``theta`` and ``J``.

    ``L_X theta`` uses the Cartan formula ``X -| dtheta + d(theta(X))``; the
    ``J`` component is ``2i theta1bar([X, Z1])`` from the bracket, compared with
    ``2(f_11 + i A11 f)``.
    """
    g = geometry_of(s, p, order)
    pts = g.points
    fj = scalar(g, f)
    X = contact_vector(g, fj)
    rep = Report("contact field")
    lie = (g.dtheta * X[:, None]).sum(axis=0) + pair(g.theta, X).grad()
    f0 = apply(g.T, fj)
    vals = {name: pair(lie, V) for name, V in (("e1", g.e1), ("e2", g.e2), ("T", g.T))}
    rep.add(residual_check("theta(X_f) = -f", "theta(X_f) = -f", (pair(g.theta, X) + fj).value, tol, pts))
    rep.add(residual_check("L_X theta horizontal", "(L_X theta)(e1) = (L_X theta)(e2) = 0",
                           np.stack([vals["e1"].value, vals["e2"].value]), tol, pts))
    rep.add(residual_check("L_X theta = -f0 theta", "(L_X theta)(T) = -f_0", (vals["T"] + f0).value, tol, pts))
    c = curvature.connection_data(g)
    predicted = (d(g, fj, "1 1") + c.A11 * fj * 1j) * 2
    via_bracket = pair(g.theta1.conj(), bracket(X, g.Z1)) * 2j
    rep.add(residual_check("L_X J component", "2i theta1bar([X_f, Z1]) = 2(f_11 + i A11 f)",
                           (via_bracket - predicted).value, tol, pts))
    rep.values["X_f"] = X.value.T.tolist() if len(pts) <= 4 else None
    rep.values["L_X J (max abs)"] = float(np.max(np.abs(predicted.value)))
    rep.values["L_X theta(T) + f0 (max abs)"] = float(np.max(np.abs((vals["T"] + f0).value)))
    return rep
