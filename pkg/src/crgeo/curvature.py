"""Connection, torsion and curvature of a pseudohermitian structure.

The structure equation ``dtheta1 = p theta1^theta1bar + q theta^theta1 + r theta^theta1bar``
is read off by evaluating ``dtheta1`` on frame pairs.  The purely imaginary
connection form is then ``theta_1^1 = -conj(p) theta1 + p theta1bar - q theta``
and the torsion is ``A^1_1bar = r``, ``A11 = conj(r)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus
from .exprjet import Call, Expr, Jet, Mul, Num
from .report import Report, residual_check
from .structure import GEOMETRY_ORDER, Geometry, PHStructure, ext_d, pair, two_form, validate

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class ConnectionData:
    """``theta_1^1 = alpha theta1 + beta theta1bar + gamma theta`` and the torsion ``A11``."""

    alpha: Jet
    beta: Jet
    gamma: Jet
    A11: Jet
    form: Jet  # theta_1^1 in coordinate components

    @property
    def A1_1bar(self) -> Jet:
        return self.A11.conj()

    def residuals(self) -> dict[str, np.ndarray]:
        return {
            "alpha + conj(beta)": np.abs((self.alpha + self.beta.conj()).value),
            "Re gamma": np.abs(self.gamma.real.value),
            "Re theta_1^1": np.abs(self.form.real.value).max(axis=0),
        }


@dataclass(frozen=True)
class CurvatureData:
    W: Jet
    W_imag: np.ndarray
    torsion_term: np.ndarray  # dtheta_1^1(Z1, T) - A11,1bar
    torsion_term_conj: np.ndarray  # dtheta_1^1(Z1bar, T) + conj(A11,1bar)


def connection_data(g: Geometry) -> ConnectionData:
    if "connection" not in g.cache:
        t1 = g.theta1
        dt1 = ext_d(t1)
        p = two_form(dt1, g.Z1, g.Z1bar)
        q = two_form(dt1, g.T, g.Z1)
        r = two_form(dt1, g.T, g.Z1bar)
        alpha, beta, gamma = -p.conj(), p, -q
        form = t1 * alpha + t1.conj() * beta + g.theta * gamma
        g.cache["connection"] = ConnectionData(alpha, beta, gamma, r.conj(), form)
        g.cache["dtheta1"] = dt1
    return g.cache["connection"]


def connection(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER) -> ConnectionData:
    return connection_data(calculus.geometry_of(s, p, order))


def tw_curvature(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER) -> CurvatureData:
    """``W = dtheta_1^1(Z1, Z1bar)`` plus the residuals of the torsion part of ``dtheta_1^1``.

    The torsion part predicted for ``dtheta_1^1`` is
    ``A11,1bar theta1^theta - conj(A11,1bar) theta1bar^theta``.
    """
    g = calculus.geometry_of(s, p, order)
    if "curvature" not in g.cache:
        c = connection_data(g)
        dform = ext_d(c.form)
        W = two_form(dform, g.Z1, g.Z1bar)
        A_1b = calculus.cov(g, c.A11, 2, "1b")
        t1 = two_form(dform, g.Z1, g.T) - A_1b
        t2 = two_form(dform, g.Z1bar, g.T) + A_1b.conj()
        g.cache["curvature"] = CurvatureData(W.real, np.abs(W.imag.value), np.abs(t1.value), np.abs(t2.value))
    return g.cache["curvature"]


def _W(g: Geometry) -> Jet:
    return tw_curvature(g).W


def _A(g: Geometry) -> Jet:
    return connection_data(g).A11


def cartan_tensor(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER) -> Jet:
    """``Q11 = W_11/6 + (i/2) W A11 - A11,0 - (2i/3) A11,1bar1``."""
    g = calculus.geometry_of(s, p, order)
    W, A = _W(g), _A(g)
    W11 = calculus.derivative_chain(g, W, ("1", "1"))
    A0 = calculus.derivative_chain(g, A, ("0",), 2)
    A1b1 = calculus.derivative_chain(g, A, ("1b", "1"), 2)
    return W11 * (1 / 6) + W * A * 0.5j - A0 - A1b1 * (2j / 3)


def paneitz_p1(g: Geometry, phi: Expr | Jet) -> Jet:
    """``P1 phi = phi_{1bar 1 1} + i A11 phi_1bar`` (weight one)."""
    return calculus.d(g, phi, "1b 1 1") + _A(g) * calculus.d(g, phi, "1b") * 1j


def paneitz(s: PHStructure | Geometry, phi: Expr | Jet, p=None, order: int = GEOMETRY_ORDER) -> tuple[Jet, Jet]:
    """``(P1 phi, P0 phi)`` with ``P0 phi = 2 Re (P1 phi)_{,1bar}``."""
    g = calculus.geometry_of(s, p, order)
    P1 = paneitz_p1(g, phi)
    P0 = calculus.cov(g, P1, 1, "1b").real * 2
    return P1, P0


def c_theta(g: Geometry, phi: Expr | Jet) -> Jet:
    """``C_theta phi = (P1 phi)_{,1bar}``."""
    return calculus.cov(g, paneitz_p1(g, phi), 1, "1b")


@dataclass(frozen=True)
class QCurvature:
    R1: Jet
    R1_1bar: Jet
    Q: Jet
    Q_alt: Jet  # -(Delta_b W + 2 Im A11,1bar1bar)


Q_CONSTANT = 2.0


def q_curvature(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER) -> QCurvature:
    """``R1 = W_1 - i A11,1bar`` and ``Q = -c Re R1,1bar`` with ``c = 2``."""
    g = calculus.geometry_of(s, p, order)
    if "q_curvature" not in g.cache:
        W, A = _W(g), _A(g)
        R1 = calculus.cov(g, W, 0, "1") - calculus.derivative_chain(g, A, ("1b",), 2) * 1j
        R1_1b = calculus.cov(g, R1, 1, "1b")
        dbW = calculus.sub_laplacian(g, W)
        A1b1b = calculus.derivative_chain(g, A, ("1b", "1b"), 2)
        Q_alt = (dbW + A1b1b.imag * 2) * (-Q_CONSTANT / 2)
        g.cache["q_curvature"] = QCurvature(R1, R1_1b, R1_1b.real * -Q_CONSTANT, Q_alt)
    return g.cache["q_curvature"]


def curvature_report(s: PHStructure | Geometry, p=None, order: int = GEOMETRY_ORDER, tol: float = CONSISTENCY_TOL) -> Report:
    """Consistency residuals of the connection and curvature plus the curvature values."""
    g = calculus.geometry_of(s, p, order)
    pts = g.points
    c = connection_data(g)
    cd = tw_curvature(g)
    q = q_curvature(g)
    Q11 = cartan_tensor(g)
    rep = Report("curvature")
    res = c.residuals()
    rep.add(residual_check("connection imaginary", "alpha = -conj(beta)", res["alpha + conj(beta)"], tol, pts))
    rep.add(residual_check("dh11bar = 0", "Re gamma = 0", res["Re gamma"], tol, pts))
    rep.add(residual_check("Im W", "Im dtheta_1^1(Z1, Z1bar) = 0", cd.W_imag, tol, pts))
    rep.add(residual_check("torsion part (theta1^theta)", "dtheta_1^1(Z1, T) = A11,1bar", cd.torsion_term, 1e-8, pts))
    rep.add(residual_check("torsion part (theta1bar^theta)", "dtheta_1^1(Z1bar, T) = -conj(A11,1bar)", cd.torsion_term_conj, 1e-8, pts))
    rep.add(residual_check("Q two ways", "-2 Re R1,1bar = -(Delta_b W + 2 Im A11,1bar1bar)", (q.Q - q.Q_alt).value, 1e-8, pts))
    rep.add(residual_check("Im R1,1bar", "Im R1,1bar = 0", q.R1_1bar.imag.value, 1e-8, pts))
    W = cd.W.value
    rep.values.update(
        {
            "W": W,
            "A11": c.A11.value,
            "theta_1^1": {"alpha": c.alpha.value, "beta": c.beta.value, "gamma": c.gamma.value},
            "Q11": Q11.value,
            "R1": q.R1.value,
            "R1,1bar": q.R1_1bar.value,
            "Q": q.Q.value,
        }
    )
    return rep


# conformal change ----------------------------------------------------------


def rescaled_structure(s: PHStructure, gexpr: Expr, params: dict | None = None) -> PHStructure:
    """``theta~ = exp(2g) theta`` with frame ``e~_i = exp(-g) e_i``.

    The dual coframe is ``theta1~ = exp(g)(theta1 + 2i g_1bar theta)``; its
    Z1-dual ``exp(-g) Z1`` needs no derivative of ``g``, so the new frame is
    an algebraic rescaling of the old one.
    """
    up = Call("exp", Mul(Num(2.0), gexpr))
    down = Call("exp", Mul(Num(-1.0), gexpr))
    return PHStructure(
        s.chart,
        tuple(Mul(up, c) for c in s.theta),
        tuple(Mul(down, c) for c in s.e1),
        tuple(Mul(down, c) for c in s.e2),
        {**s.params, **(params or {})},
        f"{s.name} rescaled",
    )


def conformal_change(
    s: PHStructure, gexpr: Expr, points, params: dict | None = None, order: int = GEOMETRY_ORDER, tol: float = 1e-6
) -> tuple[PHStructure, Report]:
    """Rescale by ``exp(2g)`` and compare ``R1~`` directly against ``exp(-3g)(R1 - 6 P1 g)``."""
    new = rescaled_structure(s, gexpr, params)
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    old_g = Geometry(s.with_params(**(params or {})), pts, order)
    new_g = Geometry(new, pts, order)
    rep = Report("conformal change")
    for chk in validate(new, pts, fd_points=0).checks:
        rep.add(chk)
    gj = old_g.field(gexpr)
    eg = np.exp(gj.value)

    g1b = calculus.d(old_g, gexpr, "1b").value
    predicted = (old_g.theta1.value + 2j * g1b * old_g.theta.value) * eg
    rep.add(residual_check("coframe law", "theta1~ = exp(g)(theta1 + 2i g_1bar theta)", new_g.theta1.value - predicted, 1e-9, pts))

    q_old = q_curvature(old_g)
    q_new = q_curvature(new_g)
    P1g = paneitz_p1(old_g, gexpr)
    law = (q_old.R1.value - 6 * P1g.value) * eg ** -3
    rep.add(residual_check("R1 law", "R1~ = exp(-3g)(R1 - 6 P1 g)", q_new.R1.value - law, tol, pts))

    Cg = c_theta(old_g, gexpr)
    law_div = (q_old.R1_1bar.value - 6 * Cg.value) * eg ** -4
    rep.add(residual_check("R1,1bar law", "R1~,1bar = exp(-4g)(R1,1bar - 6 C_theta g)", q_new.R1_1bar.value - law_div, tol, pts))
    dbW = calculus.sub_laplacian(old_g, _W(old_g)).value
    A1b1b = calculus.derivative_chain(old_g, _A(old_g), ("1b", "1b"), 2).value
    # with Q~ = -2 Re R1~,1bar this reduces to the vanishing-Q~ statement when Q~ = 0
    cor = dbW + 2 * A1b1b.imag - 12 * Cg.value.real - 2 * eg ** 4 * q_new.R1_1bar.value.real
    rep.add(residual_check("divergence identity", "Delta_b W + 2 Im A11,1bar1bar - 12 C_theta g = 2 exp(4g) R1~,1bar", cor, tol, pts))
    rep.add(residual_check("Im C_theta g", "Im C_theta g = 0", Cg.value.imag, tol, pts))
    rep.values.update(
        {
            "R1~ direct": q_new.R1.value,
            "R1~ law": law,
            "Q~": q_new.Q.value,
            "C_theta g": Cg.value,
        }
    )
    return new, rep
