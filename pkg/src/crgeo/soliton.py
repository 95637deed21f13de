"""Residuals of the CR Yamabe soliton equations and their consequences.

Two kinds of candidate are supported:

* ``contact``: a function ``f`` with ``W + f_0/2 = mu`` and ``f_11 + i A11 f = 0``;
* ``gradient``: a potential ``phi`` with ``W + Delta_b phi / 2 = mu``,
  ``phi_11 = 0`` and ``phi_0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus, curvature
from .calculus import d
from .exprjet import Expr, jet
from .exprjet.expr import variables
from .parallel import map_points
from .report import Report, residual_check
from .structure import GEOMETRY_ORDER, Geometry, PHStructure, SampleSet, apply, pair

SOLITON_TOL = 1e-7
TORSION_TOL = 1e-8


@dataclass(frozen=True)
class SolitonCandidate:
    structure: PHStructure
    potential: Expr
    mu: float
    kind: str  # "contact" or "gradient"

    def __post_init__(self):
        if self.kind not in ("contact", "gradient"):
            raise ValueError(f"kind must be 'contact' or 'gradient', got {self.kind!r}")
        if not np.isfinite(self.mu):
            raise ValueError("mu must be finite")


def classify(mu: float) -> str:
    if mu > 0:
        return "shrinking"
    if mu < 0:
        return "expanding"
    return "steady"


def _points(samples) -> np.ndarray:
    pts = samples.points if isinstance(samples, SampleSet) else samples
    return np.asarray(pts, dtype=float).reshape(-1, 3)


def _require(c: SolitonCandidate, kind: str):
    if c.kind != kind:
        raise ValueError(f"expected a {kind} candidate, got {c.kind}")


# contact-field solitons -------------------------------------------------------


def _cr_pointwise(c: SolitonCandidate, order: int):
    def fn(pts):
        g = Geometry(c.structure, pts, order)
        f = g.field(c.potential)
        W = curvature.tw_curvature(g).W
        A = curvature.connection_data(g).A11
        f0 = apply(g.T, f)
        r1 = W + f0 * 0.5 - c.mu
        r2 = d(g, c.potential, "1 1") + A * f * 1j
        X = calculus.contact_vector(g, f)
        lie_j = pair(g.theta1.conj(), calculus.bracket(X, g.Z1)) * 2j
        return {"r1": r1.value, "r2": r2.value, "lie_j": (lie_j - r2 * 2).value}

    return fn


def check_cr_soliton(c: SolitonCandidate, samples, order: int = GEOMETRY_ORDER, tol: float = SOLITON_TOL) -> Report:
    _require(c, "contact")
    pts = _points(samples)
    vals = map_points(_cr_pointwise(c, order), pts)
    rep = Report("CR Yamabe soliton")
    rep.add(residual_check("W + f0/2 = mu", "W + f_0/2 = mu", vals["r1"], tol, pts))
    rep.add(residual_check("f_11 + i A11 f = 0", "f_11 + i A11 f = 0", vals["r2"], tol, pts))
    rep.add(residual_check("L_X J cross-check", "2i theta1bar([X_f, Z1]) = 2(f_11 + i A11 f)", vals["lie_j"], tol, pts))
    rep.flags["classification"] = classify(c.mu)
    rep.values["mu"] = c.mu
    return rep


def harnack_residual(c: SolitonCandidate, samples, order: int = GEOMETRY_ORDER, tol: float = SOLITON_TOL) -> Report:
    """``4 Delta_b W + 2W(W - mu) - W_0 f - <grad_b W, J grad_b f>`` with
    ``<grad_b W, J grad_b f> = -i(f_1 W_1bar - f_1bar W_1)``.

    The identity is only asserted when the soliton equations hold; otherwise
    the report carries the failed precondition and the raw quantity.
    """
    _require(c, "contact")
    pts = _points(samples)
    pre = check_cr_soliton(c, pts, order, tol)

    def fn(chunk):
        g = Geometry(c.structure, chunk, order)
        f = g.field(c.potential)
        W = curvature.tw_curvature(g).W
        W1, W1b = calculus.cov(g, W, 0, "1"), calculus.cov(g, W, 0, "1b")
        f1, f1b = d(g, c.potential, "1"), d(g, c.potential, "1b")
        inner = (f1 * W1b - f1b * W1) * -1j
        H = calculus.sub_laplacian(g, W) * 4 + W * (W - c.mu) * 2 - apply(g.T, W) * f - inner
        return {"H": H.value, "H_imag": np.imag(H.value)}

    vals = map_points(fn, pts)
    rep = Report("Harnack identity")
    for chk in pre.checks:
        rep.add(residual_check("precondition: " + chk.name, chk.identity, np.array([chk.residual]), chk.tolerance, None))
    H = np.real(vals["H"])
    rep.values["max |H|"] = float(np.max(np.abs(H)))
    if pre.passed:
        rep.add(residual_check("Harnack quantity", "4 Delta_b W + 2W(W-mu) - W_0 f - <grad_b W, J grad_b f> = 0", H, tol, pts))
    else:
        rep.flags["precondition"] = "precondition failed: soliton equations do not hold, identity not asserted"
    return rep


# pseudo-gradient solitons -----------------------------------------------------


def _gradient_pointwise(c: SolitonCandidate, order: int):
    def fn(pts):
        g = Geometry(c.structure, pts, order)
        phi = c.potential
        W = curvature.tw_curvature(g).W
        dbphi = calculus.sub_laplacian(g, phi)
        phi11 = d(g, phi, "1 1")
        phi0 = apply(g.T, g.field(phi))
        r = calculus.real_tensor_derivatives(g, phi, 2)
        # phi_11 = ((phi_e1e1 - phi_e2e2) - i(phi_e1e2 + phi_e2e1)) / 4
        phi11_real = ((r[(1, 1)] - r[(2, 2)]) - (r[(1, 2)] + r[(2, 1)]) * 1j) * 0.25
        return {
            "def": (W + dbphi * 0.5 - c.mu).value,
            "phi11": phi11.value,
            "phi0": phi0.value,
            "e11-e22": (r[(1, 1)] - r[(2, 2)]).value,
            "e12": r[(1, 2)].value,
            "e21": r[(2, 1)].value,
            "real def": (W + r[(1, 1)] * 0.5 - c.mu).value,
            "agree phi11": (phi11 - phi11_real).value,
            "agree phi0": (r[(1, 2)] - r[(2, 1)] - phi0 * 2).value,
            "agree laplacian": (dbphi - (r[(1, 1)] + r[(2, 2)]) * 0.5).value,
        }

    return fn


def check_pseudo_gradient(c: SolitonCandidate, samples, order: int = GEOMETRY_ORDER, tol: float = SOLITON_TOL) -> Report:
    _require(c, "gradient")
    pts = _points(samples)
    v = map_points(_gradient_pointwise(c, order), pts)
    rep = Report("pseudo-gradient CR Yamabe soliton")
    rep.add(residual_check("W + Delta_b phi/2 = mu", "W + Delta_b phi / 2 = mu", v["def"], tol, pts))
    rep.add(residual_check("phi_11 = 0", "phi_11 = 0", v["phi11"], tol, pts))
    rep.add(residual_check("phi_0 = 0", "phi_0 = 0", v["phi0"], tol, pts))
    rep.add(residual_check("real: phi_e1e1 = phi_e2e2", "phi_e1e1 = phi_e2e2", v["e11-e22"], tol, pts))
    rep.add(residual_check("real: phi_e1e2 = phi_e2e1 = 0", "phi_e1e2 = phi_e2e1 = 0", np.stack([v["e12"], v["e21"]]), tol, pts))
    rep.add(residual_check("real: W + phi_e1e1/2 = mu", "W + phi_e1e1 / 2 = mu", v["real def"], tol, pts))
    agree = np.stack([np.abs(v["agree phi11"]), np.abs(v["agree phi0"]), np.abs(v["agree laplacian"])])
    rep.add(residual_check("complex/real agreement", "4 phi_11 = (phi_e1e1 - phi_e2e2) - i(phi_e1e2 + phi_e2e1)", agree, 1e-9, pts))
    rep.flags["classification"] = classify(c.mu)
    rep.flags["trivial"] = _is_constant(c.potential)
    rep.values["mu"] = c.mu
    return rep


def _is_constant(e: Expr) -> bool:
    return not variables(e)


def conserved_quantities(c: SolitonCandidate, samples, order: int = GEOMETRY_ORDER, tol: float = SOLITON_TOL) -> Report:
    """``C = W + |grad_b phi|^2 / 2 - mu phi`` and ``grad_b(W e^-phi)`` under vanishing torsion."""
    _require(c, "gradient")
    pts = _points(samples)
    pre = check_pseudo_gradient(c, pts, order, tol)

    def fn(chunk):
        g = Geometry(c.structure, chunk, order)
        phi = g.field(c.potential)
        W = curvature.tw_curvature(g).W
        A = curvature.connection_data(g).A11
        p1, p1b = d(g, c.potential, "1"), d(g, c.potential, "1b")
        C = W + calculus.grad_b_norm2(g, phi) * 0.5 - phi * c.mu
        u = W * jet.exp(phi * -1)
        u1 = calculus.cov(g, u, 0, "1")
        W1 = calculus.cov(g, W, 0, "1")
        N = p1 * p1b
        grad_N = np.stack([(apply(v, N) - apply(v, phi) * (c.mu - W)).value for v in (g.e1, g.e2, g.T)])
        return {
            "A": np.abs(A.value),
            "C": C.value,
            "grad u": np.sqrt(2) * np.abs(u1.value),
            "eq43": (W1 - (A * p1b * -1j + W * p1)).value,
            "grad N": np.abs(grad_N),
        }

    v = map_points(fn, pts)
    rep = Report("conserved quantities")
    for chk in pre.checks:
        rep.add(residual_check("precondition: " + chk.name, chk.identity, np.array([chk.residual]), chk.tolerance, None))
    rep.add(residual_check("hypothesis: vanishing torsion", "|A11| = 0", v["A"], TORSION_TOL, pts))
    C = v["C"]
    rep.values["C mean"] = float(np.mean(C))
    rep.values["C spread"] = float(np.max(C) - np.min(C))
    # the intermediate identity needs only the soliton equations, not vanishing torsion
    if pre.passed:
        rep.add(residual_check("W_1 = -i A11 phi_1bar + W phi_1", "W_1 = -i A11 phi_1bar + W phi_1", v["eq43"], tol, pts))
    if pre.passed and rep["hypothesis: vanishing torsion"].passed:
        spread = np.array([np.max(C) - np.min(C)])
        rep.add(residual_check("C constant", "W + |grad_b phi|^2/2 - mu phi = const (spread)", spread, tol, None))
        rep.add(residual_check("grad_b(W e^-phi) = 0", "grad_b(W e^-phi) = 0", v["grad u"], tol, pts))
        rep.add(
            residual_check(
                "gradient of phi_1 phi_1bar",
                "grad(phi_1 phi_1bar) = (mu - W) grad phi in the frame e1, e2, T",
                v["grad N"],
                tol,
                pts,
            )
        )
    else:
        rep.flags["precondition"] = "hypotheses failed: conserved-quantity identities not asserted"
    return rep


def bakry_emery(c: SolitonCandidate, X: complex, p, order: int = GEOMETRY_ORDER, tol: float = 1e-9) -> Report:
    """Bakry-Emery Ricci and torsion for ``X = X^1 Z1 + conj(X^1) Z1bar`` at ``p``.

    ``|X|^2 = X^1 X^1bar``; ``X_1 = X^1bar`` with ``h11bar = 1``.
    """
    _require(c, "gradient")
    pts = _points(p)
    g = Geometry(c.structure, pts, order)
    W = curvature.tw_curvature(g).W.value
    A = curvature.connection_data(g).A11.value
    x1 = complex(X)
    x1b = x1.conjugate()
    norm2 = (x1 * x1b).real
    phi11b = d(g, c.potential, "1 1b").value
    phi1b1b = d(g, c.potential, "1b 1b").value
    ric = W * norm2 + np.real(phi11b * x1 * x1b)
    tor_be = 2 * np.real((1j * np.conj(A) + phi1b1b) * x1b * x1b)
    tor = 2 * np.real(1j * np.conj(A) * x1b * x1b)
    rep = Report("Bakry-Emery curvature")
    rep.add(residual_check("Ric_phi(X, X) = mu |X|^2", "W X^1 X^1bar + Re(phi_11bar X^1 X^1bar) = mu |X|^2", ric - c.mu * norm2, tol, pts))
    rep.add(residual_check("Tor_phi(X, X) = Tor(X, X)", "2 Re((i A1b1b + phi_1b1b) X_1 X_1) = 2 Re(i A1b1b X_1 X_1)", tor_be - tor, tol, pts))
    rep.values.update({"ric_be": ric, "tor_be": tor_be, "tor": tor, "|X|^2": norm2})
    return rep
