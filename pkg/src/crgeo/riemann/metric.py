"""The Webster adapted metric ``h^lambda = dtheta(., J.)/2 + lambda^-2 theta^2``.

The orthonormal frame is ``E = (e1, e2, lambda T)`` with dual coframe
``(Re theta1, Im theta1, theta/lambda)``.  The Levi-Civita connection is
obtained from the Koszul formula in that frame,

    Gamma_ijk = <nabla_{E_i} E_j, E_k> = (C_ij^k - C_jk^i + C_ki^j) / 2,

where ``[E_i, E_j] = C_ij^k E_k``.  Connection forms are
``omega_j^k = Gamma_ijk omega^i`` and curvature comes from Cartan's second
structure equation ``Omega_j^k = d omega_j^k - omega_j^l ^ omega_l^k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import calculus, curvature
from ..exprjet import Jet
from ..report import Report, residual_check
from ..structure import GEOMETRY_ORDER, Geometry, PHStructure, apply, ext_d, two_form, wedge

STRUCTURE_TOL = 1e-8
RICCI_TOL = 1e-7
TORSION_TOL = 1e-8


@dataclass
class AdaptedMetricData:
    lam: float
    geometry: Geometry
    frame: list[Jet]  # E_a as coordinate vectors
    coframe: list[Jet]  # omega^a as coordinate one-forms
    gamma: list[list[list[Jet]]]  # gamma[i][j][k] = <nabla_{E_i} E_j, E_k>
    forms: list[list[Jet]]  # forms[j][k] = omega_j^k
    riemann: np.ndarray  # Rm[i, j, k, l] = Omega_l^k(E_i, E_j), sectional K(E_a, E_b) = Rm[a, b, a, b]
    ricci: np.ndarray
    scalar: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.geometry.points

    def covariant(self, X: list, Y: list) -> list:
        """Frame components of ``nabla_X Y`` for frame-component lists of jets or floats."""
        out = []
        for k in range(3):
            acc = 0.0
            for i in range(3):
                term = _directional(self.frame[i], Y[k])
                for j in range(3):
                    term = term + _times(Y[j], self.gamma[i][j][k])
                acc = acc + _times(X[i], term)
            out.append(acc)
        return out

    def rm(self, X, Y, Z, V) -> np.ndarray:
        """``Rm(X, Y, Z, V)`` for frame-component arrays of shape (3, n) or (3,)."""
        args = [np.broadcast_to(np.asarray(a, dtype=float).reshape(3, -1), (3, len(self.points))) for a in (X, Y, Z, V)]
        return np.einsum("ijkln,in,jn,kn,ln->n", self.riemann, *args)


def _directional(E: Jet, f) -> Jet | float:
    if isinstance(f, Jet):
        return apply(E, f)
    return 0.0


def _times(a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return b * a if isinstance(b, Jet) else a * b
    return a * b


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    return lam


def adapted_metric(s: PHStructure | Geometry, lam: float, p=None, order: int = GEOMETRY_ORDER) -> AdaptedMetricData:
    lam = _check_lambda(lam)
    g = calculus.geometry_of(s, p, order)
    key = ("adapted", lam)
    if key in g.cache:
        return g.cache[key]
    frame = [g.e1, g.e2, g.T * lam]
    coframe = [g.omega1, g.omega2, g.theta * (1 / lam)]
    dco = [ext_d(w) for w in coframe]
    # C[i][j][k] = omega^k([E_i, E_j]) = -d omega^k(E_i, E_j)
    C = [[[two_form(dco[k], frame[i], frame[j]) * -1 for k in range(3)] for j in range(3)] for i in range(3)]
    gamma = [[[(C[i][j][k] - C[j][k][i] + C[k][i][j]) * 0.5 for k in range(3)] for j in range(3)] for i in range(3)]
    forms = [[sum((coframe[i] * gamma[i][j][k] for i in range(1, 3)), coframe[0] * gamma[0][j][k]) for k in range(3)] for j in range(3)]
    n = len(g.points)
    Rm = np.zeros((3, 3, 3, 3, n))
    for l in range(3):
        for k in range(3):
            Omega = ext_d(forms[l][k])
            for m in range(3):
                Omega = Omega - wedge(forms[l][m], forms[m][k])
            for i in range(3):
                for j in range(3):
                    Rm[i, j, k, l] = two_form(Omega, frame[i], frame[j]).value
    ricci = np.einsum("abadn->bdn", Rm)
    data = AdaptedMetricData(lam, g, frame, coframe, gamma, forms, Rm, ricci, np.einsum("aan->n", ricci))
    g.cache[key] = data
    return data


def expected_ricci(W: np.ndarray, lam: float) -> np.ndarray:
    """Ricci matrix predicted for vanishing torsion, shape (3, 3, n)."""
    W = np.asarray(W, dtype=float)
    out = np.zeros((3, 3) + W.shape)
    out[0, 0] = out[1, 1] = 2 * W - 2 / lam**2
    out[2, 2] = 2 / lam**2
    return out


def horizontal_directions(count: int, seed: int) -> np.ndarray:
    """Deterministic unit vectors ``cos(a) e1 + sin(a) e2``, shape (count, 3)."""
    angles = np.random.default_rng(seed).uniform(0, 2 * np.pi, count)
    return np.stack([np.cos(angles), np.sin(angles), np.zeros(count)], axis=1)


def adapted_metric_report(
    s: PHStructure | Geometry, lam: float, p=None, order: int = GEOMETRY_ORDER, seed: int = 7, tol: float = RICCI_TOL
) -> Report:
    """Structure-equation residuals, Riemann symmetries and the vanishing-torsion Ricci matrix."""
    m = adapted_metric(s, lam, p, order)
    g, pts, Rm = m.geometry, m.points, m.riemann
    rep = Report(f"adapted metric (lambda = {m.lam:g})")

    anti = np.stack([(m.gamma[i][j][k] + m.gamma[i][k][j]).value for i in range(3) for j in range(3) for k in range(3)])
    rep.add(residual_check("connection antisymmetry", "omega_a^b + omega_b^a = 0", anti, STRUCTURE_TOL, pts))
    first = []
    for a in range(3):
        rhs = wedge(m.coframe[0], m.forms[0][a]) + wedge(m.coframe[1], m.forms[1][a]) + wedge(m.coframe[2], m.forms[2][a])
        first.append((ext_d(m.coframe[a]) - rhs).value)
    rep.add(residual_check("first structure equation", "d omega^a = omega^b ^ omega_b^a", np.stack(first), STRUCTURE_TOL, pts))
    sym = np.stack(
        [
            Rm + Rm.transpose(1, 0, 2, 3, 4),
            Rm + Rm.transpose(0, 1, 3, 2, 4),
            Rm - Rm.transpose(2, 3, 0, 1, 4),
            Rm + Rm.transpose(1, 2, 0, 3, 4) + Rm.transpose(2, 0, 1, 3, 4),
        ]
    )
    rep.add(residual_check("Riemann symmetries", "Rm antisymmetric in pairs, pair symmetric, first Bianchi", sym, STRUCTURE_TOL, pts))

    W = curvature.tw_curvature(g).W.value
    A = curvature.connection_data(g).A11.value
    rep.add(residual_check("hypothesis: vanishing torsion", "|A11| = 0", np.abs(A), TORSION_TOL, pts))
    if rep["hypothesis: vanishing torsion"].passed:
        expected = expected_ricci(W, m.lam)
        rep.add(residual_check("Ricci matrix", "Ric = diag(2W - 2/lam^2, 2W - 2/lam^2, 2/lam^2)", m.ricci - expected, tol, pts))
        off = np.stack([m.ricci[0, 1], m.ricci[0, 2], m.ricci[1, 2]])
        rep.add(residual_check("Ricci off-diagonal", "Ric_ab = 0 for a != b", off, STRUCTURE_TOL, pts))
        rep.add(residual_check("scalar curvature", "R = 4W - 2/lam^2", m.scalar - (4 * W - 2 / m.lam**2), tol, pts))
        e3 = np.array([0.0, 0.0, 1.0])
        sec = np.stack([m.rm(V, e3, V, e3) - m.lam**-2 for V in horizontal_directions(8, seed)])
        rep.add(residual_check("vertical sectional curvature", "Rm(V, e3, V, e3) = 1/lam^2 for unit horizontal V", sec, STRUCTURE_TOL, pts))
    else:
        rep.flags["precondition"] = "torsion does not vanish: Ricci matrix identity not asserted"
    rep.values.update({"lambda": m.lam, "W": W, "ricci": m.ricci, "scalar": m.scalar})
    return rep


def connection_form_identities(s: PHStructure | Geometry, lam: float, p=None, order: int = GEOMETRY_ORDER, tol: float = STRUCTURE_TOL) -> Report:
    """Compare the Riemannian connection forms against the pseudohermitian connection and torsion.

    ``theta_1^1 = i(omega_1^2 - theta/lam^2)`` and, with ``A = A_1bar1bar``,
    ``omega_1^3 = -lam Re A omega^1 + (-lam Im A + 1/lam) omega^2``,
    ``omega_2^3 = (-lam Im A - 1/lam) omega^1 + lam Re A omega^2``.
    """
    m = adapted_metric(s, lam, p, order)
    g = m.geometry
    lam = m.lam
    conn = curvature.connection_data(g)
    A = conn.A11.conj()
    reA, imA = A.real, A.imag
    w1, w2 = m.coframe[0], m.coframe[1]
    rep = Report(f"connection form identities (lambda = {lam:g})")
    lhs = conn.form
    rhs = (m.forms[0][1] - g.theta * lam**-2) * 1j
    rep.add(residual_check("theta_1^1", "theta_1^1 = i(omega_1^2 - theta/lam^2)", (lhs - rhs).value, tol, g.points))
    w13 = w1 * (reA * -lam) + w2 * (imA * -lam + 1 / lam)
    w23 = w1 * (imA * -lam - 1 / lam) + w2 * (reA * lam)
    res = np.stack([(m.forms[0][2] - w13).value, (m.forms[1][2] - w23).value])
    rep.add(residual_check("omega_1^3, omega_2^3", "omega_1^3, omega_2^3 in terms of A_1bar1bar", res, tol, g.points))
    return rep
