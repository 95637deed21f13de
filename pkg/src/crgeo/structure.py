"""Pseudohermitian structures on a single chart.

A structure is a contact form ``theta`` plus a real frame ``(e1, e2)`` of
``ker theta`` with ``J e1 = e2`` and ``dtheta(e1, e2) = 2``.  Everything else
(Reeb field, complex coframe) is derived pointwise on Taylor jets.

Vector fields and one-forms are jets of shape ``(3, n)``: coordinate component
first, sample point last.  Two-forms are antisymmetric ``(3, 3, n)`` jets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from .exprjet import Expr, Jet, eval_jet, fd_check, to_source
from .exprjet.expr import parameters
from .report import Report, residual_check

GEOMETRY_ORDER = 5
VALIDATION_TOL = 1e-9
FD_TOL = 1e-4
_SINGULAR = 1e-12


class ContactError(ValueError):
    pass


class FrameDegenerate(ValueError):
    pass


# charts and samples ------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    coords: tuple[str, str, str]
    box: tuple[tuple[float, float], ...]
    domain: tuple[tuple[float, float], ...] = ((-math.inf, math.inf),) * 3
    margin: float = 1e-3
    name: str = "chart"

    def __post_init__(self):
        if len(self.coords) != 3 or len(set(self.coords)) != 3:
            raise ValueError(f"a chart needs three distinct coordinate names, got {self.coords}")
        if len(self.box) != 3 or len(self.domain) != 3:
            raise ValueError("box and domain need one interval per coordinate")
        for (lo, hi), (dlo, dhi), name in zip(self.box, self.domain, self.coords):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"sampling interval for {name} must be finite and nondegenerate")
            if not dlo < dhi:
                raise ValueError(f"domain interval for {name} is degenerate")
            if lo < dlo or hi > dhi:
                raise ValueError(f"sampling box for {name} leaves the domain")
        if not 0 <= self.margin < 0.5 * min(hi - lo for lo, hi in self.box):
            raise ValueError("margin must be nonnegative and smaller than half the box")

    def inner_box(self) -> np.ndarray:
        b = np.array(self.box, dtype=float)
        return np.stack([b[:, 0] + self.margin, b[:, 1] - self.margin], axis=1)


@dataclass(frozen=True)
class SampleSet:
    points: np.ndarray
    seed: int
    start: int
    box: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


def halton(chart: Chart, n: int, seed: int = 7, start: int = 0) -> SampleSet:
    """Scrambled Halton points strictly inside the chart's box shrunk by its margin."""
    sampler = qmc.Halton(d=3, scramble=True, seed=seed)
    if start:
        sampler.fast_forward(start)
    u = sampler.random(n)
    box = chart.inner_box()
    # Halton values lie in [0, 1); keep them off the closed inner box boundary
    u = np.clip(u, 1e-12, 1 - 1e-12)
    pts = box[:, 0] + u * (box[:, 1] - box[:, 0])
    return SampleSet(pts, seed, start, box)


# structures --------------------------------------------------------------


@dataclass(frozen=True)
class PHStructure:
    chart: Chart
    theta: tuple[Expr, Expr, Expr]
    e1: tuple[Expr, Expr, Expr]
    e2: tuple[Expr, Expr, Expr]
    params: Mapping[str, float] = field(default_factory=dict)
    name: str = "structure"

    def __post_init__(self):
        for label, comps in (("theta", self.theta), ("e1", self.e1), ("e2", self.e2)):
            if len(comps) != 3:
                raise ValueError(f"{label} needs three components")
        missing = sorted(set().union(*(parameters(c) for c in self.expressions())) - set(self.params))
        if missing:
            raise ValueError(f"unbound parameters: {', '.join(missing)}")
        object.__setattr__(self, "params", dict(sorted(self.params.items())))

    def expressions(self) -> tuple[Expr, ...]:
        return tuple(self.theta) + tuple(self.e1) + tuple(self.e2)

    def with_params(self, **params: float) -> "PHStructure":
        return replace(self, params={**self.params, **params})

    def geometry(self, points, order: int = GEOMETRY_ORDER) -> "Geometry":
        return Geometry(self, points, order)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "coords": list(self.chart.coords),
            "theta": [to_source(c) for c in self.theta],
            "e1": [to_source(c) for c in self.e1],
            "e2": [to_source(c) for c in self.e2],
            "params": dict(self.params),
        }


# jet calculus on vector fields and forms ----------------------------------


def _lift(X: Jet, ndim: int) -> Jet:
    # insert singleton axes between the component axis and the point axis
    if ndim <= 1:
        return X
    return X.reshape((X.shape[0],) + (1,) * (ndim - 1) + X.shape[1:])


def apply(X: Jet, f: Jet) -> Jet:
    """Directional derivative ``X(f)``; ``f`` may carry extra leading axes."""
    return (_lift(X, len(f.shape)) * f.grad()).sum(axis=0)


def pair(form: Jet, X: Jet) -> Jet:
    return (form * X).sum(axis=0)


def ext_d(form: Jet) -> Jet:
    """Exterior derivative of a one-form as the matrix ``d_i w_j - d_j w_i``."""
    D = form.grad()
    return D - D.transpose(1, 0, 2)


def wedge(a: Jet, b: Jet) -> Jet:
    A = a[:, None] * b[None, :]
    return A - A.transpose(1, 0, 2)


def two_form(F: Jet, X: Jet, Y: Jet) -> Jet:
    return (F * X[:, None] * Y[None, :]).sum(axis=(0, 1))


def _det3(M: Sequence[Sequence[Jet]]) -> Jet:
    return (
        M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1])
        - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0])
        + M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])
    )


def _inverse3(M: Sequence[Sequence[Jet]], det: Jet) -> list[list[Jet]]:
    inv_det = det.reciprocal()
    out = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            a, b = [k for k in range(3) if k != j], [k for k in range(3) if k != i]
            minor = M[a[0]][b[0]] * M[a[1]][b[1]] - M[a[0]][b[1]] * M[a[1]][b[0]]
            sign = -1.0 if (i + j) % 2 else 1.0
            out[i][j] = minor * inv_det * sign
    return out


@dataclass(frozen=True)
class Coframe:
    theta: Jet
    theta1: Jet
    theta1bar: Jet
    T: Jet


class Geometry:
    """Jets of a structure's frame data at a batch of points.

    Derived quantities are cached on first use; ``cache`` is shared with the
    curvature and calculus layers so each quantity is computed once.
    """

    def __init__(self, structure: PHStructure, points, order: int = GEOMETRY_ORDER):
        pts = np.asarray(points, dtype=float)
        self.points = pts.reshape(-1, 3)
        self.structure = structure
        self.order = order
        self.cache: dict = {}

    def __len__(self) -> int:
        return len(self.points)

    def field(self, e: Expr, params: Mapping[str, float] | None = None) -> Jet:
        key = ("expr", e, tuple(sorted((params or {}).items())))
        if key not in self.cache:
            merged = {**self.structure.params, **(params or {})}
            self.cache[key] = eval_jet(e, self.points, merged, self.order)
        return self.cache[key]

    def _vector(self, comps) -> Jet:
        return Jet.stack([self.field(c) for c in comps])

    @cached_property
    def theta(self) -> Jet:
        return self._vector(self.structure.theta)

    @cached_property
    def e1(self) -> Jet:
        return self._vector(self.structure.e1)

    @cached_property
    def e2(self) -> Jet:
        return self._vector(self.structure.e2)

    @cached_property
    def dtheta(self) -> Jet:
        return ext_d(self.theta)

    @cached_property
    def T(self) -> Jet:
        F = self.dtheta
        K = Jet.stack([F[1, 2], F[2, 0], F[0, 1]])
        tk = pair(self.theta, K)
        bad = np.abs(tk.value) < _SINGULAR
        if np.any(bad):
            p = self.points[int(np.argmax(bad))]
            raise ContactError(f"contact condition violated at {tuple(float(v) for v in p)}")
        return K * tk.reciprocal()

    @cached_property
    def _coframe_rows(self) -> list[Jet]:
        frame = [self.e1, self.e2, self.T]
        M = [[frame[a][i] for a in range(3)] for i in range(3)]  # M[i][a]: component i of frame a
        det = _det3(M)
        bad = np.abs(det.value) < _SINGULAR
        if np.any(bad):
            p = self.points[int(np.argmax(bad))]
            raise FrameDegenerate(f"frame degenerate at {tuple(float(v) for v in p)}")
        inv = _inverse3(M, det)
        return [Jet.stack(inv[a]) for a in range(3)]

    @cached_property
    def omega1(self) -> Jet:
        return self._coframe_rows[0]

    @cached_property
    def omega2(self) -> Jet:
        return self._coframe_rows[1]

    @cached_property
    def theta_dual(self) -> Jet:
        """Third dual form of ``(e1, e2, T)``; equals ``theta`` for a valid structure."""
        return self._coframe_rows[2]

    @cached_property
    def theta1(self) -> Jet:
        return self.omega1 + self.omega2 * 1j

    @cached_property
    def Z1(self) -> Jet:
        return (self.e1 - self.e2 * 1j) * 0.5

    @cached_property
    def Z1bar(self) -> Jet:
        return (self.e1 + self.e2 * 1j) * 0.5

    def coframe(self) -> Coframe:
        return Coframe(self.theta, self.theta1, self.theta1.conj(), self.T)

    def direction(self, name: str) -> Jet:
        """Frame vector by index label: '1', '1b', '0' (complex) or 'e1', 'e2'."""
        return {"1": self.Z1, "1b": self.Z1bar, "0": self.T, "e1": self.e1, "e2": self.e2, "T": self.T}[name]


def reeb(s: PHStructure, p, order: int = GEOMETRY_ORDER) -> Jet:
    return Geometry(s, p, order).T


def coframe(s: PHStructure, p, order: int = GEOMETRY_ORDER) -> Coframe:
    return Geometry(s, p, order).coframe()


def validate(s: PHStructure, samples: SampleSet | np.ndarray, tol: float = VALIDATION_TOL, fd_points: int = 64) -> Report:
    """Pointwise residuals of the normalization conventions over ``samples``."""
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float).reshape(-1, 3)
    rep = Report(f"validate {s.name}")
    g = Geometry(s, pts, order=2)
    th, e1, e2 = g.theta, g.e1, g.e2
    rep.add(residual_check("theta(e1)", "theta(e1) = 0", pair(th, e1).value, tol, pts))
    rep.add(residual_check("theta(e2)", "theta(e2) = 0", pair(th, e2).value, tol, pts))
    norm = two_form(g.dtheta, e1, e2).value
    worst = int(np.argmax(np.abs(norm - 2)))
    rep.add(
        residual_check(
            "normalization",
            "dtheta(e1, e2) = 2",
            norm - 2,
            tol,
            pts,
            note=f"expected 2, got {norm[worst]:.12g}",
        )
    )
    try:
        T = g.T
        rows = g._coframe_rows
    except (ContactError, FrameDegenerate) as exc:
        rep.flags["error"] = str(exc)
        rep.add(residual_check("frame", "e1, e2, T independent", np.array([np.inf]), tol, None, note=str(exc)))
        return rep
    levi = (two_form(g.dtheta, g.Z1, g.Z1bar) * -1j).value
    rep.add(residual_check("levi_form", "h11bar = -i dtheta(Z1, Z1bar) = 1", levi - 1, tol, pts))
    rep.add(residual_check("reeb_theta", "theta(T) = 1", pair(th, T).value - 1, tol, pts))
    rep.add(residual_check("reeb_kernel", "dtheta(T, .) = 0", (g.dtheta * T[:, None]).sum(axis=0).value, tol, pts))
    t1 = g.theta1
    dual = np.stack(
        [
            pair(t1, g.Z1).value - 1,
            pair(t1, g.Z1bar).value,
            pair(t1, T).value,
            np.abs((rows[2] - th).value).max(axis=0),
        ]
    )
    rep.add(residual_check("coframe_duality", "theta1(Z1) = 1, theta1(Z1bar) = theta1(T) = 0", dual, tol, pts))
    levi_eq = g.dtheta - wedge(t1, t1.conj()) * 1j
    rep.add(residual_check("dtheta_structure", "dtheta = i theta1 ^ theta1bar", levi_eq.value, tol, pts))
    vol = pair(th, e1) * two_form(g.dtheta, e2, T) - pair(th, e2) * two_form(g.dtheta, e1, T) + pair(th, T) * two_form(g.dtheta, e1, e2)
    rep.add(residual_check("volume", "(theta ^ dtheta)(e1, e2, T) = 2", vol.value - 2, tol, pts))
    if fd_points:
        fd_pts = pts[:fd_points]
        fd = [fd_check(c, fd_pts, s.params, order=2) for c in s.expressions()]
        rep.add(residual_check("fd_oracle", "jet derivatives = finite differences", np.array(fd), FD_TOL, None))
    return rep
