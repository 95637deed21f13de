"""Critical set of a soliton potential and the resulting diffeomorphism-type report.

The potential is scanned on a regular grid, nodes with ``|grad phi| < eps``
in the adapted metric are grouped into 26-connected components, and each
component gets a dimension from local PCA and a topology tag.  The tags feed
a decision table with three cases, keyed on the number of critical curves:

* (i) no curves: R^3, T^2 x R or S^1 x R^2;
* (ii) one curve: R^3 (a line, cylinder leaves) or T^2 x [0, inf) with the
  boundary torus collapsed to a circle (a closed curve, torus leaves);
* (iii) two curves: S^2 x R (two lines) or S^3 / L(p, q) (two closed curves;
  S^2 x S^1 is ruled out by a parity constraint on the first Betti number).

The classification is only as good as the declared hypotheses of the model
(completeness, vanishing torsion), which a single chart cannot certify.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..exprjet.expr import variables
from ..parallel import map_points
from ..soliton import SolitonCandidate, check_pseudo_gradient
from ..structure import Geometry, apply, halton

GRID_NODES = 65
CRITICAL_EPS = 1e-3
PCA_GAP = 10.0
BOUNDARY_CELLS = 2
PCA_RADIUS_CELLS = 2.5
GRID_CHUNK = 4096

CASE_TYPES = {
    "i": ("R^3", "T^2 x R", "S^1 x R^2"),
    "ii": ("R^3", "T^2 x [0,inf) with T^2 x {0} collapsing to S^1"),
    "iii": ("S^2 x R", "S^3", "L(p,q)"),
}
CAVEAT = "hypotheses declared, not verified: completeness and vanishing torsion are taken from the model declaration"


@dataclass
class CriticalComponent:
    points: np.ndarray  # (m, 3) chart coordinates of member nodes
    dimension: int | None  # None when the PCA gap is ambiguous
    tag: str  # line, circle, plane, cylinder, torus or unknown
    eps: float
    boundary_touching: bool
    excluded: bool  # lies entirely in the boundary layer of the grid

    def to_dict(self) -> dict:
        return {
            "nodes": int(len(self.points)),
            "dimension": self.dimension,
            "tag": self.tag,
            "eps": self.eps,
            "boundary_touching": self.boundary_touching,
            "excluded": self.excluded,
            "extent": [[float(self.points[:, i].min()), float(self.points[:, i].max())] for i in range(3)],
        }


@dataclass
class DiffeoReport:
    curves: int
    surfaces: bool
    leaf_tag: str
    case: str | None
    candidates: tuple[str, ...]
    concluded: str
    notes: list[str] = field(default_factory=list)
    caveat: str = CAVEAT

    def to_dict(self) -> dict:
        return {
            "curves": self.curves,
            "surfaces": self.surfaces,
            "leaf_tag": self.leaf_tag,
            "case": self.case,
            "candidates": list(self.candidates),
            "concluded": self.concluded,
            "notes": list(self.notes),
            "caveat": self.caveat,
        }


# grid scan -------------------------------------------------------------------


def grid_axes(box, nodes: int = GRID_NODES) -> list[np.ndarray]:
    return [np.linspace(lo, hi, nodes) for lo, hi in box]


def gradient_norm_grid(c: SolitonCandidate, nodes: int = GRID_NODES, lam: float = 1.0) -> tuple[list[np.ndarray], np.ndarray]:
    """``|grad phi|`` in ``h^lambda`` on a ``nodes^3`` grid over the chart's box."""
    axes = grid_axes(c.structure.chart.box, nodes)
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def fn(chunk):
        g = Geometry(c.structure, chunk, 2)
        phi = g.field(c.potential)
        d1, d2, d3 = apply(g.e1, phi).value, apply(g.e2, phi).value, lam * apply(g.T, phi).value
        return {"norm": np.sqrt(d1 * d1 + d2 * d2 + d3 * d3)}

    norm = map_points(fn, pts, GRID_CHUNK)["norm"]
    return axes, norm.reshape((nodes,) * 3)


# component analysis ---------------------------------------------------------


def local_dimension(cloud: np.ndarray, radius: float) -> np.ndarray:
    """Per-point PCA dimension of a point cloud; -1 where no eigenvalue gap reaches ``PCA_GAP``."""
    out = np.empty(len(cloud), dtype=int)
    for i, p in enumerate(cloud):
        nb = cloud[np.linalg.norm(cloud - p, axis=1) <= radius]
        if len(nb) < 2:
            out[i] = 0
            continue
        ev = np.sort(np.linalg.eigvalsh(np.cov(nb.T, bias=True)))[::-1]
        floor = 1e-12 * max(ev[0], 1e-300)
        ev = np.maximum(ev, floor)
        if ev[0] / ev[1] >= PCA_GAP:
            out[i] = 1
        elif ev[1] / ev[2] >= PCA_GAP:
            out[i] = 2
        else:
            out[i] = -1
    return out


def _dimension(local: np.ndarray) -> int | None:
    vals, counts = np.unique(local, return_counts=True)
    best = vals[counts == counts.max()]
    if len(best) != 1 or best[0] < 0:
        return None
    return int(best[0])


def _boundary_mask(shape, cells: int) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for ax in range(3):
        sl = [slice(None)] * 3
        sl[ax] = slice(0, cells + 1)
        mask[tuple(sl)] = True
        sl[ax] = slice(shape[ax] - cells - 1, None)
        mask[tuple(sl)] = True
    return mask


def _tag(dim: int | None, member: np.ndarray, boundary: np.ndarray, cloud: np.ndarray) -> str:
    structure = np.ones((3, 3, 3), dtype=bool)
    touching = member & boundary
    if dim == 1:
        if touching.any():
            # a curve crossing the chart leaves it through two separate places
            _, exits = ndimage.label(touching, structure)
            return "line" if exits >= 2 else "unknown"
        # interior curve: closed when no member is an endpoint
        idx = np.argwhere(member)
        counts = ndimage.convolve(member.astype(int), structure.astype(int), mode="constant")[member] - 1
        return "circle" if len(idx) >= 4 and counts.min() >= 2 else "unknown"
    if dim == 2:
        if not touching.any():
            return "torus"
        ev = np.sort(np.linalg.eigvalsh(np.cov(cloud.T, bias=True)))
        flat = ev[0] <= 1e-12 * max(ev[-1], 1e-300)
        return "plane" if flat else "cylinder"
    return "unknown"


def find_components(axes, norm: np.ndarray, eps: float) -> list[CriticalComponent]:
    mask = norm < eps
    labels, count = ndimage.label(mask, np.ones((3, 3, 3), dtype=bool))
    boundary = _boundary_mask(mask.shape, BOUNDARY_CELLS)
    spacing = max(a[1] - a[0] for a in axes)
    comps = []
    for k in range(1, count + 1):
        member = labels == k
        idx = np.argwhere(member)
        cloud = np.stack([axes[i][idx[:, i]] for i in range(3)], axis=1)
        dim = _dimension(local_dimension(cloud, PCA_RADIUS_CELLS * spacing))
        touching = bool((member & boundary).any())
        excluded = bool(member[boundary].sum() == member.sum())
        comps.append(CriticalComponent(cloud, dim, _tag(dim, member, boundary, cloud), eps, touching, excluded))
    return comps


# decision table --------------------------------------------------------------


def classify(components: list[CriticalComponent]) -> DiffeoReport:
    counted = [c for c in components if not c.excluded]
    notes = []
    if len(counted) < len(components):
        notes.append(f"{len(components) - len(counted)} component(s) inside the boundary layer were not counted")
    if any(c.dimension not in (1, 2) or c.tag == "unknown" for c in counted):
        notes.append("a component has ambiguous dimension or topology")
        curves = sum(1 for c in counted if c.dimension == 1)
        return DiffeoReport(curves, any(c.dimension == 2 for c in counted), "unknown", None, (), "undetermined", notes)
    curves = [c for c in counted if c.dimension == 1]
    surfaces = [c for c in counted if c.dimension == 2]
    n = len(curves)
    if n == 0:
        tags = {c.tag for c in surfaces}
        if not surfaces:
            notes.append("empty critical set: the regular leaves decide between the listed types")
            return DiffeoReport(0, False, "unknown", "i", CASE_TYPES["i"], "undetermined", notes)
        by_tag = {"plane": "R^3", "cylinder": "S^1 x R^2", "torus": "T^2 x R"}
        if len(tags) == 1:
            tag = tags.pop()
            return DiffeoReport(0, True, tag, "i", CASE_TYPES["i"], by_tag[tag], notes)
        notes.append("critical surfaces of different types")
        return DiffeoReport(0, True, "unknown", "i", CASE_TYPES["i"], "undetermined", notes)
    if n == 1:
        tag = curves[0].tag
        if tag == "line":
            return DiffeoReport(1, bool(surfaces), "cylinder", "ii", CASE_TYPES["ii"], "R^3", notes)
        return DiffeoReport(1, bool(surfaces), "torus", "ii", CASE_TYPES["ii"], CASE_TYPES["ii"][1], notes)
    if n == 2:
        tags = sorted(c.tag for c in curves)
        if tags == ["line", "line"]:
            return DiffeoReport(2, bool(surfaces), "cylinder", "iii", CASE_TYPES["iii"], "S^2 x R", notes)
        if tags == ["circle", "circle"]:
            notes.append("S^2 x S^1 excluded by the first Betti number rule; S^3 and L(p,q) are not distinguished")
            return DiffeoReport(2, bool(surfaces), "torus", "iii", ("S^3", "L(p,q)"), "undetermined", notes)
        notes.append("a line and a closed curve cannot bound the same family of tubes")
        return DiffeoReport(2, bool(surfaces), "unknown", "iii", CASE_TYPES["iii"], "undetermined", notes)
    notes.append(f"{n} critical curves exceed the bound of two for complete torsion-free solitons: hypotheses fail or the grid is too coarse")
    return DiffeoReport(n, bool(surfaces), "unknown", None, (), "undetermined", notes)


@dataclass
class CriticalSetResult:
    components: list[CriticalComponent]
    report: DiffeoReport
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "components": [c.to_dict() for c in self.components],
            "diffeo": self.report.to_dict(),
            "flags": dict(self.flags),
        }


def critical_set(
    c: SolitonCandidate, nodes: int = GRID_NODES, eps: float = CRITICAL_EPS, hypotheses: dict | None = None, seed: int = 7
) -> CriticalSetResult:
    """Scan for ``|grad phi| < eps``, group the critical nodes and classify."""
    if c.kind != "gradient":
        raise ValueError("the critical-set analysis needs a pseudo-gradient candidate")
    flags: dict = {}
    hyp = dict(hypotheses or {})
    missing = [h for h in ("complete", "vanishing_torsion") if not hyp.get(h, False)]
    if missing:
        flags["hypotheses"] = "not declared: " + ", ".join(missing)
    pre = check_pseudo_gradient(c, halton(c.structure.chart, 64, seed).points)
    if not pre.passed:
        flags["precondition"] = "candidate fails the pseudo-gradient soliton equations"
        return CriticalSetResult([], DiffeoReport(0, False, "unknown", None, (), "undetermined", ["precondition failed"]), flags)
    axes, norm = gradient_norm_grid(c, nodes)
    if not variables(c.potential) or np.all(norm < eps):
        flags["trivial"] = "trivial soliton, classification inapplicable"
        return CriticalSetResult([], DiffeoReport(0, False, "unknown", None, (), "undetermined", ["trivial soliton"]), flags)
    comps = find_components(axes, norm, eps)
    report = classify(comps)
    if missing:
        report.notes.append("declared hypotheses incomplete: " + ", ".join(missing))
        report.concluded = "undetermined"
    return CriticalSetResult(comps, report, flags)
