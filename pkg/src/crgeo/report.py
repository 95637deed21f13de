"""Residual checks and reports shared by all verification modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class Check:
    """One verified identity: max residual over samples against a tolerance."""

    name: str
    identity: str
    residual: float
    tolerance: float
    samples: int
    worst_point: tuple[float, ...] | None = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "name": self.name,
            "identity": self.identity,
            "residual": float(self.residual),
            "tolerance": float(self.tolerance),
            "pass": self.passed,
            "samples": int(self.samples),
        }
        if self.worst_point is not None:
            d["worst_point"] = [float(v) for v in self.worst_point]
        if self.note:
            d["note"] = self.note
        return d


def residual_check(name: str, identity: str, values, tolerance: float, points=None, note: str = "") -> Check:
    """Build a :class:`Check` from pointwise residuals (any shape, last axis = samples)."""
    r = np.abs(np.asarray(values))
    if r.ndim == 0:
        r = r.reshape(1)
    per_point = r.reshape(-1, r.shape[-1]).max(axis=0) if r.ndim > 1 else r
    if np.any(~np.isfinite(per_point)):
        k = int(np.flatnonzero(~np.isfinite(per_point))[0])
        worst = float("inf")
    else:
        k = int(np.argmax(per_point))
        worst = float(per_point[k])
    wp = None
    if points is not None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(pts) == len(per_point):
            wp = tuple(float(v) for v in pts[k])
    return Check(name, identity, worst, tolerance, len(per_point), wp, note)


@dataclass
class Report:
    """An ordered collection of checks plus free-form numeric results."""

    title: str
    checks: list[Check] = field(default_factory=list)
    values: dict[str, Any] = field(default_factory=dict)
    flags: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.identity, c.residual, c.tolerance, c.samples, c.worst_point, c.note))
        for k, v in other.values.items():
            self.values[prefix + k] = v
        for k, v in other.flags.items():
            self.flags[prefix + k] = v

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "pass": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "values": jsonable(self.values),
            "flags": jsonable(self.flags),
        }

    def summary(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            lines.append(f"  [{mark}] {c.name:<40} {c.residual:10.3e} <= {c.tolerance:.0e}")
        return "\n".join(lines)


def jsonable(obj):
    """Convert numpy scalars/arrays and complex numbers into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
