"""Built-in model spaces and the model declaration file format.

A model file is an INI-style document::

    [chart]
    coords = x,y,t
    box = -2,2,-2,2,-2,2
    margin = 1e-3

    [params]
    mu = 1.0

    [contact]
    theta = "-y","x","1"

    [frame]
    e1 = "1","0","y"
    e2 = "0","1","-x"

    [potential]
    kind = gradient
    expr = "mu*(x^2+y^2)"

    [hypotheses]
    complete = true
    vanishing_torsion = true

An optional ``[derived]`` section records constants that were computed
rather than declared (for example the sphere's Webster curvature).
"""

from __future__ import annotations

import configparser
import csv
import io
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping

from .exprjet import Expr, ExprError, parse_expr, to_source
from .report import Report
from .soliton import SolitonCandidate
from .structure import Chart, PHStructure, halton, validate
from .curvature import rescaled_structure

VALIDATION_SAMPLES = 256
HYPOTHESES = ("complete", "closed", "vanishing_torsion")
KINDS = ("gradient", "contact")

# e^{2g} = 4 / ((1+|z|^2)^2 + 4t^2) turns the Heisenberg form into the standard
# sphere form with W = 2; found by scanning the family b/((1+|z|^2)^2 + b t^2)
# for vanishing torsion and constant W.
SPHERE_FACTOR = "log(2) - 0.5*log((1+x^2+y^2)^2+4*t^2)"
SPHERE_W = 2.0


class ModelError(ValueError):
    """Raised when a model cannot be built, parsed or validated."""


@dataclass(frozen=True)
class ModelDecl:
    name: str
    structure: PHStructure
    potential: Expr | None = None
    kind: str | None = None
    hypotheses: Mapping[str, bool] = field(default_factory=dict)
    derived: Mapping[str, str] = field(default_factory=dict)

    @property
    def params(self) -> dict[str, float]:
        return dict(self.structure.params)

    @property
    def chart(self) -> Chart:
        return self.structure.chart

    def with_params(self, **params: float) -> "ModelDecl":
        return replace(self, structure=self.structure.with_params(**params))

    def candidate(self) -> SolitonCandidate:
        if self.potential is None or self.kind is None:
            raise ModelError(f"model {self.name} declares no potential")
        if "mu" not in self.structure.params:
            raise ModelError(f"model {self.name} needs a parameter mu")
        return SolitonCandidate(self.structure, self.potential, float(self.structure.params["mu"]), self.kind)

    def identity(self) -> dict:
        d = self.structure.describe()
        d["name"] = self.name
        if self.potential is not None:
            d["potential"] = {"kind": self.kind, "expr": to_source(self.potential)}
        d["hypotheses"] = dict(sorted(self.hypotheses.items()))
        return d


# built-ins -----------------------------------------------------------------

COORDS = ("x", "y", "t")


def _chart(name: str) -> Chart:
    return Chart(COORDS, ((-2.0, 2.0),) * 3, margin=1e-3, name=name)


def _exprs(sources, params=()) -> tuple[Expr, ...]:
    return tuple(parse_expr(s, COORDS, params) for s in sources)


def _heisenberg_structure(params: Mapping[str, float] | None = None, name: str = "heisenberg") -> PHStructure:
    return PHStructure(
        _chart(name),
        _exprs(("-y", "x", "1")),
        _exprs(("1", "0", "y")),
        _exprs(("0", "1", "-x")),
        dict(params or {}),
        name,
    )


def _need_mu(params: Mapping[str, float], name: str) -> dict[str, float]:
    if "mu" not in params:
        raise ModelError(f"model {name} needs parameter mu")
    return {"mu": float(params["mu"])}


def _sphere_structure() -> PHStructure:
    g = parse_expr(SPHERE_FACTOR, COORDS)
    s = rescaled_structure(_heisenberg_structure(name="cr_sphere"), g)
    return replace(s, name="cr_sphere", chart=_chart("cr_sphere"))


_FLAT = {"complete": True, "closed": False, "vanishing_torsion": True}
_SPHERE = {"complete": True, "closed": True, "vanishing_torsion": True}


def builtin(name: str, params: Mapping[str, float] | None = None) -> ModelDecl:
    """Return a built-in model; ``heisenberg_gaussian`` and ``heisenberg_contact`` need ``mu``."""
    params = dict(params or {})
    if name == "heisenberg":
        return ModelDecl(name, _heisenberg_structure(name=name), hypotheses=_FLAT)
    if name == "heisenberg_gaussian":
        mu = _need_mu(params, name)
        pot = parse_expr("mu*(x^2+y^2)", COORDS, ("mu",))
        return ModelDecl(name, _heisenberg_structure(mu, name), pot, "gradient", _FLAT)
    if name == "heisenberg_contact":
        mu = _need_mu(params, name)
        pot = parse_expr("2*mu*t", COORDS, ("mu",))
        return ModelDecl(name, _heisenberg_structure(mu, name), pot, "contact", _FLAT)
    derived = {"conformal_factor": SPHERE_FACTOR, "W": repr(SPHERE_W)}
    if name == "cr_sphere":
        return ModelDecl(name, _sphere_structure(), hypotheses=_SPHERE, derived=derived)
    if name == "cr_sphere_trivial":
        s = replace(_sphere_structure(), params={"mu": SPHERE_W}, name=name)
        return ModelDecl(name, s, parse_expr("1", COORDS), "gradient", _SPHERE, derived)
    raise ModelError(f"unknown model {name!r}; choose from {', '.join(BUILTINS)}")


BUILTINS = ("heisenberg", "heisenberg_gaussian", "heisenberg_contact", "cr_sphere", "cr_sphere_trivial")


# model files -----------------------------------------------------------------


def _split(value: str) -> list[str]:
    row = next(csv.reader(io.StringIO(value), skipinitialspace=True), [])
    return [v.strip() for v in row]


def _quote(sources) -> str:
    return ",".join('"' + s.replace('"', '""') + '"' for s in sources)


def _floats(section: str, key: str, value: str, count: int | None = None) -> list[float]:
    try:
        out = [float(v) for v in _split(value)]
    except ValueError:
        raise ModelError(f"[{section}] {key}: expected numbers, got {value!r}") from None
    if count is not None and len(out) != count:
        raise ModelError(f"[{section}] {key}: expected {count} numbers, got {len(out)}")
    return out


def _get(cp: configparser.ConfigParser, section: str, key: str) -> str:
    if not cp.has_section(section):
        raise ModelError(f"missing section [{section}]")
    if not cp.has_option(section, key):
        raise ModelError(f"[{section}] missing key {key!r}")
    return cp.get(section, key)


def _parse_vector(cp, section: str, key: str, coords, params) -> tuple[Expr, ...]:
    parts = _split(_get(cp, section, key))
    if len(parts) != 3:
        raise ModelError(f"[{section}] {key}: expected 3 components, got {len(parts)}")
    out = []
    for i, src in enumerate(parts):
        try:
            out.append(parse_expr(src, coords, params))
        except ExprError as exc:
            raise ModelError(f"[{section}] {key} component {i + 1}: {exc}") from None
    return tuple(out)


def _bool(section: str, key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "yes", "1"):
        return True
    if v in ("false", "no", "0"):
        return False
    raise ModelError(f"[{section}] {key}: expected true or false, got {value!r}")


def loads(text: str, name: str = "model", check: bool = True) -> ModelDecl:
    """Parse a model declaration and (by default) validate it on the sampling box."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # parameter names are case sensitive
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ModelError(f"{name}: {exc}") from None

    coords = tuple(_split(_get(cp, "chart", "coords")))
    if len(coords) != 3:
        raise ModelError(f"[chart] coords: expected 3 names, got {len(coords)}")
    b = _floats("chart", "box", _get(cp, "chart", "box"), 6)
    margin = _floats("chart", "margin", cp.get("chart", "margin", fallback="1e-3"), 1)[0]
    label = cp.get("chart", "name", fallback=name).strip()
    try:
        chart = Chart(coords, tuple(zip(b[::2], b[1::2])), margin=margin, name=label)
    except ValueError as exc:
        raise ModelError(f"[chart] {exc}") from None

    params = {}
    if cp.has_section("params"):
        for key, value in cp.items("params"):
            params[key] = _floats("params", key, value, 1)[0]
    pnames = tuple(params)
    theta = _parse_vector(cp, "contact", "theta", coords, pnames)
    e1 = _parse_vector(cp, "frame", "e1", coords, pnames)
    e2 = _parse_vector(cp, "frame", "e2", coords, pnames)
    structure = PHStructure(chart, theta, e1, e2, params, label)

    potential = kind = None
    if cp.has_section("potential"):
        kind = _get(cp, "potential", "kind").strip()
        if kind not in KINDS:
            raise ModelError(f"[potential] kind must be one of {', '.join(KINDS)}, got {kind!r}")
        src = _split(_get(cp, "potential", "expr"))
        if len(src) != 1:
            raise ModelError("[potential] expr: expected a single expression")
        try:
            potential = parse_expr(src[0], coords, pnames)
        except ExprError as exc:
            raise ModelError(f"[potential] expr: {exc}") from None

    hyp = {}
    if cp.has_section("hypotheses"):
        for key, value in cp.items("hypotheses"):
            if key not in HYPOTHESES:
                raise ModelError(f"[hypotheses] unknown flag {key!r}; known flags: {', '.join(HYPOTHESES)}")
            hyp[key] = _bool("hypotheses", key, value)
    derived = {k: _split(v)[0] for k, v in cp.items("derived")} if cp.has_section("derived") else {}
    model = ModelDecl(label, structure, potential, kind, hyp, derived)
    if check:
        check_model(model)
    return model


def load(path: str | Path, check: bool = True) -> ModelDecl:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read model file {p}: {exc.strerror}") from None
    return loads(text, p.stem, check)


def check_model(model: ModelDecl, samples: int = VALIDATION_SAMPLES, seed: int = 7) -> Report:
    """Run structure validation; raise :class:`ModelError` naming the worst failure."""
    rep = validate(model.structure, halton(model.chart, samples, seed))
    if not rep.passed:
        c = rep.failures()[0]
        where = f" at {c.worst_point}" if c.worst_point else ""
        detail = c.note or f"residual {c.residual:.3e} > {c.tolerance:.0e}"
        raise ModelError(f"model {model.name} failed validation: {c.name}: {detail}{where}")
    return rep


def dumps(model: ModelDecl) -> str:
    s = model.structure
    lo_hi = [v for pair in s.chart.box for v in pair]
    lines = [
        "[chart]",
        f"name = {s.chart.name}",
        f"coords = {','.join(s.chart.coords)}",
        f"box = {','.join(repr(float(v)) for v in lo_hi)}",
        f"margin = {s.chart.margin!r}",
    ]
    if s.params:
        lines += ["", "[params]"] + [f"{k} = {float(v)!r}" for k, v in s.params.items()]
    lines += ["", "[contact]", f"theta = {_quote(to_source(c) for c in s.theta)}"]
    lines += ["", "[frame]", f"e1 = {_quote(to_source(c) for c in s.e1)}", f"e2 = {_quote(to_source(c) for c in s.e2)}"]
    if model.potential is not None:
        lines += ["", "[potential]", f"kind = {model.kind}", f"expr = {_quote([to_source(model.potential)])}"]
    if model.hypotheses:
        lines += ["", "[hypotheses]"] + [f"{k} = {str(v).lower()}" for k, v in model.hypotheses.items()]
    if model.derived:
        lines += ["", "[derived]"] + [f"{k} = {_quote([v])}" for k, v in model.derived.items()]
    return "\n".join(lines) + "\n"


def dump(model: ModelDecl, path: str | Path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def shipped(name: str) -> Path:
    """Path of a model file shipped with the package (``heisenberg`` or ``cr_sphere``)."""
    return Path(str(resources.files("crgeo") / "data" / f"{name}.model"))


def resolve(name: str | None = None, path: str | None = None, params: Mapping[str, float] | None = None) -> ModelDecl:
    """Load a model by built-in name or file, applying parameter overrides."""
    params = dict(params or {})
    if path:
        model = load(path)
        return model.with_params(**params) if params else model
    if name is None:
        raise ModelError("no model given")
    model = builtin(name, params)
    extra = {k: v for k, v in params.items() if k not in model.structure.params}
    return model.with_params(**extra) if extra else model
