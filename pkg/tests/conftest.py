import numpy as np
import pytest

from crgeo.exprjet import parse_expr
from crgeo.models import COORDS, builtin
from crgeo.structure import Chart, PHStructure, halton

# a unimodular-frame rescaling of the Heisenberg frame: e1 -> a e1, e2 -> e2 / a
# keeps theta and dtheta(e1, e2) but has nonvanishing torsion
TORSION_A = "(1 + 0.3*sin(t) + 0.2*x*y)"


def exprs(*sources, params=()):
    return tuple(parse_expr(s, COORDS, params) for s in sources)


def torsion_structure() -> PHStructure:
    a = TORSION_A
    chart = Chart(COORDS, ((-1.0, 1.0),) * 3, name="torsion")
    return PHStructure(chart, exprs("-y", "x", "1"), exprs(a, "0", f"{a}*y"), exprs("0", f"1/{a}", f"-x/{a}"), name="torsion")


@pytest.fixture(scope="session")
def heisenberg():
    return builtin("heisenberg").structure


@pytest.fixture(scope="session")
def sphere():
    return builtin("cr_sphere").structure


@pytest.fixture(scope="session")
def torsion():
    return torsion_structure()


@pytest.fixture(scope="session")
def pts32(heisenberg):
    return halton(heisenberg.chart, 32, 7).points


def random_polynomial(rng: np.random.Generator, degree: int = 4, terms: int = 6) -> str:
    """A random polynomial in x, y, t of total degree at most ``degree``."""
    out = []
    for _ in range(terms):
        exps = rng.multinomial(int(rng.integers(0, degree + 1)), [1 / 3] * 3)
        coef = round(float(rng.uniform(-1, 1)), 3)
        mono = "*".join(f"{v}^{k}" for v, k in zip(COORDS, exps) if k) or "1"
        out.append(f"({coef})*{mono}")
    return " + ".join(out)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        ACCEPTANCE_LINES.append(line + (f"  ({detail})" if detail else ""))
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
