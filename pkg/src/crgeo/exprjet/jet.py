"""Truncated Taylor jets in three variables.

A :class:`Jet` of order ``N`` stores the Taylor coefficients ``c_a = D^a f / a!``
for every multi-index ``a`` with ``|a| <= N``.  Coefficients live on the
leading axis of a numpy array, so a single Jet can carry a whole tensor of
jets (extra axes for tensor indices and sample points).  Arithmetic broadcasts
over those trailing axes like ordinary numpy arrays.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

NVARS = 3
DEFAULT_ORDER = 4


class DomainError(ValueError):
    """A function was evaluated outside its domain."""


class InsufficientOrder(ValueError):
    """A derivative was requested beyond the jet's truncation order."""


def n_coeffs(order: int) -> int:
    return math.comb(order + NVARS, NVARS)


@lru_cache(maxsize=None)
def multi_indices(order: int) -> tuple[tuple[int, int, int], ...]:
    # graded ordering: the indices of order M are a prefix of those of order N > M
    out = []
    for deg in range(order + 1):
        for a in range(deg, -1, -1):
            for b in range(deg - a, -1, -1):
                out.append((a, b, deg - a - b))
    return tuple(out)


@lru_cache(maxsize=None)
def _position(order: int) -> dict[tuple[int, int, int], int]:
    return {m: k for k, m in enumerate(multi_indices(order))}


@lru_cache(maxsize=None)
def _product_table(order: int):
    idx = multi_indices(order)
    pos = _position(order)
    triples = []
    for i, a in enumerate(idx):
        for j, b in enumerate(idx):
            s = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
            if sum(s) <= order:
                triples.append((pos[s], i, j))
    triples.sort()
    k, i, j = (np.array(v, dtype=np.intp) for v in zip(*triples))
    starts = np.flatnonzero(np.r_[True, k[1:] != k[:-1]])
    return i, j, starts


@lru_cache(maxsize=None)
def _deriv_table(order: int, var: int):
    pos = _position(order)
    src, fac = [], []
    for m in multi_indices(order - 1):
        up = list(m)
        up[var] += 1
        src.append(pos[tuple(up)])
        fac.append(float(up[var]))
    return np.array(src, dtype=np.intp), np.array(fac)


@lru_cache(maxsize=None)
def _factorials(order: int) -> np.ndarray:
    return np.array([math.prod(math.factorial(k) for k in m) for m in multi_indices(order)], dtype=float)


def _expand(arr: np.ndarray, ndim: int) -> np.ndarray:
    return arr.reshape(arr.shape + (1,) * ndim)


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # numpy broadcasting on the value axes: pad the lower-rank side on the left
    # (just after the coefficient axis)
    da, db = a.ndim, b.ndim
    if da < db:
        a = a.reshape(a.shape[:1] + (1,) * (db - da) + a.shape[1:])
    elif db < da:
        b = b.reshape(b.shape[:1] + (1,) * (da - db) + b.shape[1:])
    return a, b


class Jet:
    """Truncated Taylor polynomial, possibly carrying a tensor of values."""

    __slots__ = ("coeffs", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs: np.ndarray, order: int | None = None):
        coeffs = np.asarray(coeffs)
        if order is None:
            order = next(n for n in range(64) if n_coeffs(n) >= coeffs.shape[0])
        if coeffs.shape[0] != n_coeffs(order):
            raise ValueError(f"order {order} jet needs {n_coeffs(order)} coefficients, got {coeffs.shape[0]}")
        if not np.iscomplexobj(coeffs):
            coeffs = coeffs.astype(float, copy=False)
        self.coeffs = coeffs
        self.order = order

    # construction ---------------------------------------------------------

    @classmethod
    def constant(cls, value, order: int) -> "Jet":
        value = np.asarray(value)
        dtype = complex if np.iscomplexobj(value) else float
        c = np.zeros((n_coeffs(order),) + value.shape, dtype=dtype)
        c[0] = value
        return cls(c, order)

    @classmethod
    def variable(cls, var: int, value, order: int) -> "Jet":
        """The coordinate function ``x_var`` expanded about ``value``."""
        j = cls.constant(value, order)
        if order >= 1:
            j.coeffs[1 + var] = 1.0
        return j

    @staticmethod
    def stack(jets: Sequence["Jet | float"], axis: int = 0) -> "Jet":
        jets_ = [j for j in jets if isinstance(j, Jet)]
        order = min(j.order for j in jets_)
        shape = np.broadcast_shapes(*(j.shape for j in jets_))
        parts = []
        for j in jets:
            if not isinstance(j, Jet):
                j = Jet.constant(np.broadcast_to(np.asarray(j), shape), order)
            c = j.truncate(order).coeffs
            parts.append(np.broadcast_to(c, (c.shape[0],) + shape))
        ax = axis if axis < 0 else axis + 1
        return Jet(np.stack(parts, axis=ax), order)

    # basic properties -----------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coeffs)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"

    def partial(self, alpha: Iterable[int]) -> np.ndarray:
        """The partial derivative ``D^alpha f`` at the base point."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise InsufficientOrder(f"derivative {alpha} exceeds jet order {self.order}")
        k = _position(self.order)[alpha]
        return self.coeffs[k] * _factorials(self.order)[k]

    def derivatives(self) -> dict[tuple[int, int, int], np.ndarray]:
        fac = _factorials(self.order)
        return {m: self.coeffs[k] * fac[k] for k, m in enumerate(multi_indices(self.order))}

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise InsufficientOrder(f"cannot raise jet order {self.order} to {order}")
        if order < 0:
            raise InsufficientOrder("jet order exhausted")
        return Jet(self.coeffs[: n_coeffs(order)], order)

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[(slice(None),) + key], self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a + 1 if a >= 0 else a for a in axis)
        return Jet(self.coeffs.sum(axis=axis), self.order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.coeffs.reshape((self.coeffs.shape[0],) + tuple(shape)), self.order)

    def transpose(self, *axes) -> "Jet":
        return Jet(np.transpose(self.coeffs, (0,) + tuple(a + 1 for a in axes)), self.order)

    # complex parts --------------------------------------------------------

    def conj(self) -> "Jet":
        return Jet(np.conj(self.coeffs), self.order) if self.is_complex else self

    @property
    def real(self) -> "Jet":
        return Jet(self.coeffs.real.copy(), self.order)

    @property
    def imag(self) -> "Jet":
        if not self.is_complex:
            return Jet(np.zeros_like(self.coeffs), self.order)
        return Jet(self.coeffs.imag.copy(), self.order)

    # differentiation ------------------------------------------------------

    def d(self, var: int) -> "Jet":
        """Partial derivative in coordinate ``var``; the order drops by one."""
        if self.order < 1:
            raise InsufficientOrder("cannot differentiate an order-0 jet")
        src, fac = _deriv_table(self.order, var)
        return Jet(self.coeffs[src] * _expand(fac, len(self.shape)), self.order - 1)

    def grad(self) -> "Jet":
        """Coordinate gradient, with the coordinate index as a new leading axis."""
        return Jet.stack([self.d(i) for i in range(NVARS)])

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            a, b = _align(self.truncate(n).coeffs, other.truncate(n).coeffs)
            return Jet(a + b, n)
        other = np.asarray(other)
        c = self.coeffs + np.zeros((), dtype=np.result_type(other))
        c = np.broadcast_to(c, (c.shape[0],) + np.broadcast_shapes(self.shape, other.shape)).copy()
        c[0] = c[0] + other
        return Jet(c, self.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            n = min(self.order, other.order)
            a, b = _align(self.truncate(n).coeffs, other.truncate(n).coeffs)
            i, j, starts = _product_table(n)
            return Jet(np.add.reduceat(a[i] * b[j], starts, axis=0), n)
        other = np.asarray(other)
        return Jet(self.coeffs * other, self.order)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0):
            raise DomainError("division by a jet with zero value")
        series = [(-1) ** k / a0 ** (k + 1) for k in range(self.order + 1)]
        return self.compose_series(series)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other)
        return Jet(self.coeffs / other, self.order)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)):
            return self.ipow(int(n))
        return power(self, float(n))

    def ipow(self, n: int) -> "Jet":
        """Integer power by repeated multiplication."""
        if n < 0:
            return self.reciprocal().ipow(-n)
        if n == 0:
            return Jet.constant(np.ones(self.shape, dtype=self.coeffs.dtype), self.order)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    # composition ----------------------------------------------------------

    def compose_series(self, series: Sequence) -> "Jet":
        """``sum_k series[k] * (self - self.value)**k`` truncated to the jet order.

        ``series[k]`` are the univariate Taylor coefficients of the outer
        function at ``self.value``, broadcast against ``self.shape``.
        """
        h = Jet(self.coeffs.copy(), self.order)
        h.coeffs[0] = 0
        out = Jet.constant(np.broadcast_to(np.asarray(series[self.order]), self.shape), self.order)
        for k in range(self.order - 1, -1, -1):
            out = out * h + series[k]
        return out

    def compose(self, inner: Sequence["Jet"]) -> "Jet":
        """Substitute jets for the three variables.

        ``self`` is read as a polynomial in the displacements from its base
        point; ``inner[i] - inner[i].value`` is plugged in for displacement i.
        The inner values are assumed to equal the base point.
        """
        n = min(j.order for j in inner)
        n = min(n, self.order)
        hs = []
        for j in inner:
            h = j.truncate(n)
            h = Jet(h.coeffs.copy(), n)
            h.coeffs[0] = 0
            hs.append(h)
        powers = [[None] * (n + 1) for _ in range(NVARS)]
        for v in range(NVARS):
            powers[v][0] = 1.0
            for k in range(1, n + 1):
                powers[v][k] = hs[v] if k == 1 else powers[v][k - 1] * hs[v]
        base = self.truncate(n)
        out = Jet.constant(base.coeffs[0], n)
        for k, alpha in enumerate(multi_indices(n)):
            if k == 0:
                continue
            mono = None
            for v, e in enumerate(alpha):
                if e:
                    mono = powers[v][e] if mono is None else mono * powers[v][e]
            out = out + mono * base.coeffs[k]
        return out


# univariate functions --------------------------------------------------


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(x)
    e = np.exp(x.value)
    return x.compose_series([e / math.factorial(k) for k in range(x.order + 1)])


def log(x):
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("log of a nonpositive value")
        return np.log(x)
    a0 = x.value
    if np.iscomplexobj(a0) or np.any(a0 <= 0):
        raise DomainError("log of a nonpositive value")
    series = [np.log(a0)] + [(-1) ** (k + 1) / (k * a0 ** k) for k in range(1, x.order + 1)]
    return x.compose_series(series)


def power(x, r: float):
    """Real power ``x**r``; integral ``r`` uses repeated multiplication."""
    if float(r).is_integer():
        if isinstance(x, Jet):
            return x.ipow(int(r))
        x = np.asarray(x, dtype=float)
        if r < 0 and np.any(x == 0):
            raise DomainError("negative power of zero")
        return x ** int(r)
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError(f"non-integer power {r} of a nonpositive value")
        return x ** r
    a0 = x.value
    if np.iscomplexobj(a0) or np.any(a0 <= 0):
        raise DomainError(f"non-integer power {r} of a nonpositive value")
    series = []
    binom = 1.0
    for k in range(x.order + 1):
        series.append(binom * a0 ** (r - k))
        binom *= (r - k) / (k + 1)
    return x.compose_series(series)


def sqrt(x):
    if not isinstance(x, Jet):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise DomainError("sqrt of a negative value")
        return np.sqrt(x)
    if x.order == 0:
        if np.any(x.value < 0):
            raise DomainError("sqrt of a negative value")
        return Jet.constant(np.sqrt(x.value), 0)
    if np.any(x.value <= 0):
        raise DomainError("sqrt of a nonpositive value (derivatives requested)")
    return power(x, 0.5)


def _trig_series(order, s0, c0, sign):
    # derivatives of sin cycle (s, c, -s, -c); sinh cycles (s, c, s, c)
    cycle = (s0, c0, sign * s0, sign * c0)
    return [cycle[k % 4] / math.factorial(k) for k in range(order + 1)]


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(x)
    a0 = x.value
    return x.compose_series(_trig_series(x.order, np.sin(a0), np.cos(a0), -1))


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(x)
    a0 = x.value
    return x.compose_series(_trig_series(x.order, np.cos(a0), -np.sin(a0), -1))


def sinh(x):
    if not isinstance(x, Jet):
        return np.sinh(x)
    a0 = x.value
    return x.compose_series(_trig_series(x.order, np.sinh(a0), np.cosh(a0), 1))


def cosh(x):
    if not isinstance(x, Jet):
        return np.cosh(x)
    a0 = x.value
    return x.compose_series(_trig_series(x.order, np.cosh(a0), np.sinh(a0), 1))


def tan(x):
    if not isinstance(x, Jet):
        c = np.cos(x)
        if np.any(c == 0):
            raise DomainError("tan at a pole")
        return np.tan(x)
    return sin(x) / cos(x)


def tanh(x):
    if not isinstance(x, Jet):
        return np.tanh(x)
    return sinh(x) / cosh(x)


def atan(x):
    if not isinstance(x, Jet):
        return np.arctan(x)
    a0 = x.value
    n = x.order
    # 1/(1 + (a0+s)^2) as a univariate series, then integrate termwise
    u = [1 + a0 * a0, 2 * a0, np.ones_like(a0)] + [np.zeros_like(a0)] * n
    r = [1 / u[0]]
    for k in range(1, n):
        acc = sum(u[j] * r[k - j] for j in range(1, k + 1))
        r.append(-acc / u[0])
    series = [np.arctan(a0)] + [r[k - 1] / k for k in range(1, n + 1)]
    return x.compose_series(series)


FUNCTIONS = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
    "sinh": sinh,
    "cosh": cosh,
    "tanh": tanh,
    "atan": atan,
}
