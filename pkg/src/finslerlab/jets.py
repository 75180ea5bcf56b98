"""Truncated multivariate Taylor (jet) arithmetic.

A jet stores the Taylor coefficients f_alpha = (d^alpha f)/alpha! of a scalar
function at a base point, for every multi-index alpha of total degree <= order
over a fixed number of variables.  Storing normalized coefficients makes the
truncated product a plain convolution over multi-indices; raw partial
derivatives are recovered by multiplying with alpha!.

All jets are immutable values and every operation is pure, so evaluation at
many points can run in parallel without shared state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, OrderExceeded

Scalar = Union[float, "Jet"]

DEFAULT_MAX_ORDER = 6
_max_order = DEFAULT_MAX_ORDER


def set_max_jet_order(order: int) -> None:
    """Set the cap on truncation orders the engine may allocate (4..8)."""
    global _max_order
    if not 1 <= order <= 8:
        raise ValueError(f"max jet order must be in 1..8, got {order}")
    _max_order = order


def get_max_jet_order() -> int:
    return _max_order


@dataclass(frozen=True)
class ChartPoint:
    """A point of the slit tangent bundle in one chart: base coordinates x and fiber coordinates y != 0."""

    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same length")
        if math.sqrt(sum(v * v for v in self.y)) < 1e-8:
            raise DomainError("fiber coordinate y is (numerically) zero")

    @property
    def dim(self) -> int:
        return len(self.x)

    @property
    def coords(self) -> tuple:
        return self.x + self.y

    def scaled_fiber(self, lam: float) -> "ChartPoint":
        return ChartPoint(self.x, tuple(lam * v for v in self.y))


def _enumerate_exponents(nvars: int, order: int) -> np.ndarray:
    """Multi-indices of total degree <= order, graded by degree then lexicographic.

    The graded ordering guarantees that the table for a lower order is a
    prefix of the table for any higher order, so truncation is a slice.
    """
    rows = []
    for deg in range(order + 1):
        stack = [((), deg)]
        level = []

        def rec(prefix, remaining, slots):
            if slots == 1:
                level.append(prefix + (remaining,))
                return
            for k in range(remaining, -1, -1):
                rec(prefix + (k,), remaining - k, slots - 1)

        rec((), deg, nvars)
        rows.extend(level)
    return np.array(rows, dtype=np.int64)


class JetSpace:
    """Shared tables (index enumeration, product and derivative maps) for jets of one (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.exponents = _enumerate_exponents(nvars, order)
        self.size = len(self.exponents)
        self.index_of = {tuple(row): i for i, row in enumerate(self.exponents)}
        self.degrees = self.exponents.sum(axis=1)
        self._mul = None
        self._deriv = {}

    def _mul_table(self):
        if self._mul is None:
            ii, jj, kk = [], [], []
            for i, a in enumerate(self.exponents):
                da = self.degrees[i]
                for j, b in enumerate(self.exponents):
                    if da + self.degrees[j] > self.order:
                        continue
                    k = self.index_of[tuple(a + b)]
                    ii.append(i)
                    jj.append(j)
                    kk.append(k)
            self._mul = (
                np.array(ii, dtype=np.int64),
                np.array(jj, dtype=np.int64),
                np.array(kk, dtype=np.int64),
            )
        return self._mul

    def _deriv_table(self, var: int):
        if var not in self._deriv:
            src, dst, fac = [], [], []
            lower = jet_space(self.nvars, self.order - 1)
            for i, a in enumerate(self.exponents):
                if a[var] == 0:
                    continue
                b = a.copy()
                b[var] -= 1
                if b.sum() > lower.order:
                    continue
                src.append(i)
                dst.append(lower.index_of[tuple(b)])
                fac.append(float(a[var]))
            self._deriv[var] = (
                np.array(src, dtype=np.int64),
                np.array(dst, dtype=np.int64),
                np.array(fac, dtype=np.float64),
            )
        return self._deriv[var]


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    if order < 0:
        raise OrderExceeded("negative truncation order")
    if order > _max_order:
        raise OrderExceeded(
            f"requested jet order {order} exceeds the configured maximum {_max_order}"
        )
    return JetSpace(nvars, order)


class Jet:
    """A truncated Taylor expansion.  Supports +, -, *, /, ** with jets and floats."""

    __slots__ = ("space", "coeffs")

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------

    @staticmethod
    def constant(value: float, nvars: int, order: int) -> "Jet":
        sp = jet_space(nvars, order)
        c = np.zeros(sp.size)
        c[0] = value
        return Jet(sp, c)

    @staticmethod
    def variable(value: float, var: int, nvars: int, order: int) -> "Jet":
        if order < 1:
            raise OrderExceeded("coordinate jets need order >= 1")
        sp = jet_space(nvars, order)
        c = np.zeros(sp.size)
        c[0] = value
        c[1 + var] = 1.0  # degree-1 block follows the constant slot in graded order
        return Jet(sp, c)

    # -- basic queries -------------------------------------------------

    @property
    def value(self) -> float:
        return float(self.coeffs[0])

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def nvars(self) -> int:
        return self.space.nvars

    def coefficient(self, alpha: Sequence[int]) -> float:
        idx = self.space.index_of.get(tuple(alpha))
        if idx is None:
            raise OrderExceeded(f"multi-index {tuple(alpha)} exceeds order {self.order}")
        return float(self.coeffs[idx])

    def partial(self, alpha: Sequence[int]) -> float:
        """Raw partial derivative d^alpha f at the base point (= coefficient * alpha!)."""
        alpha = tuple(int(a) for a in alpha)
        fac = 1.0
        for a in alpha:
            fac *= math.factorial(a)
        return self.coefficient(alpha) * fac

    def gradient(self) -> np.ndarray:
        """First partial derivatives with respect to every variable."""
        return self.coeffs[1 : 1 + self.nvars].copy()

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        sp = jet_space(self.nvars, order)
        return Jet(sp, self.coeffs[: sp.size].copy())

    def derivative(self, var: int) -> "Jet":
        """Exact jet of the partial derivative with respect to variable `var`, one order lower."""
        if self.order < 1:
            raise OrderExceeded("cannot differentiate an order-0 jet")
        src, dst, fac = self.space._deriv_table(var)
        lower = jet_space(self.nvars, self.order - 1)
        out = np.zeros(lower.size)
        out[dst] = self.coeffs[src] * fac
        return Jet(lower, out)

    # -- arithmetic ----------------------------------------------------

    def _align(self, other: Scalar):
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different variable counts")
            r = min(self.order, other.order)
            return self.truncate(r), other.truncate(r)
        return self, None

    def __add__(self, other: Scalar) -> "Jet":
        a, b = self._align(other)
        if b is None:
            c = a.coeffs.copy()
            c[0] += float(other)
            return Jet(a.space, c)
        return Jet(a.space, a.coeffs + b.coeffs)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.space, -self.coeffs)

    def __sub__(self, other: Scalar) -> "Jet":
        return self + (-other if isinstance(other, Jet) else -float(other))

    def __rsub__(self, other: float) -> "Jet":
        return (-self) + float(other)

    def __mul__(self, other: Scalar) -> "Jet":
        a, b = self._align(other)
        if b is None:
            return Jet(a.space, a.coeffs * float(other))
        ii, jj, kk = a.space._mul_table()
        out = np.bincount(kk, weights=a.coeffs[ii] * b.coeffs[jj], minlength=a.space.size)
        return Jet(a.space, out)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        v = float(other)
        if v == 0.0:
            raise DomainError("division by zero")
        return self * (1.0 / v)

    def __rtruediv__(self, other: float) -> "Jet":
        return self.reciprocal() * float(other)

    def __pow__(self, p) -> "Jet":
        if isinstance(p, int) or (isinstance(p, float) and p.is_integer()):
            k = int(p)
            if k < 0:
                return self.reciprocal() ** (-k)
            out = Jet.constant(1.0, self.nvars, self.order)
            base = self
            while k:
                if k & 1:
                    out = out * base
                base = base * base if k > 1 else base
                k >>= 1
            return out
        return power(self, float(p))

    # -- composition with univariate series -----------------------------

    def _compose(self, series: np.ndarray) -> "Jet":
        """Evaluate sum_k series[k] * (self - value)^k by Horner; exact at this order."""
        tilde = self - self.value
        out = Jet.constant(float(series[-1]), self.nvars, self.order)
        for k in range(len(series) - 2, -1, -1):
            out = out * tilde + float(series[k])
        return out

    def reciprocal(self) -> "Jet":
        v = self.value
        if v == 0.0:
            raise DomainError("division by a jet with zero value part")
        series = np.array([(-1.0) ** k * v ** (-1 - k) for k in range(self.order + 1)])
        return self._compose(series)

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, order={self.order}, value={self.value:.6g})"


# -- scalar-generic math helpers (work on floats and jets alike) --------


def sqrt(a: Scalar) -> Scalar:
    if isinstance(a, Jet):
        v = a.value
        if v <= 0.0:
            raise DomainError("sqrt of a jet with nonpositive value part")
        series = np.empty(a.order + 1)
        series[0] = math.sqrt(v)
        coef = 0.5
        for k in range(1, a.order + 1):
            series[k] = series[k - 1] * coef / (k * v)
            coef -= 1.0
        # series[k] = binom(1/2, k) v^{1/2-k}
        return a._compose(series)
    if a <= 0.0:
        raise DomainError("sqrt of nonpositive number")
    return math.sqrt(a)


def exp(a: Scalar) -> Scalar:
    if isinstance(a, Jet):
        e = math.exp(a.value)
        series = np.array([e / math.factorial(k) for k in range(a.order + 1)])
        return a._compose(series)
    return math.exp(a)


def log(a: Scalar) -> Scalar:
    if isinstance(a, Jet):
        v = a.value
        if v <= 0.0:
            raise DomainError("log of a jet with nonpositive value part")
        series = np.empty(a.order + 1)
        series[0] = math.log(v)
        for k in range(1, a.order + 1):
            series[k] = (-1.0) ** (k + 1) / (k * v**k)
        return a._compose(series)
    if a <= 0.0:
        raise DomainError("log of nonpositive number")
    return math.log(a)


def power(a: Scalar, p: float) -> Scalar:
    if isinstance(a, Jet):
        v = a.value
        if v <= 0.0:
            raise DomainError("fractional power of a jet with nonpositive value part")
        series = np.empty(a.order + 1)
        series[0] = v**p
        coef = p
        for k in range(1, a.order + 1):
            series[k] = series[k - 1] * coef / (k * v)
            coef -= 1.0
        return a._compose(series)
    return float(a) ** p


def jet_arith(a: Jet, b, op: str) -> Jet:
    """Named dispatch over the supported binary/unary jet operations."""
    ops: dict[str, Callable] = {
        "add": lambda: a + b,
        "sub": lambda: a - b,
        "mul": lambda: a * b,
        "div": lambda: a / b,
        "pow": lambda: a**b,
        "sqrt": lambda: sqrt(a),
        "exp": lambda: exp(a),
        "log": lambda: log(a),
    }
    if op not in ops:
        raise ValueError(f"unknown op {op!r}")
    return ops[op]()


def seed_coordinates(p: ChartPoint, order: int) -> list:
    """Coordinate functions (x^1..x^n, y^1..y^n) as jets at p."""
    if order < 1:
        raise OrderExceeded("seed_coordinates needs order >= 1")
    n2 = 2 * p.dim
    return [Jet.variable(v, i, n2, order) for i, v in enumerate(p.coords)]


def partial(a: Jet, alpha: Iterable[int]) -> float:
    return a.partial(tuple(alpha))
