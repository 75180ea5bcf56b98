"""Differential forms and vector fields on the slit tangent bundle.

Forms are stored in the coordinate coframe (dx^1..dx^n, dy^1..dy^n), where
wedge products and exterior derivatives are basis-stable; conversion to the
moving coframe happens at evaluation time by pairing with frame vectors.

A FormField's evaluator maps (point, order) to its coefficient jets, so the
exterior derivative is exact: it asks the operand one order deeper and reads
the stored first derivatives.  The same convention powers vector fields and
Lie brackets.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from typing import Callable, Sequence

import numpy as np

from .jets import ChartPoint, Jet
from .linalg import values


# ---------------------------------------------------------------------------
# index tables


@lru_cache(maxsize=None)
def combo_list(nvars: int, k: int):
    return list(combinations(range(nvars), k))


@lru_cache(maxsize=None)
def combo_pos(nvars: int, k: int):
    return {c: i for i, c in enumerate(combo_list(nvars, k))}


def _merge_sign(a: tuple, b: tuple):
    """Sorted merge of two disjoint ascending tuples with the permutation sign; None if they intersect."""
    if set(a) & set(b):
        return None, 0
    merged = tuple(sorted(a + b))
    perm = a + b
    inv = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inv += 1
    return merged, (-1) ** inv


@lru_cache(maxsize=None)
def _wedge_table(nvars: int, ka: int, kb: int):
    out = []
    la, lb = combo_list(nvars, ka), combo_list(nvars, kb)
    pos = combo_pos(nvars, ka + kb)
    for ia, a in enumerate(la):
        for ib, b in enumerate(lb):
            merged, sign = _merge_sign(a, b)
            if merged is None:
                continue
            out.append((ia, ib, pos[merged], sign))
    return out


@lru_cache(maxsize=None)
def _d_table(nvars: int, k: int):
    """Entries (i_src, var, i_dst, sign): d(phi dz^c) contributes sign * d_var(phi) dz^dst."""
    out = []
    pos = combo_pos(nvars, k + 1)
    for i, c in enumerate(combo_list(nvars, k)):
        for v in range(nvars):
            merged, sign = _merge_sign((v,), c)
            if merged is None:
                continue
            out.append((i, v, pos[merged], sign))
    return out


# ---------------------------------------------------------------------------
# fields


class FormField:
    """A differential k-form given by an evaluator (point, order) -> coefficient jets."""

    def __init__(self, degree: int, nvars: int, evaluator: Callable[[ChartPoint, int], np.ndarray]):
        self.degree = degree
        self.nvars = nvars
        self._eval = evaluator

    def coeff_jets(self, p: ChartPoint, order: int) -> np.ndarray:
        return self._eval(p, order)

    def at(self, p: ChartPoint) -> np.ndarray:
        """Coefficient values (floats) in the coordinate coframe, one per ascending index tuple."""
        return values(self.coeff_jets(p, 0))

    def coeff_derivatives(self, p: ChartPoint) -> tuple:
        """(coefficients, their first coordinate derivatives) at p."""
        jets = self.coeff_jets(p, 1)
        coeffs = values(jets)
        grads = np.array([j.gradient() for j in jets])
        return coeffs, grads

    # pointwise algebra -----------------------------------------------

    def __add__(self, other: "FormField") -> "FormField":
        if self.degree != other.degree or self.nvars != other.nvars:
            raise ValueError("can only add forms of equal degree over the same chart")

        def ev(p, order):
            return self.coeff_jets(p, order) + other.coeff_jets(p, order)

        return FormField(self.degree, self.nvars, ev)

    def __sub__(self, other: "FormField") -> "FormField":
        return self + (other * -1.0)

    def __mul__(self, scalar: float) -> "FormField":
        s = float(scalar)

        def ev(p, order):
            return self.coeff_jets(p, order) * s

        return FormField(self.degree, self.nvars, ev)

    __rmul__ = __mul__

    def evaluate(self, p: ChartPoint, vectors: Sequence[np.ndarray]) -> float:
        """Value of the form on k tangent vectors given by coordinate components."""
        if len(vectors) != self.degree:
            raise ValueError(f"need {self.degree} vectors")
        coeffs = self.at(p)
        return float(contract_form(coeffs, np.asarray(vectors, dtype=float), self.nvars, self.degree))


def contract_form(coeffs: np.ndarray, vectors: np.ndarray, nvars: int, k: int) -> float:
    if k == 0:
        return float(coeffs[0])
    total = 0.0
    for pos, c in enumerate(combo_list(nvars, k)):
        if coeffs[pos] == 0.0:
            continue
        minor = vectors[:, c]
        total += coeffs[pos] * float(np.linalg.det(minor))
    return total


def contract_form_jets(coeff_jets: np.ndarray, vec_jets: np.ndarray, nvars: int, k: int):
    """Same contraction with jet-valued coefficients/components (small k only)."""
    total = None
    for pos, c in enumerate(combo_list(nvars, k)):
        det = None
        for perm in permutations(range(k)):
            inv = sum(1 for i in range(k) for j in range(i + 1, k) if perm[i] > perm[j])
            term = vec_jets[perm[0], c[0]]
            for r in range(1, k):
                term = term * vec_jets[perm[r], c[r]]
            term = term * float((-1) ** inv)
            det = term if det is None else det + term
        term = coeff_jets[pos] * det
        total = term if total is None else total + term
    return total


def constant_form(nvars: int, degree: int, dense: dict) -> FormField:
    """A form with constant coefficients; `dense` maps ascending index tuples to floats."""
    pos = combo_pos(nvars, degree)
    base = np.zeros(len(combo_list(nvars, degree)))
    for c, v in dense.items():
        base[pos[tuple(c)]] = v

    def ev(p, order):
        return np.array([Jet.constant(v, nvars, order) for v in base], dtype=object)

    return FormField(degree, nvars, ev)


def coordinate_one_form(nvars: int, var: int) -> FormField:
    return constant_form(nvars, 1, {(var,): 1.0})


def wedge(a: FormField, b: FormField) -> FormField:
    if a.nvars != b.nvars:
        raise ValueError("forms over different charts")
    k = a.degree + b.degree
    if k > a.nvars:
        raise ValueError("wedge degree exceeds the chart dimension")
    table = _wedge_table(a.nvars, a.degree, b.degree)
    size = len(combo_list(a.nvars, k))

    def ev(p, order):
        ca = a.coeff_jets(p, order)
        cb = b.coeff_jets(p, order)
        out = np.full(size, None, dtype=object)
        for ia, ib, io, sign in table:
            term = ca[ia] * cb[ib] * float(sign)
            out[io] = term if out[io] is None else out[io] + term
        for i in range(size):
            if out[i] is None:
                out[i] = Jet.constant(0.0, a.nvars, order)
        return out

    return FormField(k, a.nvars, ev)


def exterior_derivative(a: FormField) -> FormField:
    if a.degree >= a.nvars:
        raise ValueError("cannot take d of a top-degree form")
    table = _d_table(a.nvars, a.degree)
    size = len(combo_list(a.nvars, a.degree + 1))

    def ev(p, order):
        jets = a.coeff_jets(p, order + 1)
        out = np.full(size, None, dtype=object)
        for isrc, v, idst, sign in table:
            term = jets[isrc].derivative(v) * float(sign)
            out[idst] = term if out[idst] is None else out[idst] + term
        for i in range(size):
            if out[i] is None:
                out[i] = Jet.constant(0.0, a.nvars, order)
        return out

    return FormField(a.degree + 1, a.nvars, ev)


class VectorField:
    """A tangent field given by an evaluator (point, order) -> 2n component jets."""

    def __init__(self, nvars: int, evaluator: Callable[[ChartPoint, int], np.ndarray]):
        self.nvars = nvars
        self._eval = evaluator

    def comp_jets(self, p: ChartPoint, order: int) -> np.ndarray:
        return self._eval(p, order)

    def at(self, p: ChartPoint) -> np.ndarray:
        return values(self.comp_jets(p, 0))

    def __add__(self, other: "VectorField") -> "VectorField":
        def ev(p, order):
            return self.comp_jets(p, order) + other.comp_jets(p, order)

        return VectorField(self.nvars, ev)

    def __mul__(self, scalar: float) -> "VectorField":
        s = float(scalar)

        def ev(p, order):
            return self.comp_jets(p, order) * s

        return VectorField(self.nvars, ev)

    __rmul__ = __mul__

    def apply_to(self, scalar_field: Callable[[ChartPoint, int], Jet], p: ChartPoint, order: int = 0) -> Jet:
        """Directional derivative X(h) of a scalar evaluator h, as a jet of the requested order."""
        comps = self.comp_jets(p, order)
        h = scalar_field(p, order + 1)
        acc = None
        for v in range(self.nvars):
            term = comps[v] * h.derivative(v)
            acc = term if acc is None else acc + term
        return acc


def constant_vector(nvars: int, comps: Sequence[float]) -> VectorField:
    base = np.asarray(comps, dtype=float)

    def ev(p, order):
        return np.array([Jet.constant(v, nvars, order) for v in base], dtype=object)

    return VectorField(nvars, ev)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^k = X(Y^k) - Y(X^k), computed from stored component derivatives."""
    if X.nvars != Y.nvars:
        raise ValueError("vector fields over different charts")
    nv = X.nvars

    def ev(p, order):
        cx = X.comp_jets(p, order + 1)
        cy = Y.comp_jets(p, order + 1)
        cx_low = [c.truncate(order) for c in cx]
        cy_low = [c.truncate(order) for c in cy]
        out = np.empty(nv, dtype=object)
        for k in range(nv):
            acc = None
            for j in range(nv):
                term = cx_low[j] * cy[k].derivative(j) - cy_low[j] * cx[k].derivative(j)
                acc = term if acc is None else acc + term
            out[k] = acc
        return out

    return VectorField(nv, ev)


def interior_product(X: VectorField, a: FormField) -> FormField:
    """Contraction of the first slot of a with X."""
    if a.degree < 1:
        raise ValueError("interior product needs degree >= 1")
    k = a.degree
    nv = a.nvars
    out_size = len(combo_list(nv, k - 1))
    pos_out = combo_pos(nv, k - 1)

    def ev(p, order):
        ca = a.coeff_jets(p, order)
        cx = X.comp_jets(p, order)
        out = np.full(out_size, None, dtype=object)
        for i, c in enumerate(combo_list(nv, k)):
            for slot, v in enumerate(c):
                rest = tuple(w for w in c if w != v)
                sign = (-1) ** slot
                term = ca[i] * cx[v] * float(sign)
                j = pos_out[rest]
                out[j] = term if out[j] is None else out[j] + term
        for i in range(out_size):
            if out[i] is None:
                out[i] = Jet.constant(0.0, nv, order)
        return out

    return FormField(k - 1, nv, ev)


# ---------------------------------------------------------------------------
# matrices of forms


def mat_wedge(A, B):
    """Standard row-by-column matrix product with wedge entries."""
    n = len(A)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = wedge(A[i][0], B[0][j])
            for k in range(1, n):
                acc = acc + wedge(A[i][k], B[k][j])
            out[i][j] = acc
    return out


def mat_d(A):
    return [[exterior_derivative(e) for e in row] for row in A]


def mat_add(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_scale(A, s: float):
    return [[e * s for e in row] for row in A]


def mat_trace(A) -> FormField:
    acc = A[0][0]
    for i in range(1, len(A)):
        acc = acc + A[i][i]
    return acc
