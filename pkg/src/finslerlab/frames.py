"""The metric-orthonormal moving frame with the distinguished last leg, and everything built on it.

Frame vectors are indexed 0..2n-2: slots 0..n-1 are horizontal (the last one
is the unit fiber direction, i.e. the Reeb field), slots n..2n-2 are vertical.
The frame is a deterministic Gram-Schmidt of the coordinate directions against
the fiber direction, so repeated calls at a point reproduce it bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateFrame
from .forms import FormField, VectorField, lie_bracket
from .jets import ChartPoint, Jet
from .jets import sqrt as jet_sqrt
from .linalg import inverse, values
from .metrics import FinslerMetric, g_jets
from .spray import nonlinear_connection_jets

_PIVOT_FLOOR = 1e-10


@dataclass(frozen=True)
class FrameData:
    v: np.ndarray  # rows expand the moving coframe over dx
    u: np.ndarray  # columns are frame components; u = v^{-1}
    at: ChartPoint


@lru_cache(maxsize=65536)
def frame_jets(m: FinslerMetric, p: ChartPoint, order: int):
    """(u, v) as object arrays of jets: u columns are the frame legs, v = u^{-1}."""
    n = m.dim
    g = g_jets(m, p, order)
    f = m.f_jet(p, order)
    inv_f = f.reciprocal() if isinstance(f, Jet) else 1.0 / f
    ylift = [Jet.variable(p.y[i], n + i, 2 * n, max(order, 1)).truncate(order) for i in range(n)]
    legs = []

    def g_pair(a, b):
        acc = None
        for i in range(n):
            for j in range(n):
                term = a[i] * g[i, j] * b[j]
                acc = term if acc is None else acc + term
        return acc

    # distinguished leg first: the unit fiber direction
    e_last = [ylift[i] * inv_f for i in range(n)]
    legs.append(e_last)
    # then the coordinate directions 1..n-1 in index order
    for k in range(n - 1):
        w = [Jet.constant(1.0 if i == k else 0.0, 2 * n, order) for i in range(n)]
        for leg in legs:
            c = g_pair(w, leg)
            w = [w[i] - c * leg[i] for i in range(n)]
        norm2 = g_pair(w, w)
        if norm2.value < _PIVOT_FLOOR**2:
            raise DegenerateFrame(
                f"Gram-Schmidt pivot collapsed at {p.x}, {p.y} (coordinate slot {k})"
            )
        inv_n = jet_sqrt(norm2).reciprocal()
        legs.append([w[i] * inv_n for i in range(n)])
    # reorder: coordinate-built legs first, distinguished leg last
    ordered = legs[1:] + [legs[0]]
    u = np.empty((n, n), dtype=object)
    for col, leg in enumerate(ordered):
        for row in range(n):
            u[row, col] = leg[row]
    v = inverse(u)
    return u, v


def build_frame(m: FinslerMetric, p: ChartPoint) -> FrameData:
    u, v = frame_jets(m, p, 0)
    return FrameData(v=values(v), u=values(u), at=p)


# ---------------------------------------------------------------------------
# coframe forms (coordinate-coframe coefficients)


def coframe_form(m: FinslerMetric, a: int) -> FormField:
    """The moving coframe one-forms; a in 0..2n-1.

    0..n-1: the horizontal coframe (slot n-1 is the Hilbert form);
    n..2n-2: the vertical coframe; 2n-1: the fiber-radial form -d(log F).
    """
    n = m.dim
    nv = 2 * n

    if a < n:

        def ev(p, order):
            _, v = frame_jets(m, p, order)
            out = np.empty(nv, dtype=object)
            for k in range(n):
                out[k] = v[a, k]
                out[n + k] = Jet.constant(0.0, nv, order)
            return out

        return FormField(1, nv, ev)

    if a < 2 * n - 1:
        alpha = a - n

        def ev(p, order):
            _, v = frame_jets(m, p, order)
            N = nonlinear_connection_jets(m, p, order)
            f = m.f_jet(p, order)
            inv_f = f.reciprocal()
            out = np.empty(nv, dtype=object)
            for j in range(n):
                acc = None
                for i in range(n):
                    term = v[alpha, i] * N[i, j]
                    acc = term if acc is None else acc + term
                out[j] = -acc * inv_f
            for i in range(n):
                out[n + i] = -v[alpha, i] * inv_f
            return out

        return FormField(1, nv, ev)

    def ev(p, order):
        N = nonlinear_connection_jets(m, p, order)
        f = m.f_jet(p, order + 1)
        inv_f = f.truncate(order).reciprocal()
        fy = [f.derivative(n + i).truncate(order) for i in range(n)]
        out = np.empty(nv, dtype=object)
        for j in range(n):
            acc = None
            for i in range(n):
                term = fy[i] * N[i, j]
                acc = term if acc is None else acc + term
            out[j] = -acc * inv_f
        for i in range(n):
            out[n + i] = -fy[i] * inv_f
        return out

    return FormField(1, nv, ev)


def coframe(m: FinslerMetric) -> list:
    """All 2n coframe forms, indexed as in coframe_form."""
    return [coframe_form(m, a) for a in range(2 * m.dim)]


def hilbert_form(m: FinslerMetric) -> FormField:
    return coframe_form(m, m.dim - 1)


# ---------------------------------------------------------------------------
# frame vector fields


def frame_field(m: FinslerMetric, a: int) -> VectorField:
    """Frame vector fields on the sphere bundle; a in 0..2n-2."""
    n = m.dim
    nv = 2 * n

    if a < n:

        def ev(p, order):
            u, _ = frame_jets(m, p, order)
            N = nonlinear_connection_jets(m, p, order)
            out = np.empty(nv, dtype=object)
            for j in range(n):
                out[j] = u[j, a]
            for k in range(n):
                acc = None
                for j in range(n):
                    term = N[k, j] * u[j, a]
                    acc = term if acc is None else acc + term
                out[n + k] = -acc
            return out

        return VectorField(nv, ev)

    alpha = a - n

    def ev(p, order):
        u, _ = frame_jets(m, p, order)
        f = m.f_jet(p, order)
        out = np.empty(nv, dtype=object)
        for j in range(n):
            out[j] = Jet.constant(0.0, nv, order)
        for k in range(n):
            out[n + k] = -(f * u[k, alpha])
        return out

    return VectorField(nv, ev)


def frame_fields(m: FinslerMetric) -> list:
    return [frame_field(m, a) for a in range(2 * m.dim - 1)]


def reeb_field(m: FinslerMetric) -> VectorField:
    return frame_field(m, m.dim - 1)


# ---------------------------------------------------------------------------
# pairings


def coframe_apply(m: FinslerMetric, p: ChartPoint, order: int, comp) -> list:
    """Moving-coframe readings (theta^1..theta^{2n-1}) of a tangent vector given by component jets."""
    n = m.dim
    u, v = frame_jets(m, p, order)
    N = nonlinear_connection_jets(m, p, order)
    f = m.f_jet(p, order)
    inv_f = f.reciprocal()
    out = []
    for i in range(n):
        acc = None
        for k in range(n):
            term = v[i, k] * comp[k]
            acc = term if acc is None else acc + term
        out.append(acc)
    # delta-y readings: (dy^i + N^i_j dx^j)/F
    dy = []
    for i in range(n):
        acc = comp[n + i]
        for j in range(n):
            acc = acc + N[i, j] * comp[j]
        dy.append(acc * inv_f)
    for alpha in range(n - 1):
        acc = None
        for i in range(n):
            term = v[alpha, i] * dy[i]
            acc = term if acc is None else acc + term
        out.append(-acc)
    return out


def horizontal_pair(m: FinslerMetric, p: ChartPoint, order: int, za, zb):
    """Fundamental-tensor pairing of two tangent vectors (only horizontal parts contribute)."""
    n = m.dim
    g = g_jets(m, p, order)
    acc = None
    for i in range(n):
        for j in range(n):
            term = za[i] * g[i, j] * zb[j]
            acc = term if acc is None else acc + term
    return acc


def sasaki_pair(m: FinslerMetric, p: ChartPoint, order: int, za, zb, eps: float = 1.0):
    """Sphere-bundle metric pairing with the horizontal block scaled by eps^{-2}."""
    n = m.dim
    th_a = coframe_apply(m, p, order, za)
    th_b = coframe_apply(m, p, order, zb)
    acc = None
    w = eps**-2
    for i in range(n):
        term = th_a[i] * th_b[i] * w
        acc = term if acc is None else acc + term
    for alpha in range(n - 1):
        term = th_a[n + alpha] * th_b[n + alpha]
        acc = acc + term
    return acc


def sasaki_gram(m: FinslerMetric, p: ChartPoint, eps: float = 1.0) -> np.ndarray:
    """Gram matrix of the frame fields under the (rescaled) sphere-bundle metric."""
    k = 2 * m.dim - 1
    comps = [frame_field(m, a).comp_jets(p, 0) for a in range(k)]
    out = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            val = sasaki_pair(m, p, 0, comps[a], comps[b], eps).value
            out[a, b] = out[b, a] = val
    return out


def lie_derivative_metric(X: VectorField, m: FinslerMetric, p: ChartPoint) -> np.ndarray:
    """(L_X g)(e_a, e_b) over all frame pairs, using the horizontal fundamental pairing."""
    k = 2 * m.dim - 1
    fields = frame_fields(m)
    brackets = [lie_bracket(X, E) for E in fields]
    bcomp = [B.comp_jets(p, 0) for B in brackets]
    ecomp = [E.comp_jets(p, 0) for E in fields]
    out = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            # X applied to the pairing function <e_a, e_b>
            def h(q, order, a=a, b=b):
                ca = fields[a].comp_jets(q, order)
                cb = fields[b].comp_jets(q, order)
                return horizontal_pair(m, q, order, ca, cb)

            xh = X.apply_to(h, p, 0).value
            t1 = horizontal_pair(m, p, 0, bcomp[a], ecomp[b]).value
            t2 = horizontal_pair(m, p, 0, bcomp[b], ecomp[a]).value
            out[a, b] = out[b, a] = xh - t1 - t2
    return out


# ---------------------------------------------------------------------------
# almost complex structure


def almost_complex_adapted(n: int) -> np.ndarray:
    """J in the adapted basis (horizontal block then vertical block): J(h_i) = v_i, J(v_i) = -h_i."""
    J = np.zeros((2 * n, 2 * n))
    J[n:, :n] = np.eye(n)
    J[:n, n:] = -np.eye(n)
    return J


def almost_complex_coordinate(m: FinslerMetric, p: ChartPoint) -> np.ndarray:
    """The same endomorphism conjugated into the coordinate basis (d/dx, d/dy)."""
    from .spray import adapted_basis

    H, V = adapted_basis(m, p)
    B = np.vstack([H, V]).T  # columns are adapted basis vectors
    J = almost_complex_adapted(m.dim)
    return B @ J @ np.linalg.inv(B)


# ---------------------------------------------------------------------------
# sampling


def indicatrix_sample(m: FinslerMetric, count: int, seed: int, fiber_floor: float = 0.2) -> list:
    """Deterministic sample of chart points with F(x, y) = 1.

    Directions with a small last fiber component are rejected so the frame
    construction keeps a healthy Gram-Schmidt pivot; callers relying on the
    sphere-bundle quotient are insensitive to this because every quantity
    tested is scale-invariant in y.
    """
    rng = np.random.default_rng(seed)
    lo, hi = m.domain.sample_bounds(m.dim)
    out = []
    while len(out) < count:
        x = rng.uniform(lo, hi)
        d = rng.normal(size=m.dim)
        nd = np.linalg.norm(d)
        if nd < 1e-6 or abs(d[-1]) / nd < fiber_floor:
            continue
        f = m.value(tuple(x), tuple(d))
        if f <= 0:
            continue
        y = d / f
        out.append(ChartPoint(tuple(x), tuple(y)))
    return out
