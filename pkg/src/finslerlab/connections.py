"""Connections on the horizontal bundle: the torsion-free metric-defect connection
solved from its structure equations, its metric-compatible symmetrization, the
endomorphism measuring the defect, and curvature.

Conventions, fixed once and used everywhere:
  the connection matrix entry w[i][j] is the one-form with nabla e_j = sum_i w[i][j] e_i;
  first structure equation   d theta^i = sum_j theta^j ^ w[i][j];
  second structure equation  w + w^T = -2 H  (H carries only vertical legs);
  curvature                  Omega = d w + w ^ w  (matrix wedge, row by column);
  expansion                  Omega^i_j = sum_{k<l} R^i_{jkl} theta^k ^ theta^l
                                        + sum_{k,c} P^i_{jkc} theta^k ^ theta^{n+c}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import StructureInconsistent
from .forms import FormField, contract_form_jets, exterior_derivative, lie_bracket, mat_add, mat_d, mat_wedge
from .jets import ChartPoint, Jet
from .linalg import values
from .metrics import FinslerMetric, cartan_jets
from .frames import (
    coframe_apply,
    coframe_form,
    frame_field,
    frame_fields,
    frame_jets,
    horizontal_pair,
    lie_derivative_metric,
)

_E_TOL = 1e-7
_SYM_TOL = 1e-7


@dataclass(frozen=True)
class CartanEndomorphism:
    H: np.ndarray  # H[i, j, c]: coefficient of theta^{n+c} in H_ij
    at: ChartPoint


@dataclass(frozen=True)
class ConnectionMatrix:
    at: ChartPoint
    gamma: np.ndarray  # gamma[i, j, k]: theta^k coefficient of w[i][j]
    b: np.ndarray  # b[i, j, c]: theta^{n+c} coefficient of w[i][j]
    kind: str

    def entries_along(self, a: int) -> np.ndarray:
        """The matrix w[i][j](e_a) for one frame direction a in 0..2n-2."""
        n = self.gamma.shape[0]
        if a < n:
            return self.gamma[:, :, a]
        return self.b[:, :, a - n]


# ---------------------------------------------------------------------------
# Cartan endomorphism, two independent routes


@lru_cache(maxsize=65536)
def endomorphism_jets(m: FinslerMetric, p: ChartPoint, order: int) -> np.ndarray:
    """H[i, j, c] as jets via the Cartan-tensor contraction with three frame legs."""
    n = m.dim
    A = cartan_jets(m, p, order)
    u, _ = frame_jets(m, p, order)
    out = np.empty((n, n, n - 1), dtype=object)
    for i in range(n):
        for j in range(i, n):
            for c in range(n - 1):
                acc = None
                for pp in range(n):
                    for q in range(n):
                        upq = u[pp, i] * u[q, j]
                        for k in range(n):
                            term = A[pp, q, k] * upq * u[k, c]
                            acc = term if acc is None else acc + term
                h = -acc
                out[i, j, c] = h
                out[j, i, c] = h
    return out


def cartan_endomorphism_tensor(m: FinslerMetric, p: ChartPoint) -> CartanEndomorphism:
    return CartanEndomorphism(H=values(endomorphism_jets(m, p, 0)), at=p)


def cartan_endomorphism_lie(m: FinslerMetric, p: ChartPoint) -> CartanEndomorphism:
    """H from Lie derivatives of the fundamental tensor along the vertical frame legs."""
    n = m.dim
    H = np.empty((n, n, n - 1))
    for c in range(n - 1):
        L = lie_derivative_metric(frame_field(m, n + c), m, p)
        H[:, :, c] = 0.5 * L[:n, :n]
    return CartanEndomorphism(H=H, at=p)


# ---------------------------------------------------------------------------
# the structure-equation solve


@lru_cache(maxsize=65536)
def _frame_component_jets(m: FinslerMetric, p: ChartPoint, order: int):
    return tuple(frame_field(m, a).comp_jets(p, order) for a in range(2 * m.dim - 1))


@lru_cache(maxsize=65536)
def _dtheta_frame_jets(m: FinslerMetric, p: ChartPoint, order: int):
    """T[i][a][b] = (d theta^i)(e_a, e_b) as jets, for i < n and a < b < 2n-1."""
    n = m.dim
    comps = _frame_component_jets(m, p, order)
    k = 2 * n - 1
    T = [[[None] * k for _ in range(k)] for _ in range(n)]
    for i in range(n):
        dth = exterior_derivative(coframe_form(m, i))
        jets = dth.coeff_jets(p, order)
        for a in range(k):
            for b in range(a + 1, k):
                vec = np.empty((2, 2 * n), dtype=object)
                vec[0, :] = comps[a]
                vec[1, :] = comps[b]
                T[i][a][b] = contract_form_jets(jets, vec, 2 * n, 2)
    return T


@lru_cache(maxsize=65536)
def connection_jets(m: FinslerMetric, p: ChartPoint, order: int):
    """Solve the structure equations at p with jet-valued coefficients.

    Returns (gamma, b) object arrays; raises StructureInconsistent if the
    vertical-vertical part of d theta or the symmetry defect against the
    endomorphism exceeds tolerance (both are guaranteed identities, so a
    violation means a pipeline bug).
    """
    n = m.dim
    T = _dtheta_frame_jets(m, p, order)
    H = endomorphism_jets(m, p, order)

    def tval(i, a, b):
        # antisymmetric access
        if a == b:
            return None
        return T[i][a][b] if a < b else -T[i][b][a]

    # vertical-vertical components must vanish
    e_res = 0.0
    for i in range(n):
        for c in range(n - 1):
            for d in range(c + 1, n - 1):
                e_res = max(e_res, abs(T[i][n + c][n + d].value))
    if e_res > _E_TOL:
        raise StructureInconsistent(
            f"vertical-vertical residual {e_res:.3e} in d theta at {p.x}, {p.y}"
        )

    b = np.empty((n, n, n - 1), dtype=object)
    for i in range(n):
        for j in range(n):
            for c in range(n - 1):
                b[i, j, c] = tval(i, j, n + c)

    sym_res = 0.0
    for i in range(n):
        for j in range(i, n):
            for c in range(n - 1):
                r = b[i, j, c].value + b[j, i, c].value + 2.0 * H[i, j, c].value
                sym_res = max(sym_res, abs(r))
    if sym_res > _SYM_TOL:
        raise StructureInconsistent(
            f"symmetry defect {sym_res:.3e} between solved vertical part and endomorphism"
        )

    half = 0.5
    gamma = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                # unique antisymmetric-in-(i,j) solution of the horizontal part
                t1 = tval(i, j, k)
                t2 = tval(j, k, i)
                t3 = tval(k, j, i)
                zero = Jet.constant(0.0, 2 * n, order)
                acc = (t1 if t1 is not None else zero) + (t2 if t2 is not None else zero)
                acc = acc + (t3 if t3 is not None else zero)
                gamma[i, j, k] = acc * half
    return gamma, b


def chern_from_structure_equations(m: FinslerMetric, p: ChartPoint) -> ConnectionMatrix:
    gamma, b = connection_jets(m, p, 0)
    return ConnectionMatrix(at=p, gamma=values(gamma), b=values(b), kind="chern")


def cartan_connection(m: FinslerMetric, p: ChartPoint) -> ConnectionMatrix:
    """The metric-compatible symmetrization: same horizontal part, vertical part shifted by H."""
    cm = chern_from_structure_equations(m, p)
    H = values(endomorphism_jets(m, p, 0))
    return ConnectionMatrix(at=p, gamma=cm.gamma, b=cm.b + H, kind="cartan")


def structure_equation_residuals(m: FinslerMetric, p: ChartPoint) -> tuple:
    """(first-equation residual, symmetry residual) of the solved matrix, evaluated on frame pairs."""
    n = m.dim
    k = 2 * n - 1
    cm = chern_from_structure_equations(m, p)
    H = values(endomorphism_jets(m, p, 0))
    T = _dtheta_frame_jets(m, p, 0)

    def tval(i, a, b):
        if a == b:
            return 0.0
        return T[i][a][b].value if a < b else -T[i][b][a].value

    def entry(i, j, a):
        return cm.gamma[i, j, a] if a < n else cm.b[i, j, a - n]

    first = 0.0
    for i in range(n):
        for a in range(k):
            for bb in range(a + 1, k):
                # (sum_j theta^j ^ w[i][j])(e_a, e_b) with theta^j(e_c) = delta
                rhs = 0.0
                if a < n:
                    rhs += entry(i, a, bb)
                if bb < n:
                    rhs -= entry(i, bb, a)
                first = max(first, abs(tval(i, a, bb) - rhs))
    second = 0.0
    for i in range(n):
        for j in range(n):
            for a in range(k):
                h = H[i, j, a - n] if a >= n else 0.0
                second = max(second, abs(entry(i, j, a) + entry(j, i, a) + 2.0 * h))
    return first, second


def distinguished_row_residual(m: FinslerMetric, p: ChartPoint) -> float:
    """Residual of the pinned entries in the last frame slot:

    w[n][a] = theta^{n+a},  w[a][n] = -theta^{n+a},  w[n][n] = 0.
    """
    n = m.dim
    cm = chern_from_structure_equations(m, p)
    res = 0.0
    last = n - 1
    for al in range(n - 1):
        res = max(res, np.max(np.abs(cm.gamma[last, al, :])))
        res = max(res, np.max(np.abs(cm.gamma[al, last, :])))
        for c in range(n - 1):
            res = max(res, abs(cm.b[last, al, c] - (1.0 if al == c else 0.0)))
            res = max(res, abs(cm.b[al, last, c] + (1.0 if al == c else 0.0)))
    res = max(res, np.max(np.abs(cm.gamma[last, last, :])))
    res = max(res, np.max(np.abs(cm.b[last, last, :])))
    return float(res)


def uniqueness_perturbation_residuals(m: FinslerMetric, p: ChartPoint, trials: int = 8, seed: int = 0):
    """First-equation residuals under admissible perturbations of the solved horizontal part.

    Perturbations keep the second structure equation (antisymmetric in the two
    frame slots); each must break the first equation proportionally to its size.
    Returns a list of (residual, residual_at_double_scale) pairs.
    """
    n = m.dim
    rng = np.random.default_rng(seed)
    cm = chern_from_structure_equations(m, p)
    out = []
    for _ in range(trials):
        raw = rng.normal(size=(n, n, n))
        a = raw - raw.transpose(1, 0, 2)  # antisymmetric in (i, j): second equation preserved
        res1 = _first_eq_residual_with(m, p, cm.gamma + a, cm.b)
        res2 = _first_eq_residual_with(m, p, cm.gamma + 2.0 * a, cm.b)
        out.append((res1, res2))
    return out


def _first_eq_residual_with(m: FinslerMetric, p: ChartPoint, gamma, b) -> float:
    n = m.dim
    k = 2 * n - 1
    T = _dtheta_frame_jets(m, p, 0)

    def tval(i, a, bb):
        if a == bb:
            return 0.0
        return T[i][a][bb].value if a < bb else -T[i][bb][a].value

    def entry(i, j, a):
        return gamma[i, j, a] if a < n else b[i, j, a - n]

    worst = 0.0
    for i in range(n):
        for a in range(k):
            for bb in range(a + 1, k):
                rhs = 0.0
                if a < n:
                    rhs += entry(i, a, bb)
                if bb < n:
                    rhs -= entry(i, bb, a)
                worst = max(worst, abs(tval(i, a, bb) - rhs))
    return worst


# ---------------------------------------------------------------------------
# Bott characterization and compatibility defect


def bott_vertical_check(m: FinslerMetric, p: ChartPoint) -> float:
    """Vertical differentiation must be the horizontal projection of the bracket."""
    n = m.dim
    cm = chern_from_structure_equations(m, p)
    worst = 0.0
    for c in range(n - 1):
        V = frame_field(m, n + c)
        for i in range(n):
            br = lie_bracket(V, frame_field(m, i)).comp_jets(p, 0)
            proj = coframe_apply(m, p, 0, br)
            for j in range(n):
                worst = max(worst, abs(proj[j].value - cm.b[j, i, c]))
    return worst


def dual_and_symmetrization_check(m: FinslerMetric, p: ChartPoint) -> float:
    """Compatibility defect of the solved connection against the horizontal metric equals twice the endomorphism."""
    n = m.dim
    k = 2 * n - 1
    cm = chern_from_structure_equations(m, p)
    H = values(endomorphism_jets(m, p, 0))
    fields = frame_fields(m)

    def entry(i, j, a):
        return cm.gamma[i, j, a] if a < n else cm.b[i, j, a - n]

    worst = 0.0
    for a in range(k):
        X = fields[a]
        for i in range(n):
            for j in range(i, n):

                def h(q, order, i=i, j=j):
                    ci = fields[i].comp_jets(q, order)
                    cj = fields[j].comp_jets(q, order)
                    return horizontal_pair(m, q, order, ci, cj)

                xh = X.apply_to(h, p, 0).value
                defect = xh - entry(j, i, a) - entry(i, j, a)
                target = 2.0 * H[i, j, a - n] if a >= n else 0.0
                worst = max(worst, abs(defect - target))
    return worst


# ---------------------------------------------------------------------------
# connection form matrices and curvature


def endomorphism_form_matrix(m: FinslerMetric):
    """H as a matrix of one-forms in coordinate-coframe coefficients."""
    n = m.dim
    cofs = [coframe_form(m, n + c) for c in range(n - 1)]

    def entry(i, j):
        def ev(p, order):
            H = endomorphism_jets(m, p, order)
            acc = None
            for c in range(n - 1):
                cjets = cofs[c].coeff_jets(p, order)
                part = np.array([H[i, j, c] * cj for cj in cjets], dtype=object)
                acc = part if acc is None else acc + part
            return acc

        return FormField(1, 2 * n, ev)

    return [[entry(i, j) for j in range(n)] for i in range(n)]


def connection_form_matrix(m: FinslerMetric, t: float = 0.0):
    """The interpolated connection matrix as form fields: t=0 torsion-free, t=1 metric-compatible."""
    n = m.dim
    cofs = [coframe_form(m, a) for a in range(2 * n - 1)]

    def entry(i, j):
        def ev(p, order):
            gamma, b = connection_jets(m, p, order)
            if t != 0.0:
                H = endomorphism_jets(m, p, order)
            acc = None
            for a in range(2 * n - 1):
                if a < n:
                    coef = gamma[i, j, a]
                else:
                    coef = b[i, j, a - n]
                    if t != 0.0:
                        coef = coef + H[i, j, a - n] * t
                cjets = cofs[a].coeff_jets(p, order)
                part = np.array([coef * cj for cj in cjets], dtype=object)
                acc = part if acc is None else acc + part
            return acc

        return FormField(1, 2 * n, ev)

    return [[entry(i, j) for j in range(n)] for i in range(n)]


def curvature_form_matrix(W):
    """Omega = dW + W ^ W for a matrix of connection one-forms."""
    return mat_add(mat_d(W), mat_wedge(W, W))


@dataclass(frozen=True)
class CurvatureData:
    R: np.ndarray  # R[i, j, k, l] with Omega^i_j(e_k, e_l), antisymmetric in (k, l)
    P: np.ndarray  # P[i, j, k, c] with Omega^i_j(e_k, e_{n+c})
    vertical_residual: float  # max |Omega^i_j(e_{n+c}, e_{n+d})|
    at: ChartPoint


def curvature(m: FinslerMetric, p: ChartPoint, t: float = 0.0) -> CurvatureData:
    """Curvature of the interpolated connection, expanded in the moving coframe at p."""
    n = m.dim
    W = connection_form_matrix(m, t)
    Om = curvature_form_matrix(W)
    comps = [frame_field(m, a).at(p) for a in range(2 * n - 1)]
    R = np.zeros((n, n, n, n))
    P = np.zeros((n, n, n, n - 1))
    vert = 0.0
    for i in range(n):
        for j in range(n):
            coeffs = Om[i][j].at(p)
            form = Om[i][j]
            for k in range(n):
                for l in range(k + 1, n):
                    val = _eval2(form, coeffs, comps[k], comps[l], 2 * n)
                    R[i, j, k, l] = val
                    R[i, j, l, k] = -val
                for c in range(n - 1):
                    P[i, j, k, c] = _eval2(form, coeffs, comps[k], comps[n + c], 2 * n)
            for c in range(n - 1):
                for d in range(c + 1, n - 1):
                    vert = max(vert, abs(_eval2(form, coeffs, comps[n + c], comps[n + d], 2 * n)))
    return CurvatureData(R=R, P=P, vertical_residual=vert, at=p)


def _eval2(form, coeffs, za, zb, nv):
    from .forms import combo_list

    total = 0.0
    for pos, c in enumerate(combo_list(nv, 2)):
        cf = coeffs[pos]
        if cf == 0.0:
            continue
        total += cf * (za[c[0]] * zb[c[1]] - za[c[1]] * zb[c[0]])
    return float(total)
