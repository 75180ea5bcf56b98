"""Geodesic spray coefficients, the induced nonlinear connection, and the adapted basis.

The spray is differentiated through jet arithmetic, never by finite
differences, so the nonlinear connection and its own derivatives (needed by
brackets and curvature downstream) come out of one exact pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .jets import ChartPoint, Jet
from .linalg import values
from .metrics import FinslerMetric, g_inv_jets


@dataclass(frozen=True)
class SprayData:
    G: np.ndarray  # spray coefficients
    N: np.ndarray  # nonlinear connection N^i_j = dG^i/dy^j
    at: ChartPoint


@lru_cache(maxsize=65536)
def spray_jets(m: FinslerMetric, p: ChartPoint, order: int):
    """Spray coefficients G^i as jets of the requested order."""
    n = m.dim
    f2 = m.f2_jet(p, order + 2)
    coords_needed = order + 2
    # y^k as coordinate jets at the order of the mixed derivatives
    yk = [Jet.variable(p.y[k], n + k, 2 * n, coords_needed).truncate(order) for k in range(n)]
    ginv = g_inv_jets(m, p, order)
    rhs = []
    for j in range(n):
        dj = f2.derivative(n + j)  # d F^2 / dy^j, order+1
        acc = None
        for k in range(n):
            term = dj.derivative(k) * yk[k]  # [F^2]_{y^j x^k} y^k
            acc = term if acc is None else acc + term
        acc = acc - f2.derivative(j).truncate(order)
        rhs.append(acc)
    G = np.empty(n, dtype=object)
    for i in range(n):
        acc = None
        for j in range(n):
            term = ginv[i, j] * rhs[j]
            acc = term if acc is None else acc + term
        G[i] = acc * 0.25
    return G


@lru_cache(maxsize=65536)
def nonlinear_connection_jets(m: FinslerMetric, p: ChartPoint, order: int) -> np.ndarray:
    """N^i_j = dG^i/dy^j as jets."""
    n = m.dim
    G = spray_jets(m, p, order + 1)
    N = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            N[i, j] = G[i].derivative(n + j)
    return N


def spray(m: FinslerMetric, p: ChartPoint) -> SprayData:
    G = values(spray_jets(m, p, 0))
    N = values(nonlinear_connection_jets(m, p, 0))
    return SprayData(G=G, N=N, at=p)


def adapted_basis(m: FinslerMetric, p: ChartPoint):
    """Horizontal and vertical adapted coordinate fields at p.

    Returns (H, V): rows of H are the horizontal vectors, rows of V the
    vertical ones, all expressed in the 2n coordinate basis (d/dx, d/dy).
    """
    n = m.dim
    sd = spray(m, p)
    F = m.value(p.x, p.y)
    H = np.zeros((n, 2 * n))
    V = np.zeros((n, 2 * n))
    for i in range(n):
        H[i, i] = 1.0
        H[i, n:] = -sd.N[:, i]
        V[i, n + i] = F
    return H, V


def horizontal_constancy_residual(m: FinslerMetric, p: ChartPoint) -> float:
    """max_j |dF/dx^j - N^k_j dF/dy^k|; vanishes for every Finsler structure."""
    n = m.dim
    f = m.f_jet(p, 1)
    grad = f.gradient()
    N = values(nonlinear_connection_jets(m, p, 0))
    res = grad[:n] - N.T @ grad[n:]
    return float(np.max(np.abs(res)))
