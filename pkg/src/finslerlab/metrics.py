"""Closed-form Finsler metrics and the tensors built from fiberwise derivatives.

Every metric is a chart-local evaluator F(x, y) written against the
scalar-generic math in :mod:`finslerlab.jets`, so the same code path yields
plain floats or exact truncated Taylor expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from . import jets as jm
from .errors import DomainError, NotPositiveDefinite
from .jets import ChartPoint, Jet
from .linalg import cholesky_or_raise, inverse, values


# ---------------------------------------------------------------------------
# chart domains


@dataclass(frozen=True)
class Ball:
    radius: float
    safe_radius: float

    def contains(self, x: Sequence[float]) -> bool:
        return math.sqrt(sum(v * v for v in x)) < self.radius

    def sample_bounds(self, dim: int):
        r = self.safe_radius / math.sqrt(dim)
        return np.full(dim, -r), np.full(dim, r)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple
    margin: float = 0.1

    def contains(self, x: Sequence[float]) -> bool:
        return all(l < v < h for v, l, h in zip(x, self.lo, self.hi))

    def sample_bounds(self, dim: int):
        lo = np.array(self.lo[:dim], dtype=float) + self.margin
        hi = np.array(self.hi[:dim], dtype=float) - self.margin
        return lo, hi


# ---------------------------------------------------------------------------
# the metric object


@dataclass(eq=False)
class FinslerMetric:
    """A named chart-local Finsler structure with its validity domain.

    `fn` maps (x, y) given as lists of scalar-generic values (floats or jets)
    to F(x, y).  Instances are immutable after construction and hash by
    identity, which keys the jet caches.
    """

    name: str
    dim: int
    params: dict
    domain: object
    fn: Callable
    family: str = "generic"
    x_independent: bool = False
    pathological: bool = False
    riemannian_a: Optional[Callable] = None

    def check_point(self, p: ChartPoint) -> None:
        if p.dim != self.dim:
            raise DomainError(f"point dimension {p.dim} != metric dimension {self.dim}")
        if not self.domain.contains(p.x):
            raise DomainError(f"x={p.x} outside the chart domain of {self.name}")

    def value(self, x: Sequence[float], y: Sequence[float]) -> float:
        return float(self.fn(list(map(float, x)), list(map(float, y))))

    def f_jet(self, p: ChartPoint, order: int) -> Jet:
        return _f_jet(self, p, order)

    def f2_jet(self, p: ChartPoint, order: int) -> Jet:
        return _f2_jet(self, p, order)

    @property
    def is_riemannian(self) -> bool:
        return self.family in ("euclidean", "riemannian")

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "params": dict(self.params),
            "family": self.family,
            "x_independent": self.x_independent,
            "pathological": self.pathological,
        }


@lru_cache(maxsize=65536)
def _f_jet(metric: FinslerMetric, p: ChartPoint, order: int) -> Jet:
    metric.check_point(p)
    if order == 0:
        return Jet.constant(metric.value(p.x, p.y), 2 * p.dim, 0)
    coords = jm.seed_coordinates(p, order)
    n = p.dim
    return metric.fn(coords[:n], coords[n:])


@lru_cache(maxsize=65536)
def _f2_jet(metric: FinslerMetric, p: ChartPoint, order: int) -> Jet:
    f = _f_jet(metric, p, order)
    return f * f


def clear_caches() -> None:
    _f_jet.cache_clear()
    _f2_jet.cache_clear()


# ---------------------------------------------------------------------------
# derived tensors


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    at: ChartPoint


@dataclass(frozen=True)
class CartanTensor:
    A: np.ndarray
    at: ChartPoint


def fundamental_tensor(m: FinslerMetric, p: ChartPoint) -> FundamentalTensor:
    """g_ij = half the fiberwise Hessian of F^2; inverse by dense factorization."""
    n = m.dim
    f2 = m.f2_jet(p, 2)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * (2 * n)
            alpha[n + i] += 1
            alpha[n + j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(alpha)
    cholesky_or_raise(g, f"{m.name} at {p.x}, {p.y}")
    return FundamentalTensor(g=g, g_inv=np.linalg.inv(g), at=p)


def g_jets(m: FinslerMetric, p: ChartPoint, order: int) -> np.ndarray:
    """Fundamental tensor entries as jets of the requested order."""
    n = m.dim
    f2 = m.f2_jet(p, order + 2)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        di = f2.derivative(n + i)
        for j in range(i, n):
            gij = di.derivative(n + j) * 0.5
            out[i, j] = out[j, i] = gij
    return out


def g_inv_jets(m: FinslerMetric, p: ChartPoint, order: int) -> np.ndarray:
    g = g_jets(m, p, order)
    cholesky_or_raise(values(g), f"{m.name} at {p.x}, {p.y}")
    return inverse(g)


def cartan_tensor(m: FinslerMetric, p: ChartPoint) -> CartanTensor:
    """A_ijk = (F/4) * third fiberwise derivative of F^2; totally symmetric."""
    return CartanTensor(A=values(cartan_jets(m, p, 0)), at=p)


def cartan_jets(m: FinslerMetric, p: ChartPoint, order: int) -> np.ndarray:
    n = m.dim
    f2 = m.f2_jet(p, order + 3)
    f = m.f_jet(p, order)
    quarter_f = f * 0.25
    out = np.empty((n, n, n), dtype=object)
    for i in range(n):
        di = f2.derivative(n + i)
        for j in range(i, n):
            dij = di.derivative(n + j)
            for k in range(j, n):
                a = quarter_f * dij.derivative(n + k)
                for perm in ((i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)):
                    out[perm] = a
    return out


def cartan_form_coeffs(m: FinslerMetric, p: ChartPoint) -> np.ndarray:
    """Coefficients A_k of the mean Cartan one-form: contraction of A with the inverse fundamental tensor."""
    ft = fundamental_tensor(m, p)
    A = cartan_tensor(m, p).A
    return np.einsum("ij,ijk->k", ft.g_inv, A)


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    metric: str
    samples: int
    seed: int
    max_homogeneity_violation: float
    min_value: float
    min_eigenvalue: float
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            not self.failures
            and self.max_homogeneity_violation < 1e-10
            and self.min_value > 0.0
            and self.min_eigenvalue > 0.0
        )


def sample_points(m: FinslerMetric, count: int, seed: int) -> list:
    """Random chart points with unit-sphere fiber directions (no indicatrix normalization)."""
    rng = np.random.default_rng(seed)
    lo, hi = m.domain.sample_bounds(m.dim)
    pts = []
    while len(pts) < count:
        x = rng.uniform(lo, hi)
        y = rng.normal(size=m.dim)
        ny = np.linalg.norm(y)
        if ny < 1e-3:
            continue
        pts.append(ChartPoint(tuple(x), tuple(y / ny)))
    return pts


def validate_metric(m: FinslerMetric, samples: int = 64, seed: int = 0) -> ValidationReport:
    """Check positive 1-homogeneity, positivity, and positive definiteness at random points."""
    rng_pts = sample_points(m, samples, seed)
    worst_h = 0.0
    min_f = math.inf
    min_eig = math.inf
    failures = []
    for p in rng_pts:
        try:
            f = m.value(p.x, p.y)
            min_f = min(min_f, f)
            for lam in (0.5, 2.0, 7.3):
                fl = m.value(p.x, tuple(lam * v for v in p.y))
                worst_h = max(worst_h, abs(fl - lam * f) / abs(lam * f))
            ft = fundamental_tensor(m, p)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(ft.g).min()))
        except NotPositiveDefinite as exc:
            failures.append(f"NotPositiveDefinite: {exc}")
            g = _half_hessian(m, p)
            min_eig = min(min_eig, float(np.linalg.eigvalsh(g).min()))
        except DomainError as exc:
            failures.append(f"DomainError: {exc}")
    return ValidationReport(
        metric=m.name,
        samples=samples,
        seed=seed,
        max_homogeneity_violation=worst_h,
        min_value=min_f,
        min_eigenvalue=min_eig,
        failures=failures,
    )


def _half_hessian(m: FinslerMetric, p: ChartPoint) -> np.ndarray:
    n = m.dim
    f2 = m.f2_jet(p, 2)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * (2 * n)
            alpha[n + i] += 1
            alpha[n + j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(alpha)
    return g


# ---------------------------------------------------------------------------
# registry


def _dot(u, v):
    acc = u[0] * v[0]
    for a, b in zip(u[1:], v[1:]):
        acc = acc + a * b
    return acc


def _norm(y):
    return jm.sqrt(_dot(y, y))


def _sphere_factor(x):
    # conformal factor of the round-sphere chart: 1 / (1 + |x|^2/4)
    return 1.0 / (1.0 + _dot(x, x) * 0.25)


def make_euclidean(dim: int = 2) -> FinslerMetric:
    return FinslerMetric(
        name="euclidean",
        dim=dim,
        params={},
        domain=Ball(radius=2.0, safe_radius=1.0),
        fn=lambda x, y: _norm(y),
        family="euclidean",
        x_independent=True,
        riemannian_a=lambda x: np.eye(dim),
    )


def make_riemannian_sphere(dim: int = 2) -> FinslerMetric:
    def a_of_x(x):
        lam = 1.0 / (1.0 + 0.25 * float(np.dot(x, x)))
        return lam * lam * np.eye(dim)

    return FinslerMetric(
        name="riemannian-sphere",
        dim=dim,
        params={},
        domain=Ball(radius=1.5, safe_radius=0.9),
        fn=lambda x, y: _norm(y) * _sphere_factor(x),
        family="riemannian",
        riemannian_a=a_of_x,
    )


def make_riemannian_hyperbolic(dim: int = 2) -> FinslerMetric:
    lo = tuple([-1.0] + [0.2] + [-1.0] * (dim - 2))
    hi = tuple([1.0] + [2.0] + [1.0] * (dim - 2))

    def a_of_x(x):
        h = float(x[1])
        return np.eye(dim) / (h * h)

    return FinslerMetric(
        name="riemannian-hyperbolic",
        dim=dim,
        params={},
        domain=Box(lo=lo, hi=hi, margin=0.15),
        fn=lambda x, y: _norm(y) / x[1],
        family="riemannian",
        riemannian_a=a_of_x,
    )


def make_randers(dim: int = 2, b: Sequence[float] = None, base: str = "sphere") -> FinslerMetric:
    if b is None:
        b = [0.3] + [0.0] * (dim - 1)
    b = tuple(float(v) for v in b)
    if len(b) != dim:
        raise ValueError(f"drift vector must have {dim} components")
    bnorm = math.sqrt(sum(v * v for v in b))
    if bnorm >= 1.0:
        raise ValueError(f"randers drift |b|={bnorm:.3f} >= 1 destroys positivity")
    if base == "sphere":
        domain = Ball(radius=0.8, safe_radius=0.55)
        # positivity needs the alpha-norm of b below 1 over the whole chart:
        # |b|_alpha = (1 + |x|^2/4) |b| on the round-sphere chart
        sup = (1.0 + 0.25 * domain.radius**2) * bnorm
        if sup >= 1.0:
            raise ValueError(f"randers drift too large for the curved base (sup |b|_a = {sup:.3f})")

        def fn(x, y):
            return _norm(y) * _sphere_factor(x) + _dot(b, y)

        x_indep = False
    elif base == "flat":
        domain = Ball(radius=2.0, safe_radius=1.0)

        def fn(x, y):
            return _norm(y) + _dot(b, y)

        x_indep = True
    else:
        raise ValueError(f"unknown randers base {base!r}")
    return FinslerMetric(
        name="randers",
        dim=dim,
        params={"b": b, "base": base},
        domain=domain,
        fn=fn,
        family="randers",
        x_independent=x_indep,
    )


def make_funk(dim: int = 2) -> FinslerMetric:
    def fn(x, y):
        xx = _dot(x, x)
        xy = _dot(x, y)
        yy = _dot(y, y)
        one_minus = 1.0 - xx
        return (jm.sqrt(one_minus * yy + xy * xy) + xy) / one_minus

    return FinslerMetric(
        name="funk",
        dim=dim,
        params={},
        domain=Ball(radius=1.0, safe_radius=0.5),
        fn=fn,
        family="funk",
    )


def make_perturbed_quartic(dim: int = 2, eps: float = 0.2) -> FinslerMetric:
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")

    def fn(x, y):
        yy = _dot(y, y)
        quart = _dot([v * v for v in y], [v * v for v in y])
        if eps == 0.0:
            return jm.sqrt(yy)
        return jm.sqrt(yy + eps * jm.sqrt(quart))

    m = FinslerMetric(
        name="perturbed-quartic",
        dim=dim,
        params={"eps": eps},
        domain=Ball(radius=2.0, safe_radius=1.0),
        fn=fn,
        family="quartic",
        x_independent=True,
    )
    if eps > 0.0:
        _check_quartic_convexity(m)
    return m


def _check_quartic_convexity(m: FinslerMetric) -> None:
    # deterministic sweep over fiber directions; x plays no role
    rng = np.random.default_rng(12345)
    x = tuple([0.0] * m.dim)
    for _ in range(128):
        y = rng.normal(size=m.dim)
        y /= np.linalg.norm(y)
        g = _half_hessian(m, ChartPoint(x, tuple(y)))
        if float(np.linalg.eigvalsh(g).min()) <= 1e-10:
            raise ValueError(
                f"perturbed-quartic eps={m.params['eps']} is not strongly convex"
            )


def make_broken_degenerate(dim: int = 2) -> FinslerMetric:
    return FinslerMetric(
        name="broken-degenerate",
        dim=dim,
        params={},
        domain=Ball(radius=2.0, safe_radius=1.0),
        fn=lambda x, y: y[0] + 0.0,
        family="broken",
        x_independent=True,
        pathological=True,
    )


_FACTORIES = {
    "euclidean": make_euclidean,
    "riemannian-sphere": make_riemannian_sphere,
    "riemannian-hyperbolic": make_riemannian_hyperbolic,
    "randers": make_randers,
    "funk": make_funk,
    "perturbed-quartic": make_perturbed_quartic,
    "broken-degenerate": make_broken_degenerate,
}


@dataclass(frozen=True)
class MetricDescriptor:
    name: str
    summary: str
    default_params: dict
    pathological: bool = False


def registry_list() -> list:
    return [
        MetricDescriptor("euclidean", "flat norm |y|", {"dim": 2}),
        MetricDescriptor("riemannian-sphere", "round-sphere chart, constant curvature +1", {"dim": 2}),
        MetricDescriptor("riemannian-hyperbolic", "half-plane model, constant curvature -1", {"dim": 2}),
        MetricDescriptor(
            "randers",
            "norm-plus-drift metric; curved base by default",
            {"dim": 2, "b": (0.3, 0.0), "base": "sphere"},
        ),
        MetricDescriptor("funk", "tautological metric of the unit ball", {"dim": 2}),
        MetricDescriptor(
            "perturbed-quartic",
            "fiber-quartic perturbation of the flat norm (x-independent)",
            {"dim": 2, "eps": 0.2},
        ),
        MetricDescriptor("broken-degenerate", "rank-1 Hessian, fails convexity (for error paths)", {"dim": 2}, True),
    ]


def get_metric(name: str, dim: int = 2, **params) -> FinslerMetric:
    if name not in _FACTORIES:
        raise KeyError(f"unknown metric {name!r}; known: {sorted(_FACTORIES)}")
    return _FACTORIES[name](dim=dim, **params)


def standard_metrics(dim: int = 2) -> list:
    """The well-posed registry instances, one per family, at the given dimension."""
    return [
        make_euclidean(dim),
        make_riemannian_sphere(dim),
        make_riemannian_hyperbolic(dim),
        make_randers(dim),
        make_funk(dim),
        make_perturbed_quartic(dim),
    ]


# ---------------------------------------------------------------------------
# config files


def metric_from_config(path: str) -> FinslerMetric:
    """Load a metric description from a TOML file with a [metric] table."""
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:  # pragma: no cover
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    if "metric" not in data:
        raise ValueError("config file needs a [metric] table")
    tbl = dict(data["metric"])
    name = tbl.pop("name")
    dim = int(tbl.pop("dim", 2))
    params = dict(tbl.pop("params", {}))
    # accept b1, b2, ... component style for vectors
    bcomp = sorted(k for k in params if k.startswith("b") and k[1:].isdigit())
    if bcomp:
        params["b"] = tuple(params.pop(k) for k in bcomp)
    domain_tbl = tbl.pop("domain", None)
    m = get_metric(name, dim=dim, **params)
    if domain_tbl:
        if "radius" in domain_tbl:
            r = float(domain_tbl["radius"])
            m.domain = Ball(radius=r, safe_radius=float(domain_tbl.get("safe_radius", 0.6 * r)))
        elif "box" in domain_tbl:
            box = domain_tbl["box"]
            m.domain = Box(lo=tuple(row[0] for row in box), hi=tuple(row[1] for row in box))
    return m
