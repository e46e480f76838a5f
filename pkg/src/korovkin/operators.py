"""Positive linear operator families ``L_n: C[0,1] -> C(T)`` and their limits.

``T`` is always a finite set of points: an interval grid, a periodic grid or
a lattice of truncated sequences.  Operators return arrays indexed by those
points.  ``f`` may be a :class:`GridFunction` (evaluated off-grid by linear
interpolation, which keeps every operator positive and linear) or a plain
vectorised callable when exact values are wanted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import stats

from .grid import UNIT, GridFunction, Interval

ALGEBRAIC = "algebraic"
TRIGONOMETRIC = "trigonometric"
_TINY_P = 1e-300


def evaluator(f) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, GridFunction):
        return f.at

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)

    return ev


def _check_unit(name: str, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError(f"{name} must lie in [0, 1]")
    return p


def binomial_weights(n: int, p) -> np.ndarray:
    """``C(n,k) p^k (1-p)^(n-k)`` for k = 0..n, broadcast over ``p``.

    Returns an array of shape ``p.shape + (n + 1,)``.
    """
    p = _check_unit("p", p)
    # scipy's pmf overflows on subnormal p; such p are 0 for every weight
    p = np.where(p < _TINY_P, 0.0, p)
    k = np.arange(n + 1)
    return stats.binom.pmf(k, n, p[..., None])


def _scaled_binomial(n: int, u, v) -> np.ndarray:
    """Weights ``C(n,k) u^k v^(n-k)`` with u, v >= 0 (need not sum to one)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    total = u + v
    p = np.divide(u, total, out=np.zeros_like(total), where=total > 0)
    return (total**n)[..., None] * binomial_weights(n, np.clip(p, 0.0, 1.0))


# --------------------------------------------------------------------------
# Kantorovich inner laws


@dataclass(frozen=True)
class KantorovichMoments:
    M: float
    first: float
    second: float
    alpha: float
    beta: float
    gamma: float
    alpha_n: float | None = None
    beta_n: float | None = None
    gamma_n: float | None = None

    def __post_init__(self):
        if self.M < 0 or self.second < 0:
            raise ValueError("M_n and the second moment must be nonnegative")
        if not -1e-12 <= self.first <= self.M + 1e-12:
            raise ValueError("first moment must lie in [0, M_n]")


def _simpson(panels: int) -> tuple[np.ndarray, np.ndarray]:
    if panels < 1:
        raise ValueError("panels must be positive")
    x = np.linspace(0.0, 1.0, 2 * panels + 1)
    w = np.ones_like(x)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w / (6.0 * panels)


@dataclass(frozen=True)
class ScaledUniformLaw:
    """``h_n(x) = c_n x`` on ``([0,1], dx)`` with ``M_n = d_n``.

    The inner integral uses composite Simpson, exact for the quadratic
    test functions.
    """

    c: Callable[[int], float]
    d: Callable[[int], float]
    alpha: float
    beta: float = 0.0
    panels: int = 64

    def bound(self, n: int) -> float:
        return float(self.d(n))

    def atoms(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        c, d = float(self.c(n)), float(self.d(n))
        if c < 0 or c > d:
            raise ValueError("Kantorovich case 1 needs 0 <= c_n <= d_n")
        x, w = _simpson(self.panels)
        return c * x, w

    def moments(self, n: int) -> KantorovichMoments:
        c, d = float(self.c(n)), float(self.d(n))
        return KantorovichMoments(d, c / 2, c * c / 3, self.alpha, self.beta, self.beta**2)


@lru_cache(maxsize=256)
def _irwin_hall_atoms(n: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _simpson(panels)
    dist = np.array([1.0])
    for _ in range(n):
        dist = np.convolve(dist, w)
    offsets = np.arange(dist.size) * (x[1] - x[0])
    dist.setflags(write=False)
    offsets.setflags(write=False)
    return offsets, dist


@dataclass(frozen=True)
class IrwinHallLaw:
    """``h_n = x_1 + ... + x_n`` on ``[0,1]^n`` with ``M_n = n``.

    The n-fold integral is replaced by the law of a sum of n independent
    Simpson-rule variables on [0,1].  Their first three moments equal those
    of the uniform law, so the test-function images coincide with the exact
    Irwin-Hall moments and the operator stays positive.
    """

    panels: int = 8
    alpha: float = 1.0
    beta: float = 0.5

    def bound(self, n: int) -> float:
        return float(n)

    def atoms(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return _irwin_hall_atoms(n, self.panels)

    def moments(self, n: int) -> KantorovichMoments:
        return kantorovich_case2_moments(n)


def kantorovich_case2_moments(n: int) -> KantorovichMoments:
    if n < 1:
        raise ValueError("n must be >= 1")
    return KantorovichMoments(
        M=float(n),
        first=n / 2,
        second=n * n / 4 + n / 12,
        alpha=1.0,
        beta=0.5,
        gamma=0.25,
        alpha_n=0.0,
        beta_n=0.0,
        gamma_n=1.0 / (12 * n),
    )


def kantorovich_moment_testfunctions(n: int, moments: KantorovichMoments, p) -> tuple:
    """Closed-form ``(L_n(e_0), L_n(e_1), L_n(e_2))`` at binomial parameter ``p``."""
    p = _check_unit("a_n(t)", p)
    ek = n * p
    ek2 = n * p * (1 - p) + (n * p) ** 2
    denom = n + moments.M
    e0 = np.ones_like(p)
    e1 = (ek + moments.first) / denom
    e2 = (ek2 + 2 * ek * moments.first + moments.second) / denom**2
    return e0, e1, e2


def _inner_integrals(n: int, f, law) -> np.ndarray:
    offsets, weights = law.atoms(n)
    nodes = (np.arange(n + 1)[:, None] + offsets[None, :]) / (n + law.bound(n))
    return evaluator(f)(np.clip(nodes, 0.0, 1.0)) @ weights


def _point_values(n: int, f) -> np.ndarray:
    return evaluator(f)(np.arange(n + 1) / n)


# --------------------------------------------------------------------------
# scalar operator evaluations


def bernstein_apply(n: int, f, p: float) -> float:
    return float(binomial_weights(n, p) @ _point_values(n, f))


def kantorovich_case1_apply(n: int, f, p: float, c: float, d: float, panels: int = 64) -> float:
    law = ScaledUniformLaw(lambda _: c, lambda _: d, alpha=0.0, panels=panels)
    return float(binomial_weights(n, p) @ _inner_integrals(n, f, law))


def _exp_weights(n: int, a) -> np.ndarray:
    a = _check_unit("a_n(t)", a)
    return _scaled_binomial(n, a / n, 1 - a / (2 * n))


def exp_kantorovich_apply(n: int, f, a: float, law=None) -> float:
    law = IrwinHallLaw() if law is None else law
    return float(_exp_weights(n, a) @ _inner_integrals(n, f, law))


def exp_bernstein_apply(n: int, f, a: float) -> float:
    return float(_exp_weights(n, a) @ _point_values(n, f))


def _two_weights(n: int, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a < 0) or np.any(b > 1):
        raise ValueError("two-weight Bernstein needs a(t) >= 0 and b(t) <= 1")
    return _scaled_binomial(n, a / (a + 1), (1 - b / n) / (a + 1))


def two_weight_bernstein_apply(n: int, f, a: float, b: float) -> float:
    return float(_two_weights(n, a, b) @ _point_values(n, f))


# --------------------------------------------------------------------------
# parameter functions and limit operators


@dataclass(frozen=True)
class ParameterFunction:
    """Parameter maps sampled on the points of ``T``.

    ``an(n, points)`` and ``a(points)`` must land in ``[low, high]``; this is
    checked on every evaluation.  ``deviation(n)``, when known, is a formula
    for ``||a_n - a||`` used for reporting.
    """

    points: np.ndarray
    a: Callable[[np.ndarray], np.ndarray]
    an: Callable[[int, np.ndarray], np.ndarray] | None = None
    deviation: Callable[[int], float] | None = None
    low: float = 0.0
    high: float = 1.0

    @property
    def size(self) -> int:
        return len(self.points)

    def _check(self, name, v):
        v = np.broadcast_to(np.asarray(v, dtype=float), (self.size,))
        if not np.all(np.isfinite(v)) or np.any(v < self.low) or np.any(v > self.high):
            raise ValueError(f"{name} leaves [{self.low}, {self.high}] on the T-grid")
        return v

    def limit(self) -> np.ndarray:
        return self._check("a", self.a(self.points))

    def at(self, n: int) -> np.ndarray:
        if self.an is None:
            return self.limit()
        return self._check(f"a_{n}", self.an(n, self.points))


@dataclass(frozen=True, eq=False)
class WeightedCompositionOperator:
    """``A(f)(t) = w(t) f(phi(t))`` with ``w``, ``phi`` sampled on ``T``."""

    weight: np.ndarray
    node: np.ndarray
    source: Interval = UNIT

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weight, dtype=float))
        phi = np.broadcast_to(np.asarray(self.node, dtype=float), w.shape).copy()
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not np.all(np.isfinite(phi)):
            raise ValueError("weight and node must be finite 1-D arrays")
        if np.any(w < 0):
            raise ValueError("weight must be nonnegative")
        if not self.source.periodic:
            tol = 1e-12 * self.source.length
            if np.any(phi < self.source.lo - tol) or np.any(phi > self.source.hi + tol):
                raise ValueError("node leaves the source interval")
            phi = np.clip(phi, self.source.lo, self.source.hi)
        w.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "node", phi)

    @classmethod
    def identity(cls, points, source: Interval = UNIT) -> WeightedCompositionOperator:
        points = np.asarray(points, dtype=float)
        return cls(np.ones_like(points), points, source)

    @property
    def size(self) -> int:
        return self.weight.size

    def apply(self, f) -> np.ndarray:
        if isinstance(f, GridFunction) and f.domain != self.source:
            raise ValueError("f lives on a different domain than the operator")
        return self.weight * evaluator(f)(self.node)

    def test_images(self, mode: str = ALGEBRAIC) -> tuple[np.ndarray, ...]:
        """Closed-form images of the three test functions."""
        w, phi = self.weight, self.node
        if mode == ALGEBRAIC:
            return w, w * phi, w * phi**2
        return w, w * np.cos(phi), w * np.sin(phi)

    def structural_defect(self, mode: str = ALGEBRAIC) -> float:
        t0, t1, t2 = self.test_images(mode)
        if mode == ALGEBRAIC:
            return float(np.max(np.abs(t0 * t2 - t1**2)))
        return float(np.max(np.abs(t0**2 - t1**2 - t2**2)))


# --------------------------------------------------------------------------
# families


class PositiveOperatorFamily:
    """An indexed family ``n -> L_n`` together with its limit operator."""

    source: Interval = UNIT
    limit: WeightedCompositionOperator

    @property
    def size(self) -> int:
        return self.limit.size

    def apply(self, n: int, f) -> np.ndarray:
        raise NotImplementedError

    def _check_f(self, f):
        if isinstance(f, GridFunction) and f.domain != self.source:
            raise ValueError("f lives on a different domain than the family")


class BinomialFamily(PositiveOperatorFamily):
    """``L_n(f)(t) = sum_k W_n[t, k] * inner_k(f)`` with nonnegative weights."""

    def weights(self, n: int) -> np.ndarray:
        raise NotImplementedError

    def inner(self, n: int, f) -> np.ndarray:
        return _point_values(n, f)

    def apply(self, n: int, f) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        self._check_f(f)
        return self.weights(n) @ self.inner(n, f)


class BernsteinFamily(BinomialFamily):
    """Bernstein sums at ``p = a_n(t)``; limit ``A(f) = f(a(t))``.

    With ``a_n = a = t`` on an interval grid this is the classical Bernstein
    operator and the limit is the identity.
    """

    def __init__(self, params: ParameterFunction):
        self.params = params
        self.limit = WeightedCompositionOperator(np.ones(params.size), params.limit())

    def weights(self, n):
        return binomial_weights(n, self.params.at(n))


class KantorovichFamily(BinomialFamily):
    """Kantorovich-type sums with an inner law; ``A(f) = f((a + beta)/(alpha + 1))``."""

    def __init__(self, params: ParameterFunction, law):
        self.params = params
        self.law = law
        node = (params.limit() + law.beta) / (law.alpha + 1)
        self.limit = WeightedCompositionOperator(np.ones(params.size), node)

    def weights(self, n):
        return binomial_weights(n, self.params.at(n))

    def inner(self, n, f):
        return _inner_integrals(n, f, self.law)


class ExpKantorovichFamily(KantorovichFamily):
    """Weights ``(a_n/n)^k (1 - a_n/(2n))^(n-k)``; ``A(f) = e^(a/2) f(beta/(alpha+1))``."""

    def __init__(self, params: ParameterFunction, law=None):
        self.params = params
        self.law = IrwinHallLaw() if law is None else law
        a = params.limit()
        node = np.full(params.size, self.law.beta / (self.law.alpha + 1))
        self.limit = WeightedCompositionOperator(np.exp(a / 2), node)

    def weights(self, n):
        return _exp_weights(n, self.params.at(n))


class ExpBernsteinFamily(BinomialFamily):
    """Weights ``(a_n/n)^k (1 - a_n/(2n))^(n-k)`` at nodes k/n; ``A(f) = e^(a/2) f(0)``."""

    def __init__(self, params: ParameterFunction):
        self.params = params
        a = params.limit()
        self.limit = WeightedCompositionOperator(np.exp(a / 2), np.zeros(params.size))

    def weights(self, n):
        return _exp_weights(n, self.params.at(n))


class TwoWeightBernsteinFamily(BinomialFamily):
    """``(a+1)^-n sum C(n,k) a^k (1 - b/n)^(n-k) f(k/n)``; ``A(f) = e^(-b/(a+1)) f(a/(a+1))``."""

    def __init__(self, points, a, b):
        points = np.asarray(points)
        self.points = points
        self.a = np.broadcast_to(np.asarray(a, dtype=float), (len(points),)).copy()
        self.b = np.broadcast_to(np.asarray(b, dtype=float), (len(points),)).copy()
        if np.any(self.a < 0) or np.any(self.b > 1):
            raise ValueError("two-weight Bernstein needs a(t) >= 0 and b(t) <= 1")
        self.limit = WeightedCompositionOperator(
            np.exp(-self.b / (self.a + 1)), self.a / (self.a + 1)
        )

    def weights(self, n):
        return _two_weights(n, self.a, self.b)


class ScaledFamily(PositiveOperatorFamily):
    """``L_n = s(n) * A``; with ``s == 1`` this is the trivial family ``L_n = A``."""

    def __init__(self, limit: WeightedCompositionOperator, scale: Callable[[int], float] = lambda n: 1.0):
        self.limit = limit
        self.source = limit.source
        self.scale = scale

    def apply(self, n, f):
        self._check_f(f)
        return self.scale(n) * self.limit.apply(f)


# --------------------------------------------------------------------------
# l_p examples


H_MODE = "H"
G_MODE = "G"


def lp_lattice(y, d: int, levels: int = 3, cap: int = 6561) -> np.ndarray:
    """Finite lattice of truncated sequences ``0 <= x_k <= y_k``, ``k = 1..d``.

    Each coordinate takes ``levels`` equispaced values in ``[0, y_k]``.  When
    the full product would exceed ``cap`` points, the leading coordinates are
    gridded independently and the remaining ones share a common level, which
    keeps every corner relevant to the linear maps ``a_n`` and ``a``.
    """
    if d < 1 or levels < 2:
        raise ValueError("need d >= 1 and at least 2 levels per coordinate")
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > 1):
        raise ValueError("coordinate bounds y_k must lie in [0, 1]")
    yd = np.zeros(d)
    yd[: min(d, y.size)] = y[:d]
    frac = np.linspace(0.0, 1.0, levels)
    if levels**d <= cap:
        head, tail = d, 0
    else:
        head = max(1, int(math.floor(math.log(cap) / math.log(levels))) - 1)
        tail = d - head
    grids = np.meshgrid(*([frac] * (head + (1 if tail else 0))), indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    scale = np.empty((combos.shape[0], d))
    scale[:, :head] = combos[:, :head]
    if tail:
        scale[:, head:] = combos[:, head:head + 1]
    return scale * yd


@dataclass(frozen=True)
class _LpMaps:
    mode: str
    d: int

    def a(self, x):
        if self.mode == H_MODE:
            return np.zeros(len(x))
        return x @ (0.5 ** np.arange(1, self.d + 1))

    def an(self, n, x):
        if self.mode == H_MODE:
            return x[:, n - 1] if n <= self.d else np.zeros(len(x))
        m = min(n, self.d)
        return x[:, :m] @ (0.5 ** np.arange(1, m + 1))


def lp_parameter_functions(mode: str, y, d: int = 8, levels: int = 3, cap: int = 6561) -> ParameterFunction:
    """Parameter maps of the l_p Bernstein examples over a lattice of ``T_y``.

    ``mode="H"``: ``a_n(x) = x_n``, ``a = 0``.  ``mode="G"``:
    ``a_n(x) = sum_{k<=n} x_k 2^-k`` and ``a`` the same sum truncated at ``d``.
    """
    if mode not in (H_MODE, G_MODE):
        raise ValueError(f"unknown l_p mode {mode!r}")
    y = np.asarray(y, dtype=float)
    points = lp_lattice(y, d, levels, cap)
    maps = _LpMaps(mode, d)
    yd = np.zeros(d)
    yd[: min(d, y.size)] = y[:d]

    if mode == H_MODE:
        def deviation(n):
            return float(yd[n - 1]) if n <= d else 0.0
    else:
        def deviation(n):
            k = np.arange(n + 1, d + 1)
            return float(yd[n:] @ (0.5**k)) if n < d else 0.0

    return ParameterFunction(points, maps.a, maps.an, deviation)


def interval_parameters(a, an=None, points=None, size: int = 129) -> ParameterFunction:
    """Parameter maps on an interval grid of ``T = [0, 1]``."""
    points = UNIT.points(size) if points is None else np.asarray(points, dtype=float)
    return ParameterFunction(points, a, an)
