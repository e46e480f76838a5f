"""Grid-sampled functions, sup-norms, modulus of continuity and rate fits.

Every sup-norm in the package is a maximum over a uniform grid.  A
non-periodic grid on ``[lo, hi]`` includes both endpoints; a periodic grid on
``[-pi, pi)`` excludes the right endpoint so it doubles as a DFT sample set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

DEFAULT_N = 1025
DEFAULT_PERIODIC_N = 1024

# slack used when converting a distance to a whole number of grid steps
_STEP_EPS = 1e-9


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    periodic: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")
        if self.periodic and not (
            math.isclose(self.lo, -math.pi, abs_tol=1e-12)
            and math.isclose(self.hi, math.pi, abs_tol=1e-12)
        ):
            raise ValueError("periodic intervals must be [-pi, pi]")

    @classmethod
    def circle(cls) -> Interval:
        return cls(-math.pi, math.pi, periodic=True)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def default_size(self) -> int:
        return DEFAULT_PERIODIC_N if self.periodic else DEFAULT_N

    def points(self, n: int) -> np.ndarray:
        if n < 2:
            raise ValueError("a grid needs at least 2 samples")
        k = np.arange(n)
        if self.periodic:
            return self.lo + k * (self.length / n)
        return self.lo + k * (self.length / (n - 1))

    def spacing(self, n: int) -> float:
        return self.length / n if self.periodic else self.length / (n - 1)


UNIT = Interval(0.0, 1.0)
CIRCLE = Interval.circle()


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real samples of a function on a uniform grid of ``domain``.

    Off-grid evaluation (:meth:`at`) is piecewise-linear interpolation, with
    wrap-around on periodic domains.
    """

    domain: Interval
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("values must be a 1-D array with at least 2 samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def sample(cls, func: Callable, domain: Interval = UNIT, n: int | None = None) -> GridFunction:
        n = domain.default_size() if n is None else n
        x = domain.points(n)
        y = np.broadcast_to(np.asarray(func(x), dtype=float), x.shape)
        return cls(domain, y)

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def points(self) -> np.ndarray:
        return self.domain.points(self.size)

    @property
    def spacing(self) -> float:
        return self.domain.spacing(self.size)

    def at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.domain.periodic:
            return np.interp(x, self.points, self.values, period=2 * math.pi)
        lo, hi = self.domain.lo, self.domain.hi
        tol = 1e-12 * self.domain.length
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            raise ValueError(f"evaluation point outside [{lo}, {hi}]")
        return np.interp(x, self.points, self.values)

    def combinable(self, other: GridFunction) -> bool:
        return self.domain == other.domain and self.size == other.size

    def _other_values(self, other):
        if isinstance(other, GridFunction):
            if not self.combinable(other):
                raise ValueError("grid functions live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return GridFunction(self.domain, self.values + self._other_values(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.domain, self.values - self._other_values(other))

    def __rsub__(self, other):
        return GridFunction(self.domain, self._other_values(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.domain, self.values * self._other_values(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.domain, -self.values)

    def __abs__(self):
        return GridFunction(self.domain, np.abs(self.values))


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def _window(f: GridFunction, delta: float, snap: bool) -> int:
    steps = delta / f.spacing
    w = max(1, math.ceil(steps - _STEP_EPS)) if snap else math.floor(steps + _STEP_EPS)
    limit = f.size // 2 if f.domain.periodic else f.size - 1
    return max(0, min(w, limit))


def modulus_of_continuity(f: GridFunction, delta: float, snap: bool = False) -> float:
    """Largest ``|f(x_i) - f(x_j)|`` over grid pairs at distance ``<= delta``.

    Distances are circular on periodic domains.  With ``snap=True`` the
    window is rounded *up* to a whole number of grid steps; the result then
    dominates the continuous modulus of the piecewise-linear interpolant of
    ``f``, which is what the bound engines need.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    v = f.values
    best = 0.0
    for s in range(1, _window(f, delta, snap) + 1):
        if f.domain.periodic:
            d = np.abs(np.roll(v, -s) - v)
        else:
            d = np.abs(v[s:] - v[:-s])
        best = max(best, float(d.max()))
    return best


def _pair_steps(f: GridFunction) -> np.ndarray:
    idx = np.arange(f.size)
    steps = np.abs(idx[:, None] - idx[None, :])
    if f.domain.periodic:
        steps = np.minimum(steps, f.size - steps)
    return steps


class PointwiseCheck(NamedTuple):
    holds: bool
    worst_pair: tuple[float, float]
    slack: float


def check_pointwise_inequality(f: GridFunction, delta: float) -> PointwiseCheck:
    """Exhaustively check ``|f(x)-f(y)| <= (1 + d(x,y)^2/delta^2) * omega(f, delta)``.

    ``omega`` is the snapped grid modulus, so the check is meaningful for
    every ``delta > 0`` and not only for multiples of the grid spacing.
    Returns the verdict and the pair with the smallest slack.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    omega = modulus_of_continuity(f, delta, snap=True)
    dist = _pair_steps(f) * f.spacing
    lhs = np.abs(f.values[:, None] - f.values[None, :])
    rhs = (1.0 + dist**2 / delta**2) * omega
    slack = rhs - lhs
    i, j = np.unravel_index(np.argmin(slack), slack.shape)
    tol = 1e-12 * max(omega, sup_norm(f), 1.0)
    x = f.points
    return PointwiseCheck(bool(np.all(slack >= -tol)), (float(x[i]), float(x[j])), float(slack[i, j]))


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    samples: tuple[tuple[int, float], ...]


def fit_rate(samples: Sequence[tuple[int, float]]) -> RateFit:
    """Least-squares line through ``(log n, log value)``; the slope is the rate."""
    samples = tuple((int(n), float(v)) for n, v in samples)
    if len(samples) < 3:
        raise ValueError("a rate fit needs at least 3 samples")
    ns = np.array([s[0] for s in samples], dtype=float)
    vs = np.array([s[1] for s in samples])
    if len(set(ns.tolist())) != len(ns):
        raise ValueError("sample indices must be distinct")
    if np.any(ns <= 0) or np.any(~np.isfinite(vs)) or np.any(vs <= 0):
        raise ValueError("rate fit needs positive n and positive finite values")
    lx, ly = np.log(ns), np.log(vs)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return RateFit(float(slope), float(intercept), min(1.0, max(0.0, r2)), samples)
