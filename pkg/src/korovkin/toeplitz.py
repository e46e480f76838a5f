"""Toeplitz matrices from symbols, the circulant frame and its preconditioner.

The quadratic-form operator ``L_n[U_n](f)(x) = v(x) A_n(f) v(x)^*`` equals the
Fejer (Cesaro) mean ``(1/n) sum_{|m|<n} (n-|m|) f^(m) e^{imx}``; the closed
form is the production path and the dense sandwich is kept as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .grid import CIRCLE, GridFunction
from .operators import ParameterFunction, PositiveOperatorFamily, WeightedCompositionOperator

_TWO_PI = 2 * math.pi


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """``f^(m)`` for ``-max_m <= m <= max_m``; ``values[max_m]`` is ``f^(0)``."""

    values: np.ndarray
    max_m: int

    def __getitem__(self, m: int) -> complex:
        if abs(m) > self.max_m:
            raise IndexError(f"coefficient {m} not available (max {self.max_m})")
        return complex(self.values[m + self.max_m])

    def window(self, max_m: int) -> np.ndarray:
        if max_m > self.max_m:
            raise ValueError(f"need coefficients up to |m| = {max_m}, have {self.max_m}")
        return self.values[self.max_m - max_m:self.max_m + max_m + 1]


def fourier_coefficients(symbol: GridFunction, max_m: int) -> FourierCoefficients:
    """Rectangle-rule Fourier coefficients of a symbol sampled on the periodic grid."""
    if not symbol.domain.periodic:
        raise ValueError("symbols must be sampled on the periodic grid of [-pi, pi)")
    N = symbol.size
    if max_m < 0 or N < 4 * max_m:
        raise ValueError(f"{N} samples are too few for coefficients up to |m| = {max_m}")
    spectrum = np.fft.fft(symbol.values) / N
    m = np.arange(-max_m, max_m + 1)
    # grid starts at -pi, so shifting to x_0 = 0 costs a factor (-1)^m
    c = spectrum[m % N] * np.where(m % 2, -1.0, 1.0)
    c = 0.5 * (c + np.conj(c[::-1]))
    c.setflags(write=False)
    return FourierCoefficients(c, max_m)


@dataclass(frozen=True, eq=False)
class ToeplitzMatrix:
    order: int
    coeffs: FourierCoefficients
    dense: np.ndarray


def toeplitz_build(coeffs: FourierCoefficients, n: int) -> ToeplitzMatrix:
    """``(A_n(f))_{i,j} = f^(i - j)``."""
    if n < 1:
        raise ValueError("order must be positive")
    c = coeffs.window(n - 1)
    mid = n - 1
    col = c[mid:]            # f^(0), f^(1), ..., f^(n-1)
    row = c[mid::-1]         # f^(0), f^(-1), ..., f^(-(n-1))
    return ToeplitzMatrix(n, coeffs, scipy.linalg.toeplitz(col, row))


def wrap(x):
    """Map angles into ``[-pi, pi)``."""
    return np.mod(np.asarray(x, dtype=float) + math.pi, _TWO_PI) - math.pi


@dataclass(frozen=True)
class UnitaryFrame:
    """Circulant frame: columns of ``U`` are ``v(x_k)^*`` with ``x_k = 2 pi k / n``."""

    order: int

    @property
    def points(self) -> np.ndarray:
        return wrap(_TWO_PI * np.arange(self.order) / self.order)

    def v(self, x) -> np.ndarray:
        """Row vectors ``(e^{ijx} / sqrt(n))_j``; shape ``x.shape + (n,)``."""
        x = np.asarray(x, dtype=float)
        j = np.arange(self.order)
        return np.exp(1j * x[..., None] * j) / math.sqrt(self.order)

    @property
    def matrix(self) -> np.ndarray:
        return self.v(self.points).conj().T

    def unitarity_defect(self) -> float:
        U = self.matrix
        return float(np.linalg.norm(U @ U.conj().T - np.eye(self.order)))


def fejer_mean(coeffs: FourierCoefficients, n: int, x) -> np.ndarray:
    """``(1/n) sum_{|m|<n} (n-|m|) f^(m) e^{imx}``, returned as complex."""
    c = coeffs.window(n - 1)
    m = np.arange(-(n - 1), n)
    taper = (n - np.abs(m)) / n
    x = np.asarray(x, dtype=float)
    return np.exp(1j * x[..., None] * m) @ (taper * c)


def _real(z, what: str) -> np.ndarray:
    resid = float(np.max(np.abs(np.imag(z)), initial=0.0))
    if resid >= 1e-8:
        raise ValueError(f"{what} has imaginary residual {resid:.3g}; input is not Hermitian")
    return np.real(z)


def quadratic_form(coeffs: FourierCoefficients, n: int, x):
    """``v(x) A_n(f) v(x)^*`` via the Fejer closed form."""
    out = _real(fejer_mean(coeffs, n, x), "quadratic form")
    return float(out) if np.ndim(out) == 0 else out


def sandwich_form(matrix: np.ndarray, x):
    """``v(x) A v(x)^*`` by direct matrix products."""
    matrix = np.asarray(matrix)
    v = UnitaryFrame(matrix.shape[0]).v(x)
    z = np.einsum("...i,ij,...j->...", v, matrix, v.conj())
    out = _real(z, "quadratic form")
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# preconditioner


class Preconditioner(NamedTuple):
    matrix: np.ndarray
    eigenvalues: np.ndarray


def preconditioner(matrix, frame: UnitaryFrame) -> Preconditioner:
    """Frobenius-optimal ``P = U diag(U^* A U) U^*`` in the algebra of ``frame``."""
    A = np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    if A.shape[0] != frame.order:
        raise ValueError("frame order does not match the matrix")
    U = frame.matrix
    lam = np.einsum("ji,jk,ki->i", U.conj(), A, U)
    if np.allclose(A, A.conj().T, atol=1e-12, rtol=0):
        lam = _real(lam, "preconditioner spectrum")
    P = (U * lam) @ U.conj().T
    return Preconditioner(P, lam)


def circulant_defect(P) -> float:
    """Largest deviation of ``P`` from constancy along wrapped diagonals."""
    P = np.asarray(P)
    n = P.shape[0]
    i = np.arange(n)
    worst = 0.0
    for s in range(n):
        diag = P[i, (i + s) % n]
        worst = max(worst, float(np.max(np.abs(diag - diag[0]))))
    return worst


def _frob(X, Y) -> complex:
    return complex(np.sum(X * np.conj(Y)))


class OptimalityReport(NamedTuple):
    min_gap: float
    max_residual: float
    orthogonality: float
    seed: int
    trials: int

    @property
    def ok(self) -> bool:
        return self.min_gap >= -1e-10 and self.max_residual < 1e-8 and self.orthogonality < 1e-8


def frobenius_optimality_check(A, P, frame: UnitaryFrame, trials: int = 200, seed: int = 0) -> OptimalityReport:
    """Compare ``||A - P||_F`` with ``||A - C||_F`` for random members ``C`` of the algebra.

    Residuals are relative: ``|<A-P, C>_F| / (||A||_F ||C||_F)``.
    """
    A = np.asarray(A)
    P = np.asarray(P)
    U = frame.matrix
    rng = np.random.default_rng(seed)
    R = A - P
    base = np.linalg.norm(R)
    normA = max(np.linalg.norm(A), 1e-300)
    gaps, resids = [], []
    for _ in range(trials):
        d = rng.uniform(-1.0, 1.0, frame.order)
        C = (U * d) @ U.conj().T
        gaps.append(np.linalg.norm(A - C) - base)
        resids.append(abs(_frob(R, C)) / (normA * np.linalg.norm(C)))
    orth = abs(_frob(R, P)) / (normA * max(np.linalg.norm(P), 1e-300))
    return OptimalityReport(
        float(min(gaps)) if gaps else 0.0,
        float(max(resids)) if resids else 0.0,
        float(orth),
        seed,
        trials,
    )


# --------------------------------------------------------------------------
# quadratic-form operator families


class CirculantFamily(PositiveOperatorFamily):
    """``L_n(f)(t) = w_n(t) * v(nu_n(t)) A_n(f) v(nu_n(t))^*`` on ``C_2pi``.

    ``weight(n)`` and ``node(n)`` return arrays over the T-grid.
    """

    source = CIRCLE

    def __init__(self, weight: Callable[[int], np.ndarray], node: Callable[[int], np.ndarray],
                 limit: WeightedCompositionOperator):
        self.weight = weight
        self.node = node
        self.limit = limit

    def apply(self, n, f):
        if n < 1:
            raise ValueError("n must be >= 1")
        if not isinstance(f, GridFunction) or not f.domain.periodic:
            raise ValueError("circulant families act on periodic grid functions")
        coeffs = fourier_coefficients(f, n - 1)
        return self.weight(n) * quadratic_form(coeffs, n, self.node(n))


WEIGHT_VARIANT = "w"
NODE_VARIANT = "node"


def periodic_parameters(a, an=None, size: int = 1024, low: float = 0.0, high: float = 1.0) -> ParameterFunction:
    """Parameter maps on the periodic grid; node families may widen the range to ``[-pi, pi]``."""
    return ParameterFunction(CIRCLE.points(size), a, an, low=low, high=high)


def weighted_family(variant: str, params: ParameterFunction) -> CirculantFamily:
    """Circulant quadratic-form families.

    ``variant="w"``: ``L_n = e^{a_n(x)} v(x) A_n(f) v(x)^*`` with limit
    ``A(f) = e^{a(x)} f(x)`` (``a_n = a`` gives the fixed-weight example,
    ``a = 0`` the plain Fejer mean).  ``variant="node"``:
    ``L_n = v(a_n(t)) A_n(f) v(a_n(t))^*`` with limit ``A(f) = f(a(t))``.
    """
    points = np.asarray(params.points, dtype=float)
    a = params.limit()
    if variant == WEIGHT_VARIANT:
        limit = WeightedCompositionOperator(np.exp(a), points, CIRCLE)
        return CirculantFamily(lambda n: np.exp(params.at(n)), lambda n: points, limit)
    if variant == NODE_VARIANT:
        limit = WeightedCompositionOperator(np.ones_like(a), a, CIRCLE)
        return CirculantFamily(lambda n: 1.0, params.at, limit)
    raise ValueError(f"unknown circulant variant {variant!r}")
