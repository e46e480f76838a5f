"""Quantitative Korovkin bounds and their empirical verification.

Three engines share one pipeline: evaluate the family and its limit on the
three test functions, form the second-moment quantity ``mu_n``, and compare
the right-hand side against the observed sup-error on the T-grid.

The modulus of continuity inside every bound is the *snapped* grid modulus
(window rounded up to whole grid steps).  Operators see ``f`` through its
piecewise-linear interpolant, and the snapped modulus dominates the
continuous modulus of that interpolant, so each reported bound is a true
upper bound up to floating-point round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .grid import GridFunction, Interval, modulus_of_continuity, sup_norm
from .operators import ALGEBRAIC, TRIGONOMETRIC, PositiveOperatorFamily

TOLERANCE = 1e-9
DEGENERATE_MU2 = 1e-14
EXACT_EQUALITY = 1e-13
NEGATIVE_CLAMP = 1e-12


@dataclass(frozen=True)
class BoundReport:
    n: int
    mu: float
    m_const: float
    term_identity: float
    term_omega: float
    bound: float
    observed: float
    margin: float
    degenerate: bool = False
    tolerance: float = TOLERANCE

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"


class Mu(NamedTuple):
    mu: float
    degenerate: bool


def _mode_for(domain: Interval) -> str:
    return TRIGONOMETRIC if domain.periodic else ALGEBRAIC


def test_functions(domain: Interval, size: int | None = None) -> tuple[GridFunction, ...]:
    """``(e_0, e_1, e_2)`` on an interval, ``(h_0, h_1, h_2)`` on the circle."""
    if domain.periodic:
        fs = (np.ones_like, np.cos, np.sin)
    else:
        fs = (np.ones_like, lambda x: x, lambda x: x * x)
    return tuple(GridFunction.sample(g, domain, size) for g in fs)


def _check_mode(family: PositiveOperatorFamily, mode: str, f: GridFunction | None = None):
    if mode not in (ALGEBRAIC, TRIGONOMETRIC):
        raise ValueError(f"unknown mode {mode!r}")
    if _mode_for(family.source) != mode:
        raise ValueError(f"{mode} mode does not match the family's source domain")
    if f is not None and f.domain != family.source:
        raise ValueError("f lives on a different domain than the family")


def images(family: PositiveOperatorFamily, n: int, size: int | None = None):
    """Test-function images ``(L_n(t_j))_j`` and ``(A(t_j))_j`` on the T-grid."""
    tests = test_functions(family.source, size)
    L = tuple(family.apply(n, t) for t in tests)
    A = tuple(family.limit.apply(t) for t in tests)
    return L, A


def second_moment(L, A, mode: str) -> np.ndarray:
    """Pointwise ``L2 A0 - 2 L1 A1 + L0 A2`` or ``(pi^2/2)(L0 A0 - L1 A1 - L2 A2)``."""
    if mode == ALGEBRAIC:
        return L[2] * A[0] - 2 * L[1] * A[1] + L[0] * A[2]
    return (math.pi**2 / 2) * (L[0] * A[0] - L[1] * A[1] - L[2] * A[2])


def mu_from_images(L, A, mode: str) -> Mu:
    if np.any(A[0] <= 0):
        raise ValueError("the limit operator must be positive: A(test_0) > 0 on T")
    mu2 = float(np.max(np.abs(second_moment(L, A, mode))))
    if mu2 < DEGENERATE_MU2:
        return Mu(float(np.max(np.abs(L[0] - A[0]))), True)
    return Mu(math.sqrt(mu2), False)


def operator_mu(family: PositiveOperatorFamily, n: int, mode: str, size: int | None = None) -> Mu:
    """``mu_n`` of the operator-version bound, with the degenerate fallback."""
    _check_mode(family, mode)
    if np.any(family.limit.weight <= 0):
        raise ValueError("the limit operator must be positive: w(t) > 0 on T")
    return mu_from_images(*images(family, n, size), mode)


def _omega(f: GridFunction, mu: float) -> float:
    return modulus_of_continuity(f, mu, snap=True) if mu > 0 else 0.0


def operator_bound(family: PositiveOperatorFamily, f: GridFunction, n: int,
                   mode: str | None = None, tolerance: float = TOLERANCE) -> BoundReport:
    """Evaluate the operator-version bound for one ``(f, n)`` and compare it with the error."""
    mode = _mode_for(f.domain) if mode is None else mode
    _check_mode(family, mode, f)
    if np.any(family.limit.weight <= 0):
        raise ValueError("the limit operator must be positive: w(t) > 0 on T")
    L, A = images(family, n, f.size)
    mu, degenerate = mu_from_images(L, A, mode)
    m = 1.0 / float(np.min(A[0]))

    Af = family.limit.apply(f)
    observed = float(np.max(np.abs(family.apply(n, f) - Af)))
    dev0 = float(np.max(np.abs(L[0] - A[0])))
    omega = _omega(f, mu)
    normAf = float(np.max(np.abs(Af)))

    if degenerate:
        # any delta works when the quadratic term vanishes; delta = mu = ||L0 - A0||
        term_identity = dev0 * normAf
        term_omega = float(np.max(np.abs(L[0] * A[0]))) * omega
    elif dev0 < EXACT_EQUALITY:
        term_identity = 0.0
        term_omega = (float(np.max(A[0] ** 2)) + 1.0) * omega
    else:
        term_identity = dev0 * normAf
        term_omega = (float(np.max(np.abs(L[0] * A[0]))) + 1.0) * omega
    bound = m * (term_identity + term_omega)
    return BoundReport(n, mu, m, term_identity, term_omega, bound, observed,
                       bound - observed, degenerate, tolerance)


def shisha_mond_bound(family: PositiveOperatorFamily, f: GridFunction, n: int,
                      tolerance: float = TOLERANCE) -> BoundReport:
    """Classical bound ``||f||·||L_n 1 - 1|| + ||L_n 1 + 1||·omega(f, mu_n)`` for ``T = [a, b]``.

    The limit must have unit weight; the reference point at ``t`` is its node
    ``phi(t)``, which is ``t`` itself in the classical setting.
    """
    _check_mode(family, ALGEBRAIC, f)
    A = family.limit
    x = A.node
    if not np.all(A.weight == 1.0):
        raise ValueError("Shisha-Mond needs a limit operator with unit weight")
    e0, e1, e2 = test_functions(f.domain, f.size)
    L0, L1, L2 = (family.apply(n, t) for t in (e0, e1, e2))
    q = L2 - 2 * x * L1 + x * x * L0
    if np.min(q) < -NEGATIVE_CLAMP:
        raise ValueError(f"L_n((t-x)^2)(x) is negative ({np.min(q):.3g}); family is not positive")
    mu2 = float(np.max(np.clip(q, 0.0, None)))
    mu = math.sqrt(mu2)
    fx = A.apply(f)
    observed = float(np.max(np.abs(family.apply(n, f) - fx)))
    term_identity = sup_norm(f) * float(np.max(np.abs(L0 - 1)))
    term_omega = float(np.max(np.abs(L0 + 1))) * _omega(f, mu)
    bound = term_identity + term_omega
    return BoundReport(n, mu, 1.0, term_identity, term_omega, bound, observed,
                       bound - observed, mu2 == 0.0, tolerance)


@dataclass
class ConvergenceTable:
    n: list[int] = field(default_factory=list)
    test_deviations: list[tuple[float, float, float]] = field(default_factory=list)
    probe_deviations: list[dict[str, float]] = field(default_factory=list)
    monotone: bool = True


def _monotone(values: Sequence[float], factor: float = 1.5, floor: float = 1e-12) -> bool:
    return all(b <= factor * a + floor for a, b in zip(values, values[1:]))


def korovkin_convergence_check(family: PositiveOperatorFamily, mode: str, n_list: Sequence[int],
                               probes: Mapping[str, GridFunction], size: int | None = None) -> ConvergenceTable:
    """Deviations ``||L_n(g) - A(g)||`` for the test functions and probes along ``n_list``.

    ``monotone`` records whether every column shrinks up to a factor 1.5
    from one ``n`` to the next.
    """
    _check_mode(family, mode)
    table = ConvergenceTable()
    for n in n_list:
        L, A = images(family, n, size)
        table.n.append(n)
        table.test_deviations.append(tuple(float(np.max(np.abs(l - a))) for l, a in zip(L, A)))
        table.probe_deviations.append({
            name: float(np.max(np.abs(family.apply(n, g) - family.limit.apply(g))))
            for name, g in probes.items()
        })
    cols = [[row[j] for row in table.test_deviations] for j in range(3)]
    cols += [[row[k] for row in table.probe_deviations] for k in probes]
    table.monotone = all(_monotone(c) for c in cols)
    return table
