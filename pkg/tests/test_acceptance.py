"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the ``acceptance criteria`` section of the pytest
terminal summary.
"""

import math
import time

import numpy as np

from korovkin.bounds import operator_mu, shisha_mond_bound
from korovkin.cli import ALGEBRAIC_PROBES, TRIGONOMETRIC_PROBES, EXAMPLES, ExperimentConfig, run_experiment
from korovkin.expr import evaluate_on, parse_expression
from korovkin.grid import (
    CIRCLE,
    UNIT,
    GridFunction,
    check_pointwise_inequality,
    fit_rate,
    modulus_of_continuity,
)
from korovkin.operators import (
    ALGEBRAIC,
    TRIGONOMETRIC,
    BernsteinFamily,
    WeightedCompositionOperator,
    interval_parameters,
    lp_parameter_functions,
)
from korovkin.toeplitz import (
    WEIGHT_VARIANT,
    UnitaryFrame,
    fourier_coefficients,
    frobenius_optimality_check,
    periodic_parameters,
    preconditioner,
    quadratic_form,
    toeplitz_build,
    weighted_family,
)

N_SWEEP = [8, 16, 32, 64, 128]


def _probe(text, domain):
    e = parse_expression(text)
    return GridFunction.sample(lambda x: evaluate_on(e, x), domain)


def test_criterion_1_fejer_closed_form(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    coeffs = fourier_coefficients(GridFunction.sample(np.cos, CIRCLE, 4096), 255)
    worst = 0.0
    for n in (2, 4, 8, 64, 256):
        x = rng.uniform(-math.pi, math.pi, 64)
        worst = max(worst, float(np.max(np.abs(quadratic_form(coeffs, n, x) - (n - 1) / n * np.cos(x)))))
    elapsed = time.perf_counter() - start
    ok = acceptance(1, worst <= 1e-10 and elapsed < 1.0, f"max error {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_trigonometric_mu(acceptance):
    start = time.perf_counter()
    a_sq = lambda x: np.sin(x / 2) ** 2  # noqa: E731
    plain = weighted_family(WEIGHT_VARIANT, periodic_parameters(lambda x: 0 * x))
    weighted = weighted_family(WEIGHT_VARIANT, periodic_parameters(a_sq))
    norm_e2a = float(np.max(np.exp(2 * a_sq(CIRCLE.points(1024)))))
    worst = 0.0
    for n in (8, 32, 128):
        mu0, _ = operator_mu(plain, n, TRIGONOMETRIC)
        mu1, _ = operator_mu(weighted, n, TRIGONOMETRIC)
        worst = max(worst, abs(mu0**2 - math.pi**2 / (2 * n)), abs(mu1**2 - math.pi**2 / 2 * norm_e2a / n))
    elapsed = time.perf_counter() - start
    ok = acceptance(2, worst <= 1e-8 and elapsed < 5.0, f"max |mu^2 error| {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_3_preconditioner_spectrum(acceptance):
    start = time.perf_counter()
    symbols = [np.ones_like, np.cos, lambda x: 2 - 2 * np.cos(x), lambda x: np.exp(np.cos(x))]
    spectrum_err, min_gap, all_ok = 0.0, math.inf, True
    for symbol in symbols:
        coeffs = fourier_coefficients(GridFunction.sample(symbol, CIRCLE, 4096), 63)
        for n in (2, 4, 8, 16, 64):
            frame = UnitaryFrame(n)
            A = toeplitz_build(coeffs, n).dense
            P = preconditioner(A, frame)
            qf = quadratic_form(coeffs, n, frame.points)
            spectrum_err = max(spectrum_err, float(np.max(np.abs(P.eigenvalues - qf))))
            rep = frobenius_optimality_check(A, P.matrix, frame, trials=200, seed=n)
            min_gap = min(min_gap, rep.min_gap)
            all_ok &= rep.ok
    elapsed = time.perf_counter() - start
    ok = spectrum_err <= 1e-10 and min_gap >= -1e-10 and all_ok and elapsed < 10.0
    acceptance(3, ok, f"spectrum error {spectrum_err:.2e}, min gap {min_gap:.2e}, {elapsed:.2f}s")
    assert ok


def test_criterion_4_bound_validity(acceptance):
    start = time.perf_counter()
    worst, failures, rows = math.inf, [], 0
    for example in EXAMPLES:
        res = run_experiment(ExperimentConfig(example, n=N_SWEEP))
        probes = TRIGONOMETRIC_PROBES if EXAMPLES[example][0] == TRIGONOMETRIC else ALGEBRAIC_PROBES
        assert {r["f"] for r in res.rows} == set(probes)
        for r in res.rows:
            rows += 1
            worst = min(worst, r["margin"])
            if r["margin"] < -1e-9:
                failures.append((example, r["n"], r["f"]))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60.0
    acceptance(4, ok, f"{rows} rows, smallest margin {worst:.3e}, {len(failures)} violations, {elapsed:.1f}s")
    assert ok, failures


def test_criterion_5_shisha_mond(acceptance):
    fam = BernsteinFamily(interval_parameters(lambda t: t))
    mu_err, violations = 0.0, []
    for n in N_SWEEP:
        for text in ALGEBRAIC_PROBES:
            f = _probe(text, UNIT)
            rep = shisha_mond_bound(fam, f, n)
            mu_err = max(mu_err, abs(rep.mu - 1 / (2 * math.sqrt(n))))
            exact_omega = modulus_of_continuity(f, rep.mu)
            if rep.observed > 2 * exact_omega + 1e-9 or not rep.passed:
                violations.append((n, text))
    ok = mu_err <= 1e-10 and not violations
    acceptance(5, ok, f"max |mu - 1/(2 sqrt n)| {mu_err:.2e}, {len(violations)} violations")
    assert ok, violations


def _circulant_rate():
    fam = weighted_family(WEIGHT_VARIANT, periodic_parameters(lambda x: 0 * x))
    return fit_rate([(n, operator_mu(fam, n, TRIGONOMETRIC).mu) for n in (16, 64, 256)]).exponent


def _exp_bernstein_rate():
    res = run_experiment(ExperimentConfig("exp-bernstein", n=[16, 64, 256], a="1", an_template="1", f=["1"]))
    return next(r["exponent"] for r in res.rates if r["quantity"] == "mu")


def _lp_g_log2_slope():
    fam = BernsteinFamily(lp_parameter_functions("G", np.ones(24), d=24))
    ns = np.arange(4, 17)
    log2_mu2 = [2 * math.log2(operator_mu(fam, int(n), ALGEBRAIC).mu) for n in ns]
    return float(np.polyfit(ns, log2_mu2, 1)[0])


def test_criterion_6_rates(acceptance):
    circ = _circulant_rate()
    expb = _exp_bernstein_rate()
    lpg = _lp_g_log2_slope()
    parts = {
        "circulant mu exponent": (circ, abs(circ + 0.5) <= 0.15, "-0.5"),
        "exp-bernstein mu exponent": (expb, abs(expb + 1.0) <= 0.15, "-1"),
        "lp-G log2(mu^2) slope per n": (lpg, abs(lpg + 1.0) <= 0.2, "-1.0"),
    }
    ok = all(p[1] for p in parts.values())
    detail = "; ".join(f"{k} {v:.3f} (target {t}) {'ok' if good else 'MISS'}" for k, (v, good, t) in parts.items())
    acceptance(6, ok, detail)
    assert ok, detail


def test_criterion_7_structural_identities(acceptance):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        size = int(rng.integers(1, 200))
        w = rng.uniform(0.01, 3.0, size)
        alg = WeightedCompositionOperator(w, rng.uniform(0, 1, size))
        trig = WeightedCompositionOperator(w, rng.uniform(-math.pi, math.pi, size), CIRCLE)
        worst = max(worst, alg.structural_defect(ALGEBRAIC), trig.structural_defect(TRIGONOMETRIC))
    ok = worst <= 1e-12
    acceptance(7, ok, f"max defect {worst:.2e} over 50 pairs")
    assert ok


def _random_function(rng):
    periodic = bool(rng.integers(0, 2))
    domain = CIRCLE if periodic else UNIT
    size = int(rng.integers(8, 400))
    kind = rng.integers(0, 3)
    x = domain.points(size)
    if kind == 0:
        v = np.cumsum(rng.normal(size=size))
    elif kind == 1:
        v = rng.uniform(-5, 5, size)
    else:
        k = rng.integers(1, 6, 3)
        v = np.sin(k[0] * x) + np.abs(np.cos(k[1] * x)) ** 0.5 + 0.1 * k[2] * x * periodic
    return GridFunction(domain, v)


def test_criterion_8_modulus_properties(acceptance):
    rng = np.random.default_rng(8)
    failures = []
    for trial in range(100):
        f = _random_function(rng)
        lam = float(rng.choice([0.5, 1.0, 2.0, 2.7, 5.0]))
        delta = float(rng.uniform(1e-3, 1.5))
        d_grid = int(rng.integers(1, 40)) * f.spacing
        checks = [
            modulus_of_continuity(f, 0.5 * delta) <= modulus_of_continuity(f, delta),
            modulus_of_continuity(f, delta) <= 2 * np.max(np.abs(f.values)) + 1e-12,
            modulus_of_continuity(f, lam * d_grid)
            <= (1 + math.floor(lam)) * modulus_of_continuity(f, d_grid) + 1e-12,
            modulus_of_continuity(f, lam * delta, snap=True)
            <= (1 + math.floor(lam)) * modulus_of_continuity(f, delta, snap=True) + 1e-12,
            check_pointwise_inequality(f, delta).holds,
        ]
        if not all(checks):
            failures.append((trial, checks))
    ok = not failures
    acceptance(8, ok, f"100 random (f, delta, lambda) triples, {len(failures)} failures")
    assert ok, failures

