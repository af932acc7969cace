"""Fast invariant suites run by the ``check`` command.

Each check returns ``(name, passed, message)``.  The suites are small versions
of the test-suite properties so that a configured model can be vetted
without a test runner.
"""

from __future__ import annotations

import math

import numpy as np

from .bifurcation import PhiPsi, z_support
from .config import RunConfig
from .elasticity import PhysicalParams, validate_hypotheses
from .linear import (
    admissible_intervals,
    dispersion_lhs,
    double_points,
    f_k,
    linearized_diagonal,
)
from .reduction import ReducedProblem
from .spectral import TrigSeries, antiderivative0, differentiate, hilbert


def _random_series(rng, n, scale=1.0):
    return TrigSeries(scale * rng.standard_normal(), scale * rng.standard_normal(n),
                      scale * rng.standard_normal(n))


def check_spectral(cfg: RunConfig, rng):
    n = cfg.disc.n_modes
    u, v = _random_series(rng, n), _random_series(rng, n)
    skew = abs(hilbert(u).inner(v) + u.inner(hilbert(v)))
    zu = u - TrigSeries.constant(u.mean, n)
    sq = (hilbert(hilbert(zu)) + zu).max_abs_coeff()
    rt = (differentiate(antiderivative0(zu)) - zu).max_abs_coeff()
    ok = skew <= 1e-12 * (1 + u.norm() * v.norm()) and sq <= 1e-14 and rt <= 1e-13
    return "spectral operators", ok, f"skew {skew:.1e}, C^2 + P {sq:.1e}, D o A0 {rt:.1e}"


def check_model(cfg: RunConfig, rng):
    rep = validate_hypotheses(cfg.model)
    return "stored energy", rep.passed, "hypotheses hold" if rep.passed else str(rep.failures)


def check_dispersion(cfg: RunConfig, rng):
    p, m = cfg.params_base, cfg.model
    worst = 0.0
    for k in range(1, 21):
        for a, b in admissible_intervals(k, p.g, p.rho, m.E11, m.E22):
            lo, hi = a + 1e-2 * (b - a), b - 1e-2 * (b - a)
            for l1 in np.linspace(lo, hi, 5):
                l2 = f_k(k, l1, p.g, p.rho, m.E11, m.E22)
                if l2 <= 0:
                    continue
                r = abs(dispersion_lhs(k, p.with_lambda(l1, l2), m)) / (1 + m.E22 * k ** 4)
                worst = max(worst, r)
    return "dispersion identity", worst <= 1e-12, f"max scaled |lhs| {worst:.1e}"


def _test_lambda(cfg: RunConfig):
    m = cfg.model
    p = cfg.params_base
    l1 = m.E11 + 1.0
    return p.with_lambda(l1, f_k(1, l1, p.g, p.rho, m.E11, m.E22) + 0.5)


def check_linearization(cfg: RunConfig, rng):
    p = _test_lambda(cfg)
    prob = ReducedProblem(p.g, p.rho, cfg.model, cfg.disc)
    zero = np.zeros(prob.n)
    f0 = float(np.max(np.abs(prob.residual(zero, p.lam))))
    modes = [1, 2, 3, 5, 8]
    J = prob.jacobian(zero, p.lam, modes=modes)
    diag = max(abs(J[j - 1, c] - linearized_diagonal(j, p, cfg.model)) for c, j in enumerate(modes))
    off = J.copy()
    for c, j in enumerate(modes):
        off[j - 1, c] = 0.0
    off = float(np.max(np.abs(off)))
    ok = f0 <= 1e-12 and diag <= 1e-6 and off <= 1e-9
    return "linearization at w = 0", ok, f"|F(0)| {f0:.1e}, diagonal {diag:.1e}, off {off:.1e}"


def check_parity_and_closure(cfg: RunConfig, rng):
    p = _test_lambda(cfg)
    prob = ReducedProblem(p.g, p.rho, cfg.model, cfg.disc)
    a = np.zeros(prob.n)
    a[1::2] = 1e-4 * rng.standard_normal(a[1::2].size) / np.arange(1, a[1::2].size + 1) ** 2
    ev = prob.evaluate(a, p.lam)
    leak = float(np.max(np.abs(ev.residual[0::2])))
    odd = float(np.max(np.abs(ev.residual_sin)))
    ok = leak <= 1e-12 and odd <= 1e-12
    return "parity and Z_2 closure", ok, f"off-support {leak:.1e}, sine part {odd:.1e}"


def check_gradients(cfg: RunConfig, rng):
    p = _test_lambda(cfg)
    prob = ReducedProblem(p.g, p.rho, cfg.model, cfg.disc)
    grid, n = prob.grid, prob.n
    worst = 0.0
    decay = 1.0 / np.arange(1, n + 1) ** 3
    for _ in range(3):
        w = grid.from_cos(1e-2 * rng.standard_normal(n) * decay)
        xi = grid.from_cos(1e-2 * rng.standard_normal(n) * decay)
        gw, gx = prob.j0_gradient_grids(w, xi, p.lam)
        for field_ in (0, 1):
            h = grid.from_cos(rng.standard_normal(n) * decay)
            rep = gw if field_ == 0 else gx
            analytic = grid.integrate(rep * h)
            e = 1e-5

            def J0(s):
                ww, xx = (w + s * h, xi) if field_ == 0 else (w, xi + s * h)
                return prob.j_values(ww, xx, p.lam)[1]
            fd = (J0(e) - J0(-e)) / (2 * e)
            worst = max(worst, abs(fd - analytic) / max(abs(analytic), 1e-12))
    return "J0 first variations", worst <= 1e-6, f"max relative error {worst:.1e}"


def check_invariance(cfg: RunConfig, rng):
    p, m = cfg.params_base, cfg.model
    for k in range(1, 6):
        for l in range(k + 1, 6):
            if l % k == 0:
                continue
            for dp in double_points(k, l, p.g, p.rho, m.E11, m.E22):
                if not dp.nondegenerate:
                    continue
                pp = PhysicalParams(p.g, p.rho, *dp.lambda_star)
                prob = ReducedProblem(pp.g, pp.rho, m, cfg.disc)
                ps = PhiPsi(prob, k, l, z_support(math.gcd(k, l), prob.n))
                t = 1e-4
                a = abs(ps.phi(0.0, t, dp.lambda_star)[0][0])
                b = abs(ps.phi(t, 0.0, dp.lambda_star)[0][1])
                return (f"invariance at ({k}, {l})", max(a, b) <= 1e-11,
                        f"|Phi_k(0, t)| {a:.1e}, |Phi_l(t, 0)| {b:.1e}")
    return "invariance", True, "no non-resonant double point with k, l <= 5 (vacuous)"


SUITES = [check_spectral, check_model, check_dispersion, check_linearization,
          check_parity_and_closure, check_gradients, check_invariance]


def run_checks(cfg: RunConfig):
    rng = np.random.default_rng(cfg.data["seed"])
    return [suite(cfg, rng) for suite in SUITES]
