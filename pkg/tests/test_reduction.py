import math

import numpy as np
import pytest

from hydroelastic.bifurcation import simple_branch
from hydroelastic.errors import PreconditionError
from hydroelastic.linear import linearized_diagonal
from hydroelastic.reduction import (
    ReducedProblem,
    j0_gradients,
    j0_value,
    j_value,
    jacobian_fd,
    m_bar,
    m_map,
    nabla_I0,
    residual_F,
    solve_xi,
)
from hydroelastic.spectral import (
    Discretization,
    TrigSeries,
    antiderivative0,
    differentiate,
    ell_inv_adjoint,
    hilbert,
)

N = 32


def cosine(*coeffs):
    return TrigSeries.cosine(np.r_[coeffs, np.zeros(N - len(coeffs))])


def smooth_even(rng, scale=1e-2, n=N):
    return TrigSeries.cosine(scale * rng.standard_normal(n) / np.arange(1, n + 1) ** 3)


def test_m_map_at_zero_and_derivatives(params, model, rng):
    g, rho = params.g, params.rho
    zero = TrigSeries.zeros(N)
    for lam1 in (3.0, 5.0, 7.5):
        assert m_map(zero, zero, lam1, model, g, rho).max_abs_coeff() <= 1e-15
    lam1, e = 5.0, 1e-6
    eta = smooth_even(rng, 1.0)
    d_xi = (m_map(zero, eta * e, lam1, model, g, rho)
            - m_map(zero, eta * -e, lam1, model, g, rho)) / (2 * e)
    assert (d_xi - eta * (model.E11 - lam1)).max_abs_coeff() <= 1e-8
    h = smooth_even(rng, 1.0)
    d_w = (m_map(h * e, zero, lam1, model, g, rho)
           - m_map(h * -e, zero, lam1, model, g, rho)) / (2 * e)
    expect = hilbert(differentiate(h)) * -(model.E11 - lam1) + h * params.g_rho
    assert (d_w - expect).max_abs_coeff() <= 1e-8


def test_solve_xi(params, model):
    g, rho = params.g, params.rho
    assert solve_xi(TrigSeries.zeros(N), 5.0, model, g, rho).max_abs_coeff() == 0.0
    ratios = []
    for eps in (1e-4, 5e-5, 2.5e-5):
        xi = solve_xi(cosine(eps), 5.0, model, g, rho)
        ratios.append((xi - cosine(2 * eps)).norm() / eps ** 2)
    assert max(ratios) / min(ratios) < 1.01 and max(ratios) < 10.0


def test_solve_xi_satisfies_m(params, model, rng):
    w = smooth_even(rng)
    xi = solve_xi(w, 5.0, model, params.g, params.rho)
    assert m_map(w, xi, 5.0, model, params.g, params.rho).max_abs_coeff() <= 1e-12


def test_nabla_I0(params, model, rng):
    zero = TrigSeries.zeros(N)
    out = nabla_I0(zero, zero, params)
    assert abs(out.mean + params.g_rho) <= 1e-15 and np.max(np.abs(out.cos_coeffs)) <= 1e-15
    w = smooth_even(rng)
    xi = solve_xi(w, 5.0, model, params.g, params.rho)
    assert nabla_I0(w, xi, params).is_even(1e-14)


def test_m_bar(params, model, rng):
    assert m_bar(TrigSeries.zeros(N), params, model).max_abs_coeff() <= 1e-15
    h = smooth_even(rng, 1.0)
    e = 1e-6
    d = (m_bar(h * e, params, model) - m_bar(h * -e, params, model)) / (2 * e)
    g, gr = params.g, params.g_rho
    c = gr ** 2 / (model.E11 - params.lambda1) - g
    expect = h * -(params.lambda2 + gr) + hilbert(antiderivative0(h)) * c
    assert (d - expect).max_abs_coeff() <= 1e-7
    assert m_bar(smooth_even(rng), params, model).is_even(1e-14)


def test_residual_at_zero(params, model):
    for lam in [(5.0, 6.81), (3.0, 2.0), (4.5, 100.0)]:
        F = residual_F(TrigSeries.zeros(N), params.with_lambda(*lam), model)
        assert F.max_abs_coeff() <= 1e-12


def test_jacobian_at_zero(params, model):
    J = jacobian_fd(TrigSeries.zeros(N), params, model)
    assert abs(J[0, 0]) <= 1e-6
    assert abs(J[1, 1] - 1.7025) <= 1e-6
    diag = np.array([linearized_diagonal(j, params, model) for j in range(1, N + 1)])
    assert np.max(np.abs(np.diag(J) - diag) / (1 + np.abs(diag))) <= 1e-6
    off = J - np.diag(np.diag(J))
    assert np.max(np.abs(off)) <= 1e-9


def test_j_values(params, model):
    zero = TrigSeries.zeros(N)
    assert abs(j0_value(zero, zero, params, model) - math.pi * (5 + params.rho ** 2 * 9.81)) <= 1e-12
    # pi (5 + 1/9.81) = 16.02821; the commonly quoted 16.0284 is a rounding of it
    assert abs(j0_value(zero, zero, params, model) - 16.0284) <= 1e-3
    assert abs(j_value(zero, zero, params, model) - math.pi * 5) <= 1e-12


def test_j0_gradients_match_fd(params, model, rng):
    for _ in range(3):
        w, xi = smooth_even(rng), smooth_even(rng)
        gw, gx = j0_gradients(w, xi, params, model)
        for field in (0, 1):
            h = smooth_even(rng, 1.0)
            e = 1e-5
            shift = (lambda s: (w + h * s, xi)) if field == 0 else (lambda s: (w, xi + h * s))
            fd = (j0_value(*shift(e), params, model) - j0_value(*shift(-e), params, model)) / (2 * e)
            analytic = (gw if field == 0 else gx).inner(h)
            assert abs(fd - analytic) <= 1e-6 * abs(analytic)


def test_j0_gradients_odd_directions(params, model, rng):
    w, xi = smooth_even(rng), smooth_even(rng)
    gw, gx = j0_gradients(w, xi, params, model)
    h = TrigSeries(0.0, np.zeros(N), rng.standard_normal(N) / np.arange(1, N + 1) ** 3)
    assert abs(gw.inner(h)) <= 1e-14 and abs(gx.inner(h)) <= 1e-14


def test_stationarity_at_solution(params, model, disc):
    """F = 0 and M = 0 imply that J0 is stationary in all even directions."""
    sheet = simple_branch(1, 5.0, [1e-3, 2e-3], params, model, disc)
    pt = sheet.points[(2e-3, 5.0)]
    gw, gx = j0_gradients(pt.w, pt.xi_bar, params.with_lambda(*pt.lam), model)
    assert np.max(np.abs(gw.cos_coeffs)) <= 10 * disc.newton_tol
    assert np.max(np.abs(gx.cos_coeffs)) <= 10 * disc.newton_tol


def test_zk_closure_and_parity(params, model, rng):
    for k in (2, 3):
        a = np.zeros(N)
        a[k - 1::k] = 1e-3 * rng.standard_normal(a[k - 1::k].size) / np.arange(1, N // k + 1) ** 3
        F = residual_F(TrigSeries.cosine(a), params, model)
        off = np.delete(F.cos_coeffs, np.arange(k - 1, N, k))
        assert np.max(np.abs(off)) <= 1e-12
        assert F.is_even(1e-14)


def test_mesh_refinement(params, model):
    w = cosine(1e-2, 3e-3, 1e-3, 2e-4)
    F1 = residual_F(w, params, model)
    F2 = residual_F(w.truncate(2 * N), params, model, Discretization(n_modes=2 * N))
    assert np.max(np.abs(F1.cos_coeffs - F2.cos_coeffs[:N])) <= 1e-10


def test_constant_insensitivity(rng):
    w = smooth_even(rng)
    u = TrigSeries(0.0, rng.standard_normal(N) / np.arange(1, N + 1) ** 2,
                   rng.standard_normal(N) / np.arange(1, N + 1) ** 2)
    assert (ell_inv_adjoint(w, u + 2.5) - ell_inv_adjoint(w, u)).max_abs_coeff() <= 1e-14
    v = antiderivative0(u)
    assert (hilbert(v + 1.7) - hilbert(v)).max_abs_coeff() == 0.0


def test_rejects_non_even_input(params, model):
    with pytest.raises(PreconditionError):
        residual_F(TrigSeries.mode(1, N, "sin", 1e-3), params, model)


def test_problem_evaluation_consistency(params, model, rng):
    prob = ReducedProblem.from_params(params, model)
    a = smooth_even(rng).cos_coeffs
    assert np.array_equal(prob.residual(a, params.lam),
                          residual_F(TrigSeries.cosine(a), params, model).cos_coeffs)
