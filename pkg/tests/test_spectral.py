import numpy as np
import pytest

from hydroelastic.errors import OutOfBallError, PreconditionError
from hydroelastic.spectral import (
    Discretization,
    Grid,
    TrigSeries,
    antiderivative0,
    check_ball,
    differentiate,
    ell_apply,
    ell_inv_adjoint,
    geometry,
    grid_compose,
    grid_size_for,
    hilbert,
    omega_sigma,
    project_zero_mean,
)

N = 16


def cos(n, amp=1.0, size=N):
    return TrigSeries.mode(n, size, "cos", amp)


def sin(n, amp=1.0, size=N):
    return TrigSeries.mode(n, size, "sin", amp)


def rand_series(rng, n=N, scale=1.0, even=False, mean=True, decay=0):
    d = 1.0 / np.arange(1, n + 1) ** decay
    a = scale * d * rng.standard_normal(n)
    b = np.zeros(n) if even else scale * d * rng.standard_normal(n)
    return TrigSeries(scale * rng.standard_normal() if mean else 0.0, a, b)


def small_shape(rng, n=8):
    """Even zero-mean shape well inside the ball."""
    return rand_series(rng, n, 1e-2, even=True, mean=False, decay=3).truncate(N)


def close(u, v, tol=1e-14):
    return (u - v).max_abs_coeff() <= tol


def test_grid_size_and_roundtrip(rng):
    assert grid_size_for(32, 4) == 264
    u = rand_series(rng)
    size = grid_size_for(N)
    v = TrigSeries.from_samples(u.samples(size), N)
    assert close(u, v, 1e-13 * u.max_abs_coeff())
    tau = Grid.of_size(size).tau
    assert np.allclose(u(tau), u.samples(size), atol=1e-12)


def test_discretization_validation():
    with pytest.raises(PreconditionError):
        Discretization(newton_tol=1e-6)
    with pytest.raises(PreconditionError):
        Discretization(oversampling_factor=1)


def test_parity_flags():
    assert cos(2).is_even() and not cos(2).is_odd()
    assert sin(2).is_odd() and not sin(2).is_even()
    assert not TrigSeries.constant(1.0, N).is_odd()


def test_hilbert_examples():
    assert hilbert(TrigSeries.constant(1.0, N)).max_abs_coeff() == 0.0
    assert close(hilbert(cos(3)), sin(3))
    assert close(hilbert(sin(3)), -cos(3))
    assert close(hilbert(hilbert(cos(1))), -cos(1))


def test_hilbert_skew_and_square(rng):
    for _ in range(10):
        u, v = rand_series(rng), rand_series(rng)
        assert abs(hilbert(u).inner(v) + u.inner(hilbert(v))) <= 1e-12 * (1 + abs(u.inner(u)))
        assert close(hilbert(hilbert(u)), -project_zero_mean(u), 0.0)


def test_differentiate_examples():
    assert close(differentiate(cos(4)), sin(4, -4.0))
    assert differentiate(TrigSeries.constant(2.0, N)).max_abs_coeff() == 0.0
    assert close(differentiate(sin(2)), cos(2, 2.0))


def test_antiderivative_examples(rng):
    assert close(antiderivative0(cos(1)), sin(1))
    assert close(antiderivative0(sin(1)), TrigSeries.constant(1.0, N) - cos(1))
    assert antiderivative0(TrigSeries.zeros(N)).max_abs_coeff() == 0.0
    u = rand_series(rng, mean=False)
    assert close(differentiate(antiderivative0(u)), u, 1e-14)
    with pytest.raises(PreconditionError):
        antiderivative0(TrigSeries.constant(1.0, N))


def test_project_zero_mean(rng):
    assert project_zero_mean(TrigSeries.constant(5.0, N)).max_abs_coeff() == 0.0
    assert close(project_zero_mean(cos(1) + 2.0), cos(1))
    u = rand_series(rng)
    assert close(project_zero_mean(project_zero_mean(u)), project_zero_mean(u), 0.0)


def test_grid_compose_examples(rng):
    sq = grid_compose([cos(1), cos(1)], lambda x, y: x * y)
    assert close(sq, cos(2, 0.5) + 0.5, 1e-15)
    assert grid_compose([TrigSeries.zeros(N)], lambda x: x * x).max_abs_coeff() == 0.0
    xi = TrigSeries.cosine([0.1, 0.05, 0.02], mean=0.01)
    out = grid_compose([xi], lambda x: 1.0 / (1.0 + x), n_modes=32)
    size = grid_size_for(32)
    xs = xi.samples(size)
    assert np.max(np.abs(xs)) <= 0.5
    assert np.max(np.abs(out.samples(size) - 1.0 / (1.0 + xs))) <= 1e-12


def test_grid_compose_polynomial_exact(rng):
    u, v = rand_series(rng, 8), rand_series(rng, 8)
    prod = grid_compose([u, v], lambda x, y: x * y, n_modes=16)
    tau = np.linspace(0, 2 * np.pi, 50)
    assert np.max(np.abs(prod(tau) - u(tau) * v(tau))) <= 1e-12


def test_omega_sigma_at_zero_and_derivatives(rng):
    om, sg = omega_sigma(TrigSeries.zeros(N))
    assert close(om, TrigSeries.constant(1.0, N), 1e-15) and sg.max_abs_coeff() <= 1e-15
    h = rand_series(rng, 8, 0.1, even=True, mean=False, decay=3)
    e = 1e-6
    op, sp = omega_sigma(h * e)
    om_, sm = omega_sigma(h * -e)
    d_omega = (op - om_) / (2 * e)
    assert close(d_omega, hilbert(differentiate(h)), 1e-8)
    # Omega = 1 at w = 0, so d(Omega sigma) and d sigma agree there
    d_sigma = (sp - sm) / (2 * e)
    assert close(d_sigma, differentiate(differentiate(h)), 1e-7)


def test_ell_at_zero(rng):
    u = rand_series(rng)
    zero = TrigSeries.zeros(N)
    assert close(ell_apply(zero, u), hilbert(u), 1e-14)
    assert ell_apply(small_shape(rng), zero).max_abs_coeff() == 0.0
    assert close(ell_inv_adjoint(zero, sin(1)), -cos(1), 1e-15)
    assert ell_inv_adjoint(zero, zero).max_abs_coeff() == 0.0


def test_ell_adjoint_identity(rng):
    for _ in range(5):
        w = small_shape(rng)
        u, v = rand_series(rng), rand_series(rng, mean=False)
        lhs = ell_inv_adjoint(w, u).inner(ell_apply(w, v))
        assert abs(lhs - u.inner(project_zero_mean(v))) <= 1e-10 * (1 + abs(lhs))


def test_ell_inv_adjoint_kills_constants(rng):
    w = small_shape(rng)
    assert ell_inv_adjoint(w, TrigSeries.constant(3.0, N)).max_abs_coeff() <= 1e-14


def test_parity_of_geometry(rng):
    w = small_shape(rng)
    om, sg = omega_sigma(w)
    assert om.is_even(1e-13) and sg.is_even(1e-13)
    assert hilbert(differentiate(w)).is_even(1e-13)
    h = TrigSeries(0.0, np.zeros(N), rng.standard_normal(N) * 1e-2)
    assert ell_apply(w, differentiate(h)).is_odd(1e-13)


def test_check_ball():
    grid = Grid.of_size(grid_size_for(N))
    geo = geometry(grid, np.zeros(grid.size))
    check_ball(geo, np.zeros(grid.size))
    with pytest.raises(OutOfBallError):
        check_ball(geo, np.full(grid.size, 0.6))
    with pytest.raises(OutOfBallError):
        check_ball(geometry(grid, grid.from_cos(np.r_[0.0, 0.0, 0.5, np.zeros(N - 3)])))
