"""Reduction of the Euler equations to the single shape equation F(w, lambda) = 0.

The stretch unknown xi is eliminated by an inner Newton solve of
M(w, xi, lambda1) = 0 at every evaluation, so outer solvers only ever see the
cosine coefficients of w.  All nonlinear fields are formed on the collocation
grid in "deviation" form (Omega - 1, nu - 1, ...) so that finite differences
with steps of 1e-6 are not swamped by rounding of O(1) quantities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elasticity import PhysicalParams, StoredEnergyModel
from .errors import NoConvergenceError, OutOfBallError, PreconditionError, SingularParameterError
from .spectral import (
    Discretization,
    Geometry,
    Grid,
    TrigSeries,
    check_ball,
    ell_inv_adjoint_grid,
    geometry,
)


@dataclass
class XiSolution:
    coeffs: np.ndarray
    grid: np.ndarray
    iterations: int
    residual_norm: float
    history: list = field(default_factory=list)


@dataclass
class Evaluation:
    """Everything computed during one residual evaluation."""

    residual: np.ndarray          # cosine coefficients 1..N of F
    residual_sin: np.ndarray      # sine coefficients (parity diagnostic)
    xi: XiSolution
    geo: Geometry
    F_grid: np.ndarray
    m_bar_grid: np.ndarray


class ReducedProblem:
    """Discretised residual map for fixed g, rho, energy model and resolution.

    Shapes are passed as arrays of cosine coefficients a_1..a_N; the
    parameters lambda = (lambda1, lambda2) are passed per call.
    """

    def __init__(self, g: float, rho: float, model: StoredEnergyModel,
                 disc: Discretization = Discretization()):
        self.g = float(g)
        self.rho = float(rho)
        self.model = model
        self.disc = disc
        self.n = disc.n_modes
        self.grid: Grid = disc.grid
        self._B = self.grid.cos_matrix(self.n)
        self._E11 = model.E11

    @classmethod
    def from_params(cls, params: PhysicalParams, model, disc=Discretization()):
        return cls(params.g, params.rho, model, disc)

    @property
    def g_rho(self) -> float:
        return self.g * self.rho

    @property
    def E11(self) -> float:
        return self._E11

    def params(self, lam) -> PhysicalParams:
        return PhysicalParams(self.g, self.rho, float(lam[0]), float(lam[1]))

    # -- geometry and xi ----------------------------------------------------

    def shape(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.size != self.n:
            raise PreconditionError(f"expected {self.n} cosine coefficients, got {a.size}")
        return self.grid.from_cos(a)

    def geometry(self, a) -> Geometry:
        geo = geometry(self.grid, self.shape(a))
        check_ball(geo)
        return geo

    def _strains(self, geo: Geometry, xi: np.ndarray):
        opx = 1.0 + xi
        s = (geo.omega_m1 - xi) / opx
        mu = geo.omega_sigma / opx
        return opx, s, mu

    def m_grid(self, geo: Geometry, xi: np.ndarray, lam1: float) -> np.ndarray:
        _, s, mu = self._strains(geo, xi)
        p = self.model.partials_strain(s, mu)
        val = p.E - (1.0 + s) * p.E1 - mu * p.E2 + 0.5 * lam1 * s * (2.0 + s)
        return self.grid.project(val) + self.g_rho * geo.w

    def _m_jacobian(self, geo: Geometry, xi: np.ndarray, lam1: float) -> np.ndarray:
        opx, s, mu = self._strains(geo, xi)
        nu = 1.0 + s
        p = self.model.partials_strain(s, mu)
        q = (nu * nu * (p.E11 - lam1) + 2.0 * nu * mu * p.E12 + mu * mu * p.E22) / opx
        B = self._B
        return (2.0 / self.grid.size) * (B.T @ (q[:, None] * B))

    def xi_guess(self, a, lam1: float) -> np.ndarray:
        n = np.arange(1, self.n + 1)
        return (n + self.g_rho / (lam1 - self.E11)) * np.asarray(a, dtype=float)

    def solve_xi(self, a, lam1: float, geo: Geometry | None = None,
                 guess=None) -> XiSolution:
        """Galerkin Newton solve of M(w, xi, lambda1) = 0 for xi.

        The Jacobian d_xi M is the multiplication operator
        ``(nu^2 (E11 - l1) + 2 nu mu E12 + mu^2 E22) / (1 + xi)`` followed by
        mean removal, assembled exactly in the cosine basis.  Once the
        tolerance is met one more step is taken so that xi is accurate to
        rounding, which keeps finite differences of F clean.
        """
        if lam1 == self.E11:
            raise SingularParameterError("lambda1 equals E11(1, 0)")
        if geo is None:
            geo = self.geometry(a)
        c = self.xi_guess(a, lam1) if guess is None else np.array(guess, dtype=float)
        tol = self.disc.newton_tol
        history = []
        polished = False
        for it in range(self.disc.newton_max_iter + 1):
            xi = self.grid.from_cos(c)
            if np.min(xi) <= -1.0 + 1e-12:
                raise OutOfBallError("min xi", float(np.min(xi)), "> -1")
            m = self.m_grid(geo, xi, lam1)
            r = self.grid.cos_coeffs(m, self.n)
            rn = float(np.max(np.abs(r)))
            if not np.isfinite(rn):
                raise NoConvergenceError("non-finite residual in the xi solve", history)
            history.append(rn)
            if rn <= tol and (polished or rn <= 1e-16):
                check_ball(geo, xi)
                return XiSolution(c, xi, it, rn, history)
            if it == self.disc.newton_max_iter:
                break
            if rn <= tol:
                polished = True
            K = self._m_jacobian(geo, xi, lam1)
            c = c - np.linalg.solve(K, r)
        raise NoConvergenceError(
            f"xi Newton did not converge in {self.disc.newton_max_iter} iterations "
            f"(last residual {history[-1]:.3e})", history)

    # -- residual -----------------------------------------------------------

    def nabla_I0_grid(self, geo: Geometry, xi: np.ndarray, lam2: float,
                      with_constant: bool = True) -> np.ndarray:
        """Without the constant -g rho the field is exact up to rounding
        relative to the state, which is all that m0 needs."""
        grid, g, g_rho = self.grid, self.g, self.g_rho
        integral = grid.integrate(geo.w * geo.cwp)
        out = ((lam2 + g / np.pi * integral + 2.0 * g_rho) * geo.cwp
               - g * geo.w * (1.0 + geo.cwp) - g * grid.hilbert(geo.w * geo.wp)
               - g_rho * xi)
        return out - g_rho if with_constant else out

    def m_bar_grid(self, geo: Geometry, xi: np.ndarray, lam2: float) -> np.ndarray:
        grid = self.grid
        nab = grid.project(self.nabla_I0_grid(geo, xi, lam2, with_constant=False))
        return ell_inv_adjoint_grid(grid, geo, grid.antideriv0(nab))

    def evaluate(self, a, lam, xi_guess=None) -> Evaluation:
        lam1, lam2 = float(lam[0]), float(lam[1])
        geo = self.geometry(a)
        xs = self.solve_xi(a, lam1, geo, xi_guess)
        xi = xs.grid
        grid = self.grid
        opx, s, mu = self._strains(geo, xi)
        p = self.model.partials_strain(s, mu)
        mbar = self.m_bar_grid(geo, xi, lam2)
        om = geo.omega_m1
        inner = mbar + geo.omega * p.E1 - lam1 * (om * (2.0 + om) - xi) / opx
        F = grid.project(p.E2) + grid.hilbert(grid.antideriv0(grid.project(inner)))
        c = grid.forward(F)[1:self.n + 1]
        return Evaluation(2.0 * c.real, -2.0 * c.imag, xs, geo, F, mbar)

    def residual(self, a, lam) -> np.ndarray:
        return self.evaluate(a, lam).residual

    def jacobian(self, a, lam, modes=None, step=None, xi_guess=None) -> np.ndarray:
        """Central-difference Jacobian of the Galerkin residual.

        Columns are taken for the cosine modes in ``modes`` (1-based, default
        all); rows are all N residual modes.  Column j uses the step
        ``h / j**2``: F grows like j^2 times its input, so a uniform step
        leaves an O(j^4 h^2) truncation error in the high modes.
        """
        a = np.asarray(a, dtype=float)
        modes = range(1, self.n + 1) if modes is None else modes
        h0 = self.fd_step(a) if step is None else step
        cols = []
        for j in modes:
            h = h0 / (j * j)
            e = np.zeros(self.n)
            e[j - 1] = h
            fp = self.evaluate(a + e, lam, xi_guess).residual
            fm = self.evaluate(a - e, lam, xi_guess).residual
            cols.append((fp - fm) / (2.0 * h))
        return np.column_stack(cols) if cols else np.zeros((self.n, 0))

    def fd_step(self, a) -> float:
        return self.disc.fd_step_scale * (1.0 + float(np.linalg.norm(a)))

    # -- Lagrangians --------------------------------------------------------

    def j_values(self, w: np.ndarray, xi: np.ndarray, lam) -> tuple[float, float]:
        """(J, J0) for shape samples ``w`` and stretch samples ``xi``."""
        lam1, lam2 = float(lam[0]), float(lam[1])
        grid = self.grid
        geo = geometry(grid, w)
        check_ball(geo, xi)
        opx, s, mu = self._strains(geo, xi)
        E = self.model.partials_strain(s, mu).E
        wcw = grid.integrate(w * geo.cwp)
        J = (0.5 * lam2 * wcw
             - 0.5 * self.g * grid.integrate(w * w * (1.0 + geo.cwp))
             - grid.integrate(opx * E)
             + 0.5 * lam1 * grid.integrate(geo.omega ** 2 / opx)
             - self.g_rho * grid.integrate(w * opx))
        J0 = J + self.g * np.pi * (wcw / (2.0 * np.pi) + self.rho) ** 2
        return J, J0

    def j0_gradient_grids(self, w: np.ndarray, xi: np.ndarray, lam):
        """Grid values of the L^2 representers of d_w J0 and d_xi J0,
        restricted to zero-mean directions."""
        lam1, lam2 = float(lam[0]), float(lam[1])
        grid, g, g_rho = self.grid, self.g, self.g_rho
        geo = geometry(grid, w)
        check_ball(geo, xi)
        opx, s, mu = self._strains(geo, xi)
        nu = 1.0 + s
        p = self.model.partials_strain(s, mu)

        val = p.E - nu * p.E1 - mu * p.E2 + 0.5 * lam1 * s * (2.0 + s)
        g_xi = -grid.project(val + g_rho * w)

        wcw = grid.integrate(w * geo.cwp)
        amp = wcw / (2.0 * np.pi) + self.rho
        direct = (lam2 * geo.cwp - g * w * (1.0 + geo.cwp) - g * grid.hilbert(w * geo.wp)
                  - g_rho * opx + 2.0 * g * amp * geo.cwp)
        # d Omega h = Omega L[w](h'), d(Omega sigma) h = -C(L[w](h'))'; move
        # everything onto h with the L^2 adjoint of L[w].
        f = (lam1 * nu - p.E1) * geo.omega + grid.hilbert(grid.deriv(p.E2))
        fo = f / geo.omega ** 2
        ell_adj = geo.wp * fo - grid.hilbert((1.0 + geo.cwp) * fo)
        g_w = grid.project(direct - grid.deriv(ell_adj))
        return g_w, g_xi


# ---------------------------------------------------------------------------
# Series-level API
# ---------------------------------------------------------------------------


def _problem(params: PhysicalParams, model, disc) -> ReducedProblem:
    return ReducedProblem(params.g, params.rho, model, disc)


def _even_coeffs(u: TrigSeries, n: int, name: str, tol: float = 1e-12) -> np.ndarray:
    if abs(u.mean) > tol or not u.is_even(tol):
        raise PreconditionError(f"{name} must be even with zero mean")
    return u.truncate(n).cos_coeffs.copy()


def m_map(w: TrigSeries, xi: TrigSeries, lambda1: float, model: StoredEnergyModel,
          g: float, rho: float, disc: Discretization = Discretization()) -> TrigSeries:
    """M(w, xi, lambda1) = P{(E - nu E1 - mu E2)(nu, mu) + lambda1/2 nu^2} + g rho w."""
    prob = ReducedProblem(g, rho, model, disc)
    n = prob.n
    geo = prob.geometry(_even_coeffs(w, n, "w"))
    xs = xi.truncate(n).samples(prob.grid.size)
    check_ball(geo, xs)
    return TrigSeries.from_samples(prob.m_grid(geo, xs, lambda1), n)


def solve_xi(w: TrigSeries, lambda1: float, model: StoredEnergyModel, g: float, rho: float,
             disc: Discretization = Discretization()) -> TrigSeries:
    prob = ReducedProblem(g, rho, model, disc)
    a = _even_coeffs(w, prob.n, "w")
    return TrigSeries.cosine(prob.solve_xi(a, lambda1).coeffs)


def nabla_I0(w: TrigSeries, xi: TrigSeries, params: PhysicalParams,
             disc: Discretization = Discretization()) -> TrigSeries:
    """The gradient field whose mean-free part feeds m0 (constant -g rho kept)."""
    n = max(w.n_modes, xi.n_modes, disc.n_modes)
    grid = Grid.of_size(2 * disc.oversampling_factor * (n + 1))
    geo = geometry(grid, w.truncate(n).samples(grid.size))
    xs = xi.truncate(n).samples(grid.size)
    check_ball(geo, xs)
    integral = grid.integrate(geo.w * geo.cwp)
    g, g_rho = params.g, params.g_rho
    out = ((params.lambda2 + g / np.pi * integral + 2.0 * g_rho) * geo.cwp
           - g * geo.w * (1.0 + geo.cwp) - g * grid.hilbert(geo.w * geo.wp)
           - g_rho * (1.0 + xs))
    return TrigSeries.from_samples(out, n)


def m_bar(w: TrigSeries, params: PhysicalParams, model: StoredEnergyModel,
          disc: Discretization = Discretization()) -> TrigSeries:
    prob = _problem(params, model, disc)
    a = _even_coeffs(w, prob.n, "w")
    ev = prob.evaluate(a, params.lam)
    return TrigSeries.from_samples(ev.m_bar_grid, prob.n)


def residual_F(w: TrigSeries, params: PhysicalParams, model: StoredEnergyModel,
               disc: Discretization = Discretization()) -> TrigSeries:
    """The reduced residual F(w, lambda), truncated to ``disc.n_modes``."""
    prob = _problem(params, model, disc)
    a = _even_coeffs(w, prob.n, "w")
    ev = prob.evaluate(a, params.lam)
    return TrigSeries(0.0, ev.residual, ev.residual_sin)


def j_value(w: TrigSeries, xi: TrigSeries, params: PhysicalParams, model: StoredEnergyModel,
            disc: Discretization = Discretization()) -> float:
    prob = _problem(params, model, disc)
    size = prob.grid.size
    return prob.j_values(w.truncate(prob.n).samples(size), xi.truncate(prob.n).samples(size),
                         params.lam)[0]


def j0_value(w: TrigSeries, xi: TrigSeries, params: PhysicalParams, model: StoredEnergyModel,
             disc: Discretization = Discretization()) -> float:
    prob = _problem(params, model, disc)
    size = prob.grid.size
    return prob.j_values(w.truncate(prob.n).samples(size), xi.truncate(prob.n).samples(size),
                         params.lam)[1]


def j0_gradients(w: TrigSeries, xi: TrigSeries, params: PhysicalParams,
                 model: StoredEnergyModel, disc: Discretization = Discretization()):
    """Riesz representers (grad_w J0, grad_xi J0) on zero-mean directions."""
    prob = _problem(params, model, disc)
    size = prob.grid.size
    gw, gx = prob.j0_gradient_grids(w.truncate(prob.n).samples(size),
                                    xi.truncate(prob.n).samples(size), params.lam)
    return TrigSeries.from_samples(gw, prob.n), TrigSeries.from_samples(gx, prob.n)


def jacobian_fd(w: TrigSeries, params: PhysicalParams, model: StoredEnergyModel,
                disc: Discretization = Discretization()) -> np.ndarray:
    """N x N central-difference Jacobian of F in cosine coordinates."""
    prob = _problem(params, model, disc)
    return prob.jacobian(_even_coeffs(w, prob.n, "w"), params.lam)
