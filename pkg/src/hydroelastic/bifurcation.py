"""Bifurcating solution sheets near simple and double eigenvalues.

Unknowns of every solve are the cosine coefficients of w on a support set of
modes plus the free components of lambda = (lambda1, lambda2).  Amplitudes are
imposed by fixing a_j(w) = t_j exactly, so the constraint equations are
eliminated rather than appended.

Near a double point the full system is singular on the edges t1 = 0 or
t2 = 0, because there one bifurcation equation vanishes identically in
lambda.  Edge points are therefore found from the desingularized equations
Psi = 0, with Phi evaluated by the auxiliary (range) solve.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .elasticity import PhysicalParams, StoredEnergyModel
from .errors import (
    BallExitError,
    ConsistencyError,
    EvaluationError,
    NoConvergenceError,
    NotSimpleError,
    OutOfBallError,
    PreconditionError,
    RefusalError,
)
from .linear import (
    DoublePoint,
    f_k,
    is_resonant,
    kernel_modes,
    nondegeneracy,
)
from .reduction import ReducedProblem
from .spectral import Discretization, Grid, TrigSeries, geometry

PERIOD_THRESHOLD = 1e-12
PSI_EPS = 1e-5
LAMBDA_FD_REL = 1e-7
CHORD_RATIO = 0.25


@dataclass
class BranchPoint:
    """A converged solution of F(w, lambda) = 0 with its diagnostics."""

    coeffs: np.ndarray
    xi_coeffs: np.ndarray
    lam: tuple
    modes: tuple
    newton_iters: int
    residual_norm: float

    @property
    def w(self) -> TrigSeries:
        return TrigSeries.cosine(self.coeffs)

    @property
    def xi_bar(self) -> TrigSeries:
        return TrigSeries.cosine(self.xi_coeffs)

    @property
    def amplitudes(self) -> tuple:
        return tuple(float(self.coeffs[j - 1]) for j in self.modes)

    @property
    def minimal_period_divisor(self) -> int:
        return minimal_period_divisor(self.coeffs)

    def to_dict(self) -> dict:
        return {"coeffs": [float(c) for c in self.coeffs],
                "xi_coeffs": [float(c) for c in self.xi_coeffs],
                "lambda": [float(self.lam[0]), float(self.lam[1])],
                "modes": list(self.modes), "newton_iters": int(self.newton_iters),
                "residual_norm": float(self.residual_norm)}

    @classmethod
    def from_dict(cls, d: dict) -> "BranchPoint":
        return cls(np.array(d["coeffs"], dtype=float), np.array(d["xi_coeffs"], dtype=float),
                   (float(d["lambda"][0]), float(d["lambda"][1])), tuple(d["modes"]),
                   int(d["newton_iters"]), float(d["residual_norm"]))


@dataclass
class Sheet:
    """Grid of branch points keyed by their grid coordinates.

    Keys are ``(t, lambda1)`` for simple and special sheets and ``(t1, t2)``
    for general sheets.
    """

    kind: str
    modes: tuple
    points: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def keys(self) -> list:
        return sorted(self.points)

    def ordered(self) -> list:
        return [(k, self.points[k]) for k in self.keys()]

    @property
    def complete(self) -> bool:
        return not self.failures

    def __len__(self):
        return len(self.points)


def minimal_period_divisor(coeffs, threshold: float = PERIOD_THRESHOLD) -> int:
    """gcd of the cosine modes whose coefficient exceeds ``threshold``."""
    active = [j + 1 for j, c in enumerate(np.asarray(coeffs)) if abs(c) > threshold]
    return reduce(math.gcd, active) if active else 0


# ---------------------------------------------------------------------------
# Newton on the augmented system
# ---------------------------------------------------------------------------


@dataclass
class _Result:
    a: np.ndarray
    lam: np.ndarray
    xi: np.ndarray
    iters: int
    rows_norm: float
    full_residual: np.ndarray
    jac: np.ndarray
    history: list


class AugmentedSystem:
    """F restricted to ``rows`` as a function of the free unknowns.

    ``fixed`` maps modes to prescribed coefficients, ``free`` lists the indices
    (0 or 1) of the free lambda components, and modes outside ``support`` are
    held at zero.
    """

    def __init__(self, problem: ReducedProblem, fixed: dict, free=(), support=None,
                 rows=None):
        n = problem.n
        self.problem = problem
        self.support = list(range(1, n + 1)) if support is None else sorted(support)
        self.fixed = {int(j): float(t) for j, t in fixed.items()}
        for j in self.fixed:
            if j not in self.support:
                raise PreconditionError(f"constrained mode {j} is outside the support")
        self.free = tuple(free)
        self.var_modes = [j for j in self.support if j not in self.fixed]
        self.rows = self.support if rows is None else sorted(rows)
        if len(self.rows) != len(self.var_modes) + len(self.free):
            raise PreconditionError("number of constraints must equal number of free parameters")
        self._row_idx = np.array(self.rows, dtype=int) - 1
        self._var_idx = np.array(self.var_modes, dtype=int) - 1

    def pack(self, a, lam) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        return np.concatenate([a[self._var_idx], [lam[i] for i in self.free]])

    def unpack(self, x, lam_base):
        a = np.zeros(self.problem.n)
        a[self._var_idx] = x[:len(self.var_modes)]
        for j, t in self.fixed.items():
            a[j - 1] = t
        lam = np.array(lam_base, dtype=float)
        for i, idx in enumerate(self.free):
            lam[idx] = x[len(self.var_modes) + i]
        return a, lam

    def evaluate(self, x, lam_base, xi_guess=None):
        a, lam = self.unpack(x, lam_base)
        ev = self.problem.evaluate(a, lam, xi_guess)
        return ev.residual[self._row_idx], ev

    def jacobian(self, x, lam_base, xi_guess=None) -> np.ndarray:
        a, lam = self.unpack(x, lam_base)
        h0 = self.problem.fd_step(a)
        cols = []
        for pos in range(x.size):
            if pos < len(self.var_modes):
                j = self.var_modes[pos]
                h = h0 / (j * j)
            else:
                h = LAMBDA_FD_REL * (1.0 + abs(x[pos]))
            e = np.zeros(x.size)
            e[pos] = h
            rp, _ = self.evaluate(x + e, lam_base, xi_guess)
            rm, _ = self.evaluate(x - e, lam_base, xi_guess)
            cols.append((rp - rm) / (2.0 * h))
        return np.column_stack(cols) if cols else np.zeros((len(self.rows), 0))

    def solve(self, a0, lam0, tol=None, max_iter=None, jac=None, polish=True) -> _Result:
        """Chord-Newton with Jacobian refresh on slow contraction and step
        halving when an iterate leaves the ball."""
        disc = self.problem.disc
        tol = disc.newton_tol if tol is None else tol
        max_iter = disc.newton_max_iter if max_iter is None else max_iter
        lam_base = np.array(lam0, dtype=float)
        x = self.pack(a0, lam_base)
        try:
            r, ev = self.evaluate(x, lam_base)
        except (OutOfBallError, EvaluationError) as exc:
            raise BallExitError(f"initial guess outside the ball ({exc}); try a smaller amplitude")
        rn = _norm(r)
        history = [rn]
        J = jac
        fresh = False
        it = 0
        while rn > tol:
            if it >= max_iter:
                raise NoConvergenceError(
                    f"augmented Newton did not converge in {max_iter} iterations "
                    f"(residual {rn:.3e})", history)
            if J is None:
                J = self.jacobian(x, lam_base, ev.xi.coeffs)
                fresh = True
            dx = _lstsq(J, r)
            step = 1.0
            r_new = None
            for _ in range(10):
                try:
                    r_new, ev_new = self.evaluate(x - step * dx, lam_base, ev.xi.coeffs)
                except (OutOfBallError, EvaluationError, NoConvergenceError):
                    r_new = None
                if r_new is not None:
                    break
                step *= 0.5
            if r_new is None:
                raise BallExitError("Newton iterate left the ball; try a smaller amplitude",
                                    history)
            rn_new = _norm(r_new)
            if rn_new > CHORD_RATIO * rn and not fresh:
                J = None
                continue
            x, r, ev, rn = x - step * dx, r_new, ev_new, rn_new
            fresh = False
            it += 1
            history.append(rn)
        if polish and rn > 0.0 and x.size:
            # one more chord step drives the residual to rounding level
            if J is None:
                J = self.jacobian(x, lam_base, ev.xi.coeffs)
            try:
                x_new = x - _lstsq(J, r)
                r_new, ev_new = self.evaluate(x_new, lam_base, ev.xi.coeffs)
                if _norm(r_new) <= rn:
                    x, r, ev, rn = x_new, r_new, ev_new, _norm(r_new)
                    history.append(rn)
            except (OutOfBallError, EvaluationError, NoConvergenceError):
                pass
        a, lam = self.unpack(x, lam_base)
        if J is None:
            J = np.zeros((len(self.rows), x.size))
        return _Result(a, lam, ev.xi.coeffs, it, rn, ev.residual, J, history)


def _norm(r) -> float:
    return float(np.max(np.abs(r))) if np.size(r) else 0.0


def _lstsq(J, r):
    if J.shape[0] == J.shape[1]:
        return np.linalg.solve(J, r)
    return np.linalg.lstsq(J, r, rcond=None)[0]


def _point(res: _Result, modes) -> BranchPoint:
    return BranchPoint(res.a.copy(), res.xi.copy(), (float(res.lam[0]), float(res.lam[1])),
                       tuple(modes), res.iters, _norm(res.full_residual))


def _problem(params: PhysicalParams, model, disc) -> ReducedProblem:
    return ReducedProblem(params.g, params.rho, model, disc)


def _free_indices(free_params) -> tuple:
    names = {"lambda1": 0, "lambda2": 1, 0: 0, 1: 1}
    try:
        return tuple(sorted(names[p] for p in free_params))
    except KeyError as exc:
        raise PreconditionError(f"unknown free parameter {exc}") from None


def solve_augmented(constraints, free_params, initial_guess, params: PhysicalParams,
                    model: StoredEnergyModel, disc: Discretization = Discretization(),
                    support=None) -> BranchPoint:
    """Solve {F(w, lambda) = 0, a_j(w) = t_j} for w and the free lambdas.

    ``initial_guess`` is ``(w, lambda)`` with ``w`` a TrigSeries or an array
    of cosine coefficients; ``lambda`` entries that are not free are taken
    from ``params``.
    """
    prob = _problem(params, model, disc)
    w0, lam0 = initial_guess
    a0 = _coeffs(w0, prob.n)
    lam = [params.lambda1, params.lambda2]
    for i in _free_indices(free_params):
        lam[i] = float(lam0[i])
    fixed = {int(j): float(t) for j, t in constraints}
    system = AugmentedSystem(prob, fixed, _free_indices(free_params), support)
    res = system.solve(a0, lam)
    return _point(res, tuple(fixed))


def _coeffs(w, n: int) -> np.ndarray:
    if isinstance(w, TrigSeries):
        return w.truncate(n).cos_coeffs.copy()
    a = np.zeros(n)
    w = np.asarray(w, dtype=float)
    a[:min(n, w.size)] = w[:n]
    return a


# ---------------------------------------------------------------------------
# Simple eigenvalues
# ---------------------------------------------------------------------------


def _continue_in_t(prob: ReducedProblem, k: int, ts, lam_start, free: tuple, support,
                   trivial_lam, failures: dict | None = None) -> dict:
    """Continue from the trivial solution along t >= 0 and t <= 0 separately.

    Returns {t: BranchPoint}.  Without ``failures`` the first failure is
    raised; with it, the failing t and every t beyond it on the same side are
    recorded there and the other side is still attempted.
    """
    out = {}
    pos = sorted(t for t in ts if t > 0.0)
    neg = sorted((t for t in ts if t < 0.0), reverse=True)
    if any(t == 0.0 for t in ts):
        out[0.0] = BranchPoint(np.zeros(prob.n), np.zeros(prob.n),
                               tuple(float(v) for v in trivial_lam), (k,), 0, 0.0)
    for branch in (pos, neg):
        prev = []  # (t, a, lam) of solved points, newest last
        jac = None
        for i, t in enumerate(branch):
            a0, lam0 = _predict(prev, t, prob.n, k, lam_start)
            system = AugmentedSystem(prob, {k: t}, free, support)
            try:
                res = system.solve(a0, lam0, jac=jac)
            except NoConvergenceError as exc:
                if failures is None:
                    raise
                failures[t] = f"{type(exc).__name__}: {exc}"
                for later in branch[i + 1:]:
                    failures[later] = f"not attempted: continuation stopped at t = {t!r}"
                break
            jac = res.jac if res.jac.any() else None
            out[t] = _point(res, (k,))
            prev.append((t, res.a, res.lam))
    return out


def _predict(prev, t, n, k, lam_start):
    """Previous point, or secant extrapolation after two points."""
    if not prev:
        a = np.zeros(n)
        a[k - 1] = t
        return a, np.array(lam_start, dtype=float)
    t1, a1, l1 = prev[-1]
    if len(prev) == 1:
        return a1 * (t / t1), l1.copy()
    t0, a0, l0 = prev[-2]
    s = (t - t1) / (t1 - t0)
    return a1 + s * (a1 - a0), l1 + s * (l1 - l0)


def simple_branch(k: int, lambda1: float, t_grid, params: PhysicalParams,
                  model: StoredEnergyModel, disc: Discretization = Discretization(),
                  free: str = "lambda2", lambda2: float | None = None) -> Sheet:
    """Branch bifurcating from (0, lambda1, f_k(lambda1)) at a simple eigenvalue.

    With ``free="lambda1"`` the roles are swapped: lambda2 is held at
    ``lambda2`` (default f_k(lambda1)) and lambda1 is solved for.
    """
    fk = f_k(k, lambda1, params.g, params.rho, model.E11, model.E22)
    lam_star = (float(lambda1), float(fk))
    modes = kernel_modes(params.with_lambda(*lam_star), model)
    if modes != [k]:
        raise NotSimpleError(f"kernel at ({lambda1}, {fk}) is spanned by modes {modes}")
    prob = _problem(params, model, disc)
    idx = _free_indices([free])
    start = lam_star
    if free == "lambda1" and lambda2 is not None:
        start = (float(lambda1), float(lambda2))
    pts = _continue_in_t(prob, k, list(t_grid), start, idx, None, start)
    sheet = Sheet("simple", (k,), provenance=_provenance(params, model, disc,
                                                          lambda_star=list(lam_star), free=free))
    for t, p in pts.items():
        sheet.points[(float(t), float(lambda1))] = p
    return sheet


def richardson_limit(values, ratio: float = 2.0, power: int = 2) -> float:
    """Extrapolate f(t), f(t/r), f(t/r^2), ... to t -> 0 for errors in t^power."""
    v = [float(x) for x in values]
    p = power
    while len(v) > 1:
        f = ratio ** p
        v = [(f * v[i + 1] - v[i]) / (f - 1.0) for i in range(len(v) - 1)]
        p += power
    return v[0]


# ---------------------------------------------------------------------------
# Double eigenvalues
# ---------------------------------------------------------------------------


def check_double_point(dp: DoublePoint, params: PhysicalParams, model: StoredEnergyModel):
    if dp.resonant or is_resonant(dp.k, dp.l):
        raise RefusalError(f"({dp.k}, {dp.l}) is resonant: max/min is an integer; "
                           "this case is not treated")
    ok, _ = nondegeneracy(dp.k, dp.l, dp.lambda1, params.g, params.rho, model.E11, model.E22)
    if not ok:
        raise RefusalError(f"({dp.k}, {dp.l}) violates the non-degeneracy condition "
                           "(g rho / (lambda1 - E11))^2 != kl")


def z_support(k: int, n: int) -> list:
    return list(range(k, n + 1, k))


def special_sheet(k: int, double_point: DoublePoint, points, params: PhysicalParams,
                  model: StoredEnergyModel, disc: Discretization = Discretization()) -> Sheet:
    """Solutions in Z_k (cosine support on multiples of k) with lambda2 free.

    ``points`` is an iterable of ``(t, lambda1)``; for every distinct lambda1
    the t values are reached by continuation from the trivial solution.
    """
    check_double_point(double_point, params, model)
    if k not in (double_point.k, double_point.l):
        raise PreconditionError(f"mode {k} is not one of the double point's modes")
    prob = _problem(params, model, disc)
    support = z_support(k, prob.n)
    by_l1: dict = {}
    for t, l1 in points:
        by_l1.setdefault(float(l1), set()).add(float(t))
    sheet = Sheet("special", (k,), provenance=_provenance(
        params, model, disc, double_point=double_point.to_dict()))
    for l1 in sorted(by_l1):
        fk = f_k(k, l1, params.g, params.rho, model.E11, model.E22)
        ts = sorted(by_l1[l1])
        failed: dict = {}
        pts = _continue_in_t(prob, k, ts, (l1, fk), (1,), support, (l1, fk), failed)
        for t, p in pts.items():
            sheet.points[(t, l1)] = p
        for t, msg in failed.items():
            sheet.failures[(t, l1)] = msg
    return sheet


class PhiPsi:
    """Lyapunov-Schmidt functionals at a double point.

    ``phi`` solves the auxiliary equation on all modes except k and l with
    a_k = t1, a_l = t2 fixed and returns (Phi_k, Phi_l) = (F_k, F_l).
    """

    def __init__(self, problem: ReducedProblem, k: int, l: int, support=None,
                 eps: float = PSI_EPS):
        self.problem = problem
        self.k, self.l = k, l
        n = problem.n
        self.support = list(range(1, n + 1)) if support is None else sorted(support)
        self.rows = [j for j in self.support if j not in (k, l)]
        self.eps = eps
        self._jac = None

    def aux(self, t1, t2, lam, guess=None) -> _Result:
        system = AugmentedSystem(self.problem, {self.k: t1, self.l: t2}, (), self.support,
                                 self.rows)
        if guess is None:
            guess = np.zeros(self.problem.n)
        try:
            res = system.solve(guess, lam, jac=self._jac)
        except BallExitError:
            res = self._homotopy(t1, t2, lam)
        if res.jac.any():
            self._jac = res.jac
        return res

    def _homotopy(self, t1, t2, lam, steps: int = 4) -> _Result:
        """Reach (t1, t2) in equal amplitude steps from the trivial state, for
        when the plain guess lies outside the ball but the solution does not."""
        a = np.zeros(self.problem.n)
        jac = None
        for i in range(1, steps + 1):
            s = i / steps
            system = AugmentedSystem(self.problem, {self.k: s * t1, self.l: s * t2}, (),
                                     self.support, self.rows)
            res = system.solve(a, lam, jac=jac)
            a, jac = res.a * ((i + 1) / i), (res.jac if res.jac.any() else None)
        return res

    def phi(self, t1, t2, lam, guess=None):
        res = self.aux(t1, t2, lam, guess)
        return (float(res.full_residual[self.k - 1]), float(res.full_residual[self.l - 1])), res

    def _limit(self, which: int, t1, t2, lam, guess):
        """d Phi_which / d t at t = 0 by central differences at eps and eps/2,
        Richardson-combined to cancel the eps^2 term."""
        def cd(e):
            if which == 0:
                hi, lo = self.phi(e, t2, lam, guess)[0][0], self.phi(-e, t2, lam, guess)[0][0]
            else:
                hi, lo = self.phi(t1, e, lam, guess)[0][1], self.phi(t1, -e, lam, guess)[0][1]
            return (hi - lo) / (2.0 * e)
        return richardson_limit([cd(self.eps), cd(0.5 * self.eps)])

    def psi(self, t1, t2, lam, guess=None):
        """(Psi_k, Psi_l) = (Phi_k / t1, Phi_l / t2), with divided-difference
        limits on t1 = 0 or t2 = 0."""
        (pk, pl), res = self.phi(t1, t2, lam, guess)
        psi_k = pk / t1 if t1 != 0.0 else self._limit(0, t1, t2, lam, guess)
        psi_l = pl / t2 if t2 != 0.0 else self._limit(1, t1, t2, lam, guess)
        return np.array([psi_k, psi_l]), res

    def psi_lambda_jacobian(self, t1, t2, lam, guess=None) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        cols = []
        for i in range(2):
            h = LAMBDA_FD_REL * (1.0 + abs(lam[i]))
            e = np.zeros(2)
            e[i] = h
            cols.append((self.psi(t1, t2, lam + e, guess)[0]
                         - self.psi(t1, t2, lam - e, guess)[0]) / (2 * h))
        return np.column_stack(cols)

    def solve_lambda(self, t1, t2, lam0, guess=None, step_tol=1e-10, psi_tol=1e-7,
                     max_iter=20):
        """Newton for Psi(t1, t2, lambda) = 0 in lambda.

        Psi carries divided-difference noise, so convergence is declared on
        the Newton step, |d lambda| <= step_tol (1 + |lambda|), with a sanity
        bound ``psi_tol`` on the final |Psi|.
        """
        lam = np.array(lam0, dtype=float)
        history = []
        J = None
        for it in range(1, max_iter + 1):
            psi, res = self.psi(t1, t2, lam, guess)
            guess = res.a
            history.append(_norm(psi))
            if J is None or (len(history) > 1 and history[-1] > 0.5 * history[-2]):
                J = self.psi_lambda_jacobian(t1, t2, lam, guess)
            step = np.linalg.solve(J, psi)
            lam = lam - step
            if np.all(np.abs(step) <= step_tol * (1.0 + np.abs(lam))):
                psi, res = self.psi(t1, t2, lam, guess)
                history.append(_norm(psi))
                if history[-1] > psi_tol:
                    break
                return lam, res, it
        raise NoConvergenceError(f"Psi Newton did not converge (|Psi| = {history[-1]:.3e})",
                                 history)


def phi_psi_eval(t1: float, t2: float, lam, double_point: DoublePoint, params: PhysicalParams,
                 model: StoredEnergyModel, disc: Discretization = Discretization(),
                 eps: float = PSI_EPS):
    """(Phi_k, Phi_l, Psi_k, Psi_l) at (t1, t2, lambda)."""
    check_double_point(double_point, params, model)
    prob = _problem(params, model, disc)
    d = math.gcd(double_point.k, double_point.l)
    pp = PhiPsi(prob, double_point.k, double_point.l, z_support(d, prob.n), eps)
    (phk, phl), _ = pp.phi(t1, t2, lam)
    psi, _ = pp.psi(t1, t2, lam)
    return phk, phl, float(psi[0]), float(psi[1])


# ---------------------------------------------------------------------------
# General sheet
# ---------------------------------------------------------------------------


def _grid_index_of_zero(grid) -> int:
    zeros = [i for i, t in enumerate(grid) if t == 0.0]
    if len(zeros) != 1:
        raise PreconditionError("amplitude grids must contain 0 exactly once")
    return zeros[0]


def wavefront_levels(t1_grid, t2_grid) -> list:
    """Cells grouped by |i - i0| + |j - j0| from the origin cell."""
    i0, j0 = _grid_index_of_zero(t1_grid), _grid_index_of_zero(t2_grid)
    levels: dict = {}
    for i in range(len(t1_grid)):
        for j in range(len(t2_grid)):
            levels.setdefault(abs(i - i0) + abs(j - j0), []).append((i, j))
    return [levels[d] for d in sorted(levels)]


def _parents(i, j, i0, j0):
    """Predictor chain for cell (i, j): the neighbour one step closer to the
    origin (along the longer offset, i on ties) and the one beyond it."""
    di, dj = i - i0, j - j0
    if abs(di) >= abs(dj) and di != 0:
        s = (int(np.sign(di)), 0)
    else:
        s = (0, int(np.sign(dj)))
    p1 = (i - s[0], j - s[1])
    p2 = (i - 2 * s[0], j - 2 * s[1])
    return p1, p2


@dataclass
class _Context:
    params: PhysicalParams
    model: StoredEnergyModel
    disc: Discretization
    k: int
    l: int
    lam_star: tuple


_WORKER_CACHE: dict = {}


def _context_problem(ctx: _Context):
    key = (ctx.params, ctx.model, ctx.disc, ctx.k, ctx.l)
    if key not in _WORKER_CACHE:
        _WORKER_CACHE.clear()
        prob = _problem(ctx.params, ctx.model, ctx.disc)
        d = math.gcd(ctx.k, ctx.l)
        _WORKER_CACHE[key] = (prob, PhiPsi(prob, ctx.k, ctx.l, z_support(d, prob.n)))
    return _WORKER_CACHE[key]


def _solve_cell(ctx: _Context, t1: float, t2: float, pred1, pred2):
    """Solve one general-sheet cell.  ``pred1``/``pred2`` are BranchPoint
    dicts of the predictor chain (``pred2`` may be None).  Returns
    ``("ok", point_dict)`` or ``("fail", message)``."""
    prob, pp = _context_problem(ctx)
    p1 = BranchPoint.from_dict(pred1)
    a0, lam0 = p1.coeffs.copy(), np.array(p1.lam)
    if pred2 is not None:
        p2 = BranchPoint.from_dict(pred2)
        a0, lam0 = 2.0 * a0 - p2.coeffs, 2.0 * lam0 - np.array(p2.lam)
    a0[ctx.k - 1], a0[ctx.l - 1] = t1, t2
    try:
        if t1 == 0.0 or t2 == 0.0:
            pp._jac = None
            lam, res, it = pp.solve_lambda(t1, t2, lam0, a0)
            pt = _point(res, (ctx.k, ctx.l))
            pt.newton_iters = it
        else:
            d = math.gcd(ctx.k, ctx.l)
            system = AugmentedSystem(prob, {ctx.k: t1, ctx.l: t2}, (0, 1), z_support(d, prob.n))
            pt = _point(system.solve(a0, lam0), (ctx.k, ctx.l))
    except (NoConvergenceError, OutOfBallError, EvaluationError, np.linalg.LinAlgError) as exc:
        return "fail", f"{type(exc).__name__}: {exc}"
    return "ok", pt.to_dict()


def general_sheet(double_point: DoublePoint, t1_grid, t2_grid, params: PhysicalParams,
                  model: StoredEnergyModel, disc: Discretization = Discretization(),
                  workers: int = 1, seed: int = 0, store=None, max_cells: int | None = None
                  ) -> Sheet:
    """Sheet lambda_bar(t1, t2) through a non-resonant, non-degenerate double point.

    Cells are solved level by level in |i| + |j| from the origin; each cell
    uses only points of the previous levels as predictors, so results do not
    depend on the number of workers or on ``seed`` (which only shuffles the
    dispatch order within a level).  ``store`` is an optional
    :class:`~hydroelastic.storage.SheetStore`; points already in it are
    reused, new ones are appended.  ``max_cells`` stops after that many new
    cells (used to produce partial files).
    """
    check_double_point(double_point, params, model)
    k, l = double_point.k, double_point.l
    t1_grid = [float(t) for t in t1_grid]
    t2_grid = [float(t) for t in t2_grid]
    i0, j0 = _grid_index_of_zero(t1_grid), _grid_index_of_zero(t2_grid)
    ctx = _Context(params, model, disc, k, l, tuple(double_point.lambda_star))
    sheet = Sheet("general", (k, l), provenance=_provenance(
        params, model, disc, double_point=double_point.to_dict(),
        t1_grid=t1_grid, t2_grid=t2_grid))
    if store is not None:
        for key, pt in store.points.items():
            sheet.points[key] = pt
        sheet.failures.update(store.failures)
    origin = (0.0, 0.0)
    if origin not in sheet.points:
        pt = BranchPoint(np.zeros(disc.n_modes), np.zeros(disc.n_modes),
                         tuple(double_point.lambda_star), (k, l), 0, 0.0)
        _record(sheet, store, origin, pt)
    rng = np.random.default_rng(seed)
    budget = max_cells
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for level in wavefront_levels(t1_grid, t2_grid)[1:]:
            todo = []
            for (i, j) in level:
                key = (t1_grid[i], t2_grid[j])
                if key in sheet.points or key in sheet.failures:
                    continue
                q1, q2 = _parents(i, j, i0, j0)
                k1 = (t1_grid[q1[0]], t2_grid[q1[1]])
                if k1 not in sheet.points:
                    continue
                pred2 = None
                if 0 <= q2[0] < len(t1_grid) and 0 <= q2[1] < len(t2_grid):
                    k2 = (t1_grid[q2[0]], t2_grid[q2[1]])
                    if k2 in sheet.points:
                        pred2 = sheet.points[k2].to_dict()
                todo.append((key, sheet.points[k1].to_dict(), pred2))
            if budget is not None:
                todo = todo[:max(budget, 0)]
                budget -= len(todo)
            order = rng.permutation(len(todo)) if todo else []
            todo = [todo[i] for i in order]
            if pool is not None:
                futures = [pool.submit(_solve_cell, ctx, key[0], key[1], p1, p2)
                           for key, p1, p2 in todo]
                results = [f.result() for f in futures]
            else:
                results = [_solve_cell(ctx, key[0], key[1], p1, p2) for key, p1, p2 in todo]
            for (key, _, _), (status, payload) in sorted(zip(todo, results), key=lambda r: r[0][0]):
                if status == "ok":
                    _record(sheet, store, key, BranchPoint.from_dict(payload))
                else:
                    sheet.failures[key] = payload
                    if store is not None:
                        store.append_failure(key, payload)
            if budget is not None and budget <= 0:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return sheet


def _record(sheet: Sheet, store, key, pt: BranchPoint):
    sheet.points[key] = pt
    if store is not None:
        store.append(key, pt)


def _provenance(params: PhysicalParams, model: StoredEnergyModel, disc: Discretization,
                **extra) -> dict:
    from . import __version__
    out = {"version": __version__,
           "params": {"g": params.g, "rho": params.rho},
           "model": model.to_dict(),
           "discretization": {"n_modes": disc.n_modes,
                              "oversampling_factor": disc.oversampling_factor,
                              "newton_tol": disc.newton_tol,
                              "newton_max_iter": disc.newton_max_iter,
                              "fd_step_scale": disc.fd_step_scale}}
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass
class CheckReport:
    passed: bool
    entries: list = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def lines(self) -> list:
        return [f"{'PASS' if ok else 'FAIL'} {name}: {msg}" for name, ok, msg in self.entries]


def secondary_check(general: Sheet, special_k: Sheet, special_l: Sheet,
                    lam_tol: float = 1e-8, w_tol: float = 1e-8) -> CheckReport:
    """Compare the edges of the general sheet with the special sheets and
    check symmetry breaking in the interior."""
    if general.kind != "general":
        raise PreconditionError("first sheet must be a general sheet")
    k, l = general.modes
    d = math.gcd(k, l)
    entries = []
    for label, sheet, edge_index, mode in (("edge t2=0", special_k, 1, k),
                                           ("edge t1=0", special_l, 0, l)):
        edge = [(key, p) for key, p in general.ordered()
                if key[edge_index] == 0.0 and key != (0.0, 0.0)]
        worst_lam = worst_w = 0.0
        missing = []
        bad_div = []
        for key, p in edge:
            t = key[1 - edge_index]
            sk = (t, p.lam[0])
            q = sheet.points.get(sk)
            if q is None:
                missing.append(sk)
                continue
            worst_lam = max(worst_lam, abs(q.lam[1] - p.lam[1]))
            worst_w = max(worst_w, float(np.max(np.abs(q.coeffs - p.coeffs))))
            if q.minimal_period_divisor != mode:
                bad_div.append(sk)
        if missing:
            entries.append((label, False,
                            f"{len(missing)} edge points have no special-sheet point with the "
                            f"same (t, lambda1), first {missing[0]}"))
        else:
            ok = worst_lam <= lam_tol and worst_w <= w_tol and not bad_div
            entries.append((label, ok, f"{len(edge)} points, max |dlambda2| = {worst_lam:.2e}, "
                                       f"max |dw| = {worst_w:.2e}, divisor != {mode} at "
                                       f"{len(bad_div)} points"))
    interior = [(key, p) for key, p in general.ordered() if key[0] != 0.0 and key[1] != 0.0]
    bad = [key for key, p in interior
           if p.minimal_period_divisor != d or abs(p.amplitudes[0]) == 0.0
           or abs(p.amplitudes[1]) == 0.0]
    entries.append(("interior", not bad,
                    f"{len(interior)} points, divisor != {d} at {len(bad)} points"))
    return CheckReport(all(e[1] for e in entries), entries)


@dataclass
class Profile:
    x: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    stretch: np.ndarray
    curvature: np.ndarray
    c: float
    c0: float
    d: float
    mean_shift: float


def reconstruct_profile(point: BranchPoint, params: PhysicalParams,
                        model: StoredEnergyModel | None = None, n_plot: int = 256) -> Profile:
    """Sample the physical surface (x, y)(tau) = (-tau - C w*, w*) with
    w* = w - (1/2 pi) int w C w' - rho, plus stretch, curvature and speeds."""
    n = point.coeffs.size
    size = max(int(n_plot), 2 * 4 * (n + 1))
    grid = Grid.of_size(size)
    w = grid.from_cos(point.coeffs)
    geo = geometry(grid, w)
    shift = grid.integrate(w * geo.cwp) / (2.0 * np.pi) + params.rho
    w_star = w - shift
    x = -grid.tau - grid.hilbert(w_star)
    xi = grid.from_cos(point.xi_coeffs)
    stretch = geo.omega / (1.0 + xi)
    p = params.with_lambda(*point.lam)
    return Profile(x, w_star, grid.tau.copy(), stretch, geo.sigma, p.c, p.c0, p.d, shift)
