"""Linear theory at the trivial solution w = 0.

The linearized operator d_w F(0, lambda) is diagonal in the cosine basis with
entries ``-dispersion_lhs(j) / j^2``.  Its kernel is spanned by the modes k
satisfying the dispersion relation; these lie on the curves
``lambda2 = f_k(lambda1)``.  Two such curves cross at double points, where the
kernel is two-dimensional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .elasticity import PhysicalParams, StoredEnergyModel
from .errors import ConsistencyError, PreconditionError, SingularParameterError

KERNEL_TOL = 1e-9
ROOT_TOL = 1e-9
NONDEGENERACY_TOL = 1e-9


def _gap(lambda1: float, E11: float) -> float:
    d = lambda1 - E11
    if d == 0.0:
        raise SingularParameterError("lambda1 equals E11(1, 0)")
    return d


def dispersion_lhs(k: int, params: PhysicalParams, model: StoredEnergyModel) -> float:
    """E22 k^4 - lambda1 k^2 - lambda2 k + g + (g rho)^2 / (lambda1 - E11)."""
    l1, l2 = params.lambda1, params.lambda2
    d = _gap(l1, model.E11)
    return (model.E22 * k ** 4 - l1 * k * k - l2 * k + params.g
            + params.g_rho ** 2 / d)


def f_k(k: int, lambda1, g: float, rho: float, E11: float, E22: float):
    """The value of lambda2 at which mode k is in the kernel.

    Accepts scalar or array ``lambda1``.
    """
    lam1 = np.asarray(lambda1, dtype=float)
    d = lam1 - E11
    if np.any(d == 0.0):
        raise SingularParameterError("lambda1 equals E11(1, 0)")
    out = E22 * k ** 3 - lam1 * k + (g + (g * rho) ** 2 / d) / k
    return float(out) if out.ndim == 0 else out


def f_k_prime(k: int, lambda1: float, g: float, rho: float, E11: float) -> float:
    d = _gap(lambda1, E11)
    return -k - (g * rho) ** 2 / (k * d * d)


def _quadratic_roots(a: float, b: float, c: float):
    """Real roots of a X^2 + b X + c in ascending order, cancellation-free."""
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return disc, ()
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    r1, r2 = q / a, (c / q if q != 0.0 else -b / (2.0 * a))
    return disc, tuple(sorted((r1, r2)))


def pk_coefficients(k: int, g: float, rho: float, E11: float, E22: float):
    return (float(k * k), -(E22 * k ** 4 + E11 * k * k + g),
            E11 * (E22 * k ** 4 + g) - (g * rho) ** 2)


def pk_roots(k: int, g: float, rho: float, E11: float, E22: float):
    """Roots X_k^- < E11 < X_k^+ of p_k and its discriminant.

    f_k(lambda1) > 0 exactly on (0, X_k^-) and (E11, X_k^+).
    """
    disc, roots = _quadratic_roots(*pk_coefficients(k, g, rho, E11, E22))
    if len(roots) != 2:
        raise ConsistencyError(f"p_{k} has negative discriminant {disc}")
    return roots[0], roots[1], disc


def admissible_intervals(k: int, g: float, rho: float, E11: float, E22: float):
    xm, xp, _ = pk_roots(k, g, rho, E11, E22)
    out = []
    if xm > 0.0:
        out.append((0.0, xm))
    out.append((E11, xp))
    return out


def _dominance_index(params: PhysicalParams, model: StoredEnergyModel) -> int:
    """Smallest K beyond which the quartic term rules out any root.

    For k >= K, E22 k^4 > 2 (lambda1 k^2 + lambda2 k + |g + G|) and the
    left-hand side is increasing, so it stays positive.
    """
    c = abs(params.g + params.g_rho ** 2 / _gap(params.lambda1, model.E11))
    k = 1
    while model.E22 * k ** 4 <= 2.0 * (params.lambda1 * k * k + params.lambda2 * k + c):
        k += 1
    return k


def kernel_modes(params: PhysicalParams, model: StoredEnergyModel, k_max: int = 64,
                 tol: float = KERNEL_TOL) -> list[int]:
    """Modes k with a vanishing dispersion relation.

    The scan runs to ``k_max`` or to the quartic-dominance index, whichever is
    larger, so no root is lost by truncation.
    """
    k_end = max(int(k_max), _dominance_index(params, model))
    modes = [k for k in range(1, k_end + 1)
             if abs(dispersion_lhs(k, params, model)) <= tol * (1.0 + model.E22 * k ** 4)]
    if len(modes) > 2:
        raise ConsistencyError(f"more than two kernel modes {modes}")
    return modes


@dataclass
class DispersionCurve:
    k: int
    lambda1: np.ndarray
    lambda2: np.ndarray
    intervals: list = field(default_factory=list)

    def __len__(self):
        return int(self.lambda1.size)

    @property
    def empty(self) -> bool:
        return self.lambda1.size == 0


def curve_Ak(k: int, lambda1_range, n_samples: int, g: float, rho: float, E11: float,
             E22: float, lambda2_range=None, guard: float = 1e-9) -> DispersionCurve:
    """Sample the curve lambda2 = f_k(lambda1) over its admissible part.

    Each admissible sub-interval of ``lambda1_range`` receives ``n_samples``
    points.  With ``lambda2_range`` the lambda1 limits are first narrowed to
    where f_k lies inside the window so that samples are not wasted on
    clipped parts.
    """
    lo, hi = float(lambda1_range[0]), float(lambda1_range[1])
    if not lo < hi:
        raise PreconditionError("lambda1_range must be increasing")
    if n_samples < 2:
        raise PreconditionError("n_samples must be at least 2")
    intervals = admissible_intervals(k, g, rho, E11, E22)
    xs, ys = [], []
    for a, b in intervals:
        a, b = max(a, lo) + guard, min(b, hi) - guard
        if a >= b:
            continue
        if lambda2_range is not None:
            a, b = _clip_to_window(k, a, b, g, rho, E11, E22, lambda2_range)
            if a is None:
                continue
        x = np.linspace(a, b, n_samples)
        y = f_k(k, x, g, rho, E11, E22)
        keep = y > 0.0
        if lambda2_range is not None:
            keep &= (y >= lambda2_range[0]) & (y <= lambda2_range[1])
        xs.append(x[keep])
        ys.append(y[keep])
    x = np.concatenate(xs) if xs else np.zeros(0)
    y = np.concatenate(ys) if ys else np.zeros(0)
    return DispersionCurve(k, x, y, intervals)


def _clip_to_window(k, a, b, g, rho, E11, E22, window):
    """Sub-interval of [a, b] where f_k lies in ``window``.

    f_k is monotone on each admissible interval (f_k' < 0 everywhere), so the
    window maps to an interval found by bisection.
    """
    f = lambda x: f_k(k, x, g, rho, E11, E22)  # noqa: E731
    y0, y1 = window

    def solve(level):
        # decreasing f: find x with f(x) = level
        if f(a) <= level:
            return a
        if f(b) >= level:
            return b
        u, v = a, b
        for _ in range(200):
            m = 0.5 * (u + v)
            if f(m) > level:
                u = m
            else:
                v = m
        return 0.5 * (u + v)

    left, right = solve(y1), solve(y0)
    if left >= right:
        return None, None
    return left, right


@dataclass(frozen=True)
class DoublePoint:
    k: int
    l: int
    lambda_star: tuple
    nondegenerate: bool
    resonant: bool
    mismatch: float = 0.0

    @property
    def lambda1(self) -> float:
        return self.lambda_star[0]

    @property
    def lambda2(self) -> float:
        return self.lambda_star[1]

    def to_dict(self) -> dict:
        return {"k": self.k, "l": self.l, "lambda1": self.lambda_star[0],
                "lambda2": self.lambda_star[1], "nondegenerate": self.nondegenerate,
                "resonant": self.resonant, "mismatch": self.mismatch}


def is_resonant(k: int, l: int) -> bool:
    big, small = max(k, l), min(k, l)
    return big % small == 0


def h_kl(k: int, l: int, lambda1: float, E22: float) -> float:
    return (k + l) * (E22 * (k * k + l * l) - lambda1)


def qkl_coefficients(k: int, l: int, g: float, rho: float, E11: float, E22: float):
    kl = float(k * l)
    s = k * k + k * l + l * l
    return (kl, -(E11 * kl + E22 * kl * s - g),
            E11 * E22 * kl * s - E11 * g + (g * rho) ** 2)


def double_points(k: int, l: int, g: float, rho: float, E11: float, E22: float,
                  polish_tol: float = 1e-12) -> list[DoublePoint]:
    """Crossings of the curves A_k and A_l with lambda1, lambda2 > 0."""
    if k == l or k < 1 or l < 1:
        raise PreconditionError("need distinct positive modes k and l")
    disc, roots = _quadratic_roots(*qkl_coefficients(k, l, g, rho, E11, E22))
    out = []
    for x in roots:
        if not x > 0.0 or x == E11:
            continue
        for _ in range(5):
            d = f_k(k, x, g, rho, E11, E22) - f_k(l, x, g, rho, E11, E22)
            if abs(d) <= polish_tol:
                break
            x = x - d / (f_k_prime(k, x, g, rho, E11) - f_k_prime(l, x, g, rho, E11))
        fk, fl = f_k(k, x, g, rho, E11, E22), f_k(l, x, g, rho, E11, E22)
        mismatch = abs(fk - fl)
        if mismatch > ROOT_TOL * (1.0 + abs(fk)):
            raise ConsistencyError(f"f_{k} and f_{l} differ by {mismatch:.3e} at a root of q")
        lam2 = h_kl(k, l, x, E22)
        if not lam2 > 0.0:
            continue
        nondeg, _ = nondegeneracy(k, l, x, g, rho, E11, E22)
        out.append(DoublePoint(k, l, (float(x), float(lam2)), nondeg,
                               is_resonant(k, l), float(mismatch)))
    return out


def nondegeneracy(k: int, l: int, lambda1_star: float, g: float, rho: float, E11: float,
                  E22: float = 1.0, tol: float = NONDEGENERACY_TOL):
    """Non-degeneracy by two independent criteria.

    The first compares (g rho / (lambda1 - E11))^2 with kl, the second the
    slopes of f_k and f_l.  Both are scaled so that they are algebraically the
    same test; a disagreement raises ConsistencyError.  ``E22`` does not enter
    either criterion and is accepted for signature symmetry.
    """
    G = g * rho / _gap(lambda1_star, E11)
    kl = k * l
    by_value = abs(G * G - kl) > tol * kl
    slope_gap = f_k_prime(k, lambda1_star, g, rho, E11) - f_k_prime(l, lambda1_star, g, rho, E11)
    by_slopes = abs(slope_gap) > tol * abs(l - k)
    if by_value != by_slopes:
        raise ConsistencyError(
            f"non-degeneracy criteria disagree: G^2 - kl = {G * G - kl:.3e}, "
            f"slope gap = {slope_gap:.3e}")
    return by_value, by_slopes


def linearized_diagonal(j: int, params: PhysicalParams, model: StoredEnergyModel) -> float:
    """Diagonal entry of d_w F(0, lambda) on cos(j tau)."""
    d = _gap(params.lambda1, model.E11)
    return (-model.E22 * j * j + params.lambda1 + params.lambda2 / j
            - (params.g + params.g_rho ** 2 / d) / (j * j))


def linearized_diagonal_dlambda(j: int, params: PhysicalParams, model: StoredEnergyModel):
    """(d/d lambda1, d/d lambda2) of the diagonal entry."""
    d = _gap(params.lambda1, model.E11)
    return 1.0 + (params.g_rho / (j * d)) ** 2, 1.0 / j


def psi_determinant_closed(k: int, l: int, lambda1_star: float, g: float, rho: float,
                           E11: float) -> float:
    """det d_lambda Psi(0, 0, lambda*) = (G^2 - kl)(1/k - 1/l) / (kl)."""
    G = g * rho / _gap(lambda1_star, E11)
    return (G * G - k * l) * (1.0 / k - 1.0 / l) / (k * l)
