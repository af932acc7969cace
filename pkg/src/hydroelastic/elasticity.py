"""Stored-energy functions E(nu, mu) of the membrane and physical constants.

The concrete family is a polynomial in the strain s = nu - 1 and the bending
strain mu::

    E = a/2 s^2 + b/2 mu^2 + c3 s^3 + c4 s^4 + d1 s mu^2 + cross s mu

``cross`` is zero for every model built by :func:`make_canonical_energy`; it
exists so that a violation of E12(1, 0) = 0 can be constructed on purpose.
Partials are evaluated from the strain directly, which keeps them accurate
for states very close to the rest state.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidModelError, PreconditionError, SingularParameterError

VALIDATED_NU = (0.25, 4.0)
VALIDATED_MU = (-4.0, 4.0)


class EnergyPartials(NamedTuple):
    E: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E11: np.ndarray
    E12: np.ndarray
    E22: np.ndarray


@dataclass(frozen=True)
class StoredEnergyModel:
    a: float
    b: float
    c3: float = 0.0
    c4: float = 0.0
    d1: float = 0.0
    cross: float = 0.0

    def partials_strain(self, s, mu) -> EnergyPartials:
        """Partials at nu = 1 + s."""
        a, b, c3, c4, d1, x = self.a, self.b, self.c3, self.c4, self.d1, self.cross
        s2 = s * s
        mu2 = mu * mu
        E = (0.5 * a * s2 + 0.5 * b * mu2 + c3 * s2 * s + c4 * s2 * s2
             + d1 * s * mu2 + x * s * mu)
        E1 = a * s + 3.0 * c3 * s2 + 4.0 * c4 * s2 * s + d1 * mu2 + x * mu
        E2 = b * mu + 2.0 * d1 * s * mu + x * s
        E11 = a + 6.0 * c3 * s + 12.0 * c4 * s2
        E12 = 2.0 * d1 * mu + x
        E22 = b + 2.0 * d1 * s
        E11 = E11 + 0.0 * mu
        E22 = E22 + 0.0 * mu
        E12 = E12 + 0.0 * s
        return EnergyPartials(E, E1, E2, E11, E12, E22)

    def partials(self, nu, mu) -> EnergyPartials:
        return self.partials_strain(np.asarray(nu, dtype=float) - 1.0, np.asarray(mu, dtype=float))

    def energy(self, nu, mu):
        return self.partials(nu, mu).E

    @property
    def E11(self) -> float:
        """E11 at the rest state (1, 0)."""
        return float(self.partials_strain(0.0, 0.0).E11)

    @property
    def E22(self) -> float:
        return float(self.partials_strain(0.0, 0.0).E22)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "StoredEnergyModel":
        return cls(**{k: float(v) for k, v in data.items()})


def make_canonical_energy(a: float, b: float, c3: float = 0.0, c4: float = 0.0,
                          d1: float = 0.0) -> StoredEnergyModel:
    """Polynomial energy with E11(1,0) = a and E22(1,0) = b."""
    for name, v in (("a", a), ("b", b)):
        if not (math.isfinite(v) and v > 0.0):
            raise InvalidModelError(f"coefficient {name} must be positive, got {v}")
    for name, v in (("c3", c3), ("c4", c4), ("d1", d1)):
        if not math.isfinite(v):
            raise InvalidModelError(f"coefficient {name} must be finite")
    return StoredEnergyModel(float(a), float(b), float(c3), float(c4), float(d1))


def energy_derivs(model: StoredEnergyModel, nu: float, mu: float) -> EnergyPartials:
    if not nu > 0.0:
        raise DomainError(f"stretch nu must be positive, got {nu}")
    p = model.partials(nu, mu)
    return EnergyPartials(*(float(v) for v in p))


@dataclass
class ValidationReport:
    passed: bool
    failures: list = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def names(self):
        return [f[0] for f in self.failures]


def validate_hypotheses(model: StoredEnergyModel, n_samples: int = 161,
                        tol: float = 1e-12) -> ValidationReport:
    """Check the rest-state and convexity conditions at (1, 0) and E >= 0 on
    the validated domain ``[1/4, 4] x [-4, 4]``."""
    rest = model.partials(1.0, 0.0)
    values = {name: float(v) for name, v in zip(EnergyPartials._fields, rest)}
    failures = []
    for name in ("E", "E1", "E2", "E12"):
        if abs(values[name]) > tol:
            failures.append((name, values[name], "must vanish at (1, 0)"))
    for name in ("E11", "E22"):
        if not values[name] > 0.0:
            failures.append((name, values[name], "must be positive at (1, 0)"))

    nu = np.linspace(*VALIDATED_NU, n_samples)
    mu = np.linspace(*VALIDATED_MU, n_samples)
    N, Mu = np.meshgrid(nu, mu, indexing="ij")
    E = model.energy(N, Mu)
    i = np.unravel_index(np.argmin(E), E.shape)
    values["min_E"] = float(E[i])
    if E[i] < -tol:
        failures.append(("nonnegativity", float(E[i]),
                         f"E < 0 at (nu, mu) = ({N[i]:.4g}, {Mu[i]:.4g})"))
    return ValidationReport(not failures, failures, values)


@dataclass(frozen=True)
class PhysicalParams:
    """Gravity, membrane density and the speed parameters.

    ``lambda1 = c^2 rho`` and ``lambda2 = c0^2`` where ``c0`` is the wave speed
    and ``d = c0 - c`` the drift velocity of the membrane.
    """

    g: float
    rho: float
    lambda1: float
    lambda2: float

    def __post_init__(self):
        for name in ("g", "rho", "lambda1", "lambda2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise PreconditionError(f"{name} must be positive, got {v}")

    @classmethod
    def from_g_rho(cls, g: float, g_rho: float, lambda1: float, lambda2: float):
        return cls(g, g_rho / g, lambda1, lambda2)

    @property
    def g_rho(self) -> float:
        return self.g * self.rho

    @property
    def lam(self):
        return (self.lambda1, self.lambda2)

    @property
    def c(self) -> float:
        return math.sqrt(self.lambda1 / self.rho)

    @property
    def c0(self) -> float:
        return math.sqrt(self.lambda2)

    @property
    def d(self) -> float:
        return self.c0 - self.c

    def with_lambda(self, lambda1=None, lambda2=None) -> "PhysicalParams":
        return PhysicalParams(self.g, self.rho,
                              self.lambda1 if lambda1 is None else float(lambda1),
                              self.lambda2 if lambda2 is None else float(lambda2))

    def check_regular(self, model: StoredEnergyModel):
        if self.lambda1 == model.E11:
            raise SingularParameterError("lambda1 equals E11(1, 0)")
