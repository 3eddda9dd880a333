"""Bose-Hubbard parameters and tunneling schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError

CONSTANT = "constant"
EXPONENTIAL = "exponential"
SINUSOIDAL = "sinusoidal"


@dataclass(frozen=True)
class Schedule:
    """Time dependence of the tunneling energy.

    constant:     J(t) = J0
    exponential:  J(t) = J0 exp(-H t)
    sinusoidal:   J(t) = J0 (1 - eps sin(nu t)),  |eps| < 1
    """

    kind: str = CONSTANT
    H: float = 0.0
    eps: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.kind not in (CONSTANT, EXPONENTIAL, SINUSOIDAL):
            raise ConfigError(f"unknown tunneling schedule {self.kind!r}")
        if self.kind == SINUSOIDAL and not abs(self.eps) < 1:
            raise ConfigError(f"sinusoidal schedule needs |eps| < 1, got {self.eps}")

    def factor(self, t: float) -> float:
        if self.kind == EXPONENTIAL:
            return math.exp(-self.H * t)
        if self.kind == SINUSOIDAL:
            return 1.0 - self.eps * math.sin(self.nu * t)
        return 1.0

    def integral(self, t0: float, t1: float) -> float:
        """Exact integral of ``factor`` over ``[t0, t1]``."""
        if self.kind == EXPONENTIAL and self.H != 0:
            return (math.exp(-self.H * t0) - math.exp(-self.H * t1)) / self.H
        if self.kind == SINUSOIDAL and self.nu != 0:
            return (t1 - t0) + self.eps * (math.cos(self.nu * t1) - math.cos(self.nu * t0)) / self.nu
        return t1 - t0


@dataclass(frozen=True)
class BHParams:
    """Tunneling ``J0``, on-site repulsion ``U``, chemical potential ``mu``, spacing ``a``.

    Units: hbar = 1, energies in one common unit, time in inverse energy.
    """

    J0: float
    U: float
    mu: float = 0.0
    a: float = 1.0
    schedule: Schedule = field(default_factory=Schedule)

    def __post_init__(self):
        for name in ("J0", "U", "a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be positive and finite, got {value}")
        if not math.isfinite(self.mu):
            raise ConfigError(f"mu must be finite, got {self.mu}")

    def J(self, t: float = 0.0) -> float:
        return self.J0 * self.schedule.factor(t)

    def m_eff(self, t: float = 0.0) -> float:
        return 1.0 / (2.0 * self.J(t) * self.a**2)

    def J_max(self, t0: float, t1: float) -> float:
        if self.schedule.kind == EXPONENTIAL:
            return self.J0 * max(self.schedule.factor(t0), self.schedule.factor(t1))
        if self.schedule.kind == SINUSOIDAL:
            return self.J0 * (1 + abs(self.schedule.eps))
        return self.J0

    def sound_speed(self, n, t: float = 0.0):
        """``c = a sqrt(2 J n U)``; works on scalars and arrays."""
        return self.a * (2.0 * self.J(t) * n * self.U) ** 0.5

    def healing_length(self, n, t: float = 0.0):
        """``xi = a sqrt(2 J / (n U))``."""
        return self.a * (2.0 * self.J(t) / (n * self.U)) ** 0.5

    def stationary_mu(self, n: float, dims: int, t: float = 0.0) -> float:
        """Chemical potential that freezes the phase of a homogeneous state."""
        return self.U * n - 2 * dims * self.J(t) - self.U / 2

    def with_mu(self, mu: float) -> "BHParams":
        return BHParams(self.J0, self.U, mu, self.a, self.schedule)
