"""Plants, control law, Lyapunov function and admissible disturbances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from .tuning import Gains

__all__ = [
    "State",
    "PendulumParams",
    "TABLE1_PENDULUM",
    "DisturbanceKind",
    "DisturbanceProfile",
    "sgn",
    "twisting_control",
    "lyapunov_v",
    "double_integrator_rhs",
    "compensating_torque",
    "pendulum_rhs",
    "evaluate_disturbance",
]

Derivative = Tuple[float, float]


def sgn(x: float) -> float:
    """Sign with ``sgn(0) == 0``."""
    return float((x > 0) - (x < 0))


@dataclass(frozen=True)
class State:
    """Phase-plane error state ``(x1, x2)``."""

    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"state must be finite, got ({self.x1!r}, {self.x2!r})")

    def __neg__(self) -> "State":
        return State(-self.x1, -self.x2)

    def __iter__(self):
        yield self.x1
        yield self.x2

    @property
    def norm(self) -> float:
        return math.hypot(self.x1, self.x2)


@dataclass(frozen=True)
class PendulumParams:
    """Physical pendulum parameters.

    ``m`` mass [kg], ``l`` pivot to centre of mass [m], ``J`` inertia about
    the centre of mass [kg m^2], ``g`` gravity [m/s^2], ``fv`` viscous
    friction [N s/rad] and ``r`` the position set-point [rad].
    """

    m: float
    l: float  # noqa: E741
    J: float
    g: float
    fv: float
    r: float = 0.0

    def __post_init__(self):
        for name in ("m", "l", "J", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if not self.fv >= 0:
            raise ValueError(f"fv must be >= 0, got {self.fv!r}")
        if not math.isfinite(self.r):
            raise ValueError("r must be finite")

    @property
    def b(self) -> float:
        """Input coefficient ``1/(m l^2 + J)``."""
        return 1.0 / (self.m * self.l**2 + self.J)

    @property
    def mgl(self) -> float:
        return self.m * self.g * self.l


TABLE1_PENDULUM = PendulumParams(m=0.0474, l=0.11, J=3.11e-3, g=9.81, fv=2.43e-4, r=0.0)


def twisting_control(s: State, g: Gains) -> float:
    return -g.mu2 * sgn(s.x1) - g.mu1 * sgn(s.x2)


def lyapunov_v(s: State, g: Gains) -> float:
    return g.mu2 * abs(s.x1) + 0.5 * (s.x2 * s.x2)


def double_integrator_rhs(s: State, u: float, omega: float) -> Derivative:
    return s.x2, u + omega


def compensating_torque(s: State, pp: PendulumParams, u: float) -> float:
    """Actuator torque that cancels friction and gravity and injects ``u``."""
    return u / pp.b + pp.fv * s.x2 + pp.mgl * math.sin(s.x1 + pp.r)


def pendulum_rhs(s: State, pp: PendulumParams, tau: float, d: float) -> Derivative:
    """Pendulum error dynamics driven by torque ``tau`` and torque disturbance ``d``."""
    b = pp.b
    return s.x2, b * (tau - pp.fv * s.x2 - pp.mgl * math.sin(s.x1 + pp.r)) + b * d


class DisturbanceKind(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    SINUSOID = "sinusoid"
    ADVERSARIAL = "adversarial-sign"


@dataclass(frozen=True)
class DisturbanceProfile:
    """One member of the family ``|w(t)| <= amplitude``.

    ``frequency`` (rad/s) is used by sinusoids only and ``sign`` by the
    constant and adversarial kinds. The adversarial kind evaluates to
    ``-sign * amplitude * sgn(x2)``; with ``sign=-1`` it pushes along the
    velocity and so works against the ``mu1`` braking term.
    """

    kind: DisturbanceKind
    amplitude: float = 0.0
    frequency: float = 0.0
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", DisturbanceKind(self.kind))
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ValueError(f"amplitude must be finite and >= 0, got {self.amplitude!r}")
        if not math.isfinite(self.frequency):
            raise ValueError("frequency must be finite")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")

    @classmethod
    def zero(cls) -> "DisturbanceProfile":
        return cls(DisturbanceKind.ZERO)

    @classmethod
    def constant(cls, amplitude: float, sign: int = 1) -> "DisturbanceProfile":
        return cls(DisturbanceKind.CONSTANT, amplitude, sign=sign)

    @classmethod
    def sinusoid(cls, amplitude: float, frequency: float) -> "DisturbanceProfile":
        return cls(DisturbanceKind.SINUSOID, amplitude, frequency=frequency)

    @classmethod
    def adversarial(cls, amplitude: float, sign: int = -1) -> "DisturbanceProfile":
        return cls(DisturbanceKind.ADVERSARIAL, amplitude, sign=sign)

    @property
    def bound(self) -> float:
        """Supremum of ``|w|`` over time and state."""
        return 0.0 if self.kind is DisturbanceKind.ZERO else self.amplitude

    def scaled(self, factor: float) -> "DisturbanceProfile":
        return DisturbanceProfile(self.kind, self.amplitude * factor, self.frequency, self.sign)

    @property
    def label(self) -> str:
        if self.kind is DisturbanceKind.ZERO:
            return "zero"
        if self.kind is DisturbanceKind.SINUSOID:
            return f"sinusoid:{self.amplitude!r}:{self.frequency!r}"
        return f"{self.kind.value}:{self.amplitude!r}:{self.sign:+d}"

    @classmethod
    def parse(cls, text: str) -> "DisturbanceProfile":
        """Inverse of :attr:`label`: ``kind[:amplitude[:frequency|sign]]``."""
        parts = [p.strip() for p in text.strip().split(":")]
        kind = DisturbanceKind(parts[0])
        if kind is DisturbanceKind.ZERO:
            if len(parts) > 1:
                raise ValueError(f"zero profile takes no arguments: {text!r}")
            return cls.zero()
        if len(parts) < 2 or len(parts) > 3:
            raise ValueError(f"expected {kind.value}:amplitude[:extra], got {text!r}")
        amplitude = float(parts[1])
        if kind is DisturbanceKind.SINUSOID:
            if len(parts) != 3:
                raise ValueError(f"sinusoid needs a frequency: {text!r}")
            return cls.sinusoid(amplitude, float(parts[2]))
        sign = int(parts[2]) if len(parts) == 3 else (1 if kind is DisturbanceKind.CONSTANT else -1)
        return cls(kind, amplitude, sign=sign)


def evaluate_disturbance(profile: DisturbanceProfile, t: float, s: State) -> float:
    kind = profile.kind
    if kind is DisturbanceKind.ZERO:
        return 0.0
    if kind is DisturbanceKind.CONSTANT:
        return profile.sign * profile.amplitude
    if kind is DisturbanceKind.SINUSOID:
        return profile.amplitude * math.sin(profile.frequency * t)
    return -profile.sign * profile.amplitude * sgn(s.x2)
