"""Gain tuning for the twisting controller.

Given the design inputs ``(R, beta, rho, delta, N, Ts)`` the gains ``mu1``
and ``mu2`` are chosen strictly above the lower bounds

    mu1 > 2*delta / (Ts*sqrt(1 - beta**-2)) + N
    mu2 > max{sqrt(R/2), rho*sqrt(R/(2(1-rho))), rho, beta*mu1, mu1 + N}

which guarantees that every closed-loop trajectory of the perturbed double
integrator started on ``{mu2|x1| + x2**2/2 = R}`` reaches the origin before
``Ts`` for any disturbance with ``|w(t)| <= N``.

All comparisons are strict and exact in floating point: a value equal to its
bound is a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Dict, List

__all__ = [
    "TuningParameters",
    "Gains",
    "SettlingEstimate",
    "ValidationReport",
    "ParameterError",
    "GainError",
    "delta_lower_bound",
    "validate_parameters",
    "mu1_lower_bound",
    "mu2_bound_terms",
    "mu2_lower_bound",
    "synthesize_gains",
    "validate_gains",
    "settling_estimate",
    "PENDULUM_TUNING",
    "PENDULUM_GAINS",
]

# delta above this multiple of its lower bound only triggers an advisory
DELTA_ADVISORY_FACTOR = 10.0


class ParameterError(ValueError):
    """Raised when tuning parameters violate their admissibility constraints."""


class GainError(ValueError):
    """Raised when a gain pair does not satisfy its strict lower bounds."""


@dataclass(frozen=True)
class TuningParameters:
    """Design inputs of the tuning rule.

    Parameters
    ----------
    R : float
        Size of the initial level set, ``R > 0``.
    beta : float
        Shape ratio, ``beta > 1``.
    rho : float
        Inner-ball fraction, ``0 < rho < 1``.
    delta : float
        Radius of the comparison ball,
        ``delta > sqrt(2R) (beta + 1) / (beta - 1)``.
    N : float
        Disturbance magnitude bound, ``N >= 0``.
    Ts : float
        Prescribed settling time in seconds, ``Ts > 0``.

    Construction does not validate; use :func:`validate_parameters`.
    """

    R: float
    beta: float
    rho: float
    delta: float
    N: float
    Ts: float

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Gains:
    """Twisting gain pair ``(mu1, mu2)``.

    Only finiteness is enforced here. Whether the pair is admissible depends
    on the tuning parameters and is checked by :func:`validate_gains`.
    """

    mu1: float
    mu2: float

    def __post_init__(self):
        if not (math.isfinite(self.mu1) and math.isfinite(self.mu2)):
            raise GainError(f"gains must be finite, got mu1={self.mu1!r}, mu2={self.mu2!r}")

    def scaled(self, factor: float) -> "Gains":
        return Gains(self.mu1 * factor, self.mu2 * factor)


@dataclass(frozen=True)
class SettlingEstimate:
    """Quantities derived from an admissible ``(params, gains)`` pair.

    ``r1``/``r2`` are the radii of the balls bracketing the level set,
    ``eta = (mu1 - N)/mu2``, ``t2`` the convergence-time estimate from the
    comparison point and ``t2_bound`` its beta-only upper bound.
    """

    r1: float
    r2: float
    eta: float
    t2: float
    t2_bound: float


@dataclass
class ValidationReport:
    """Outcome of a constraint check.

    ``violations`` maps a constraint name to a human-readable message,
    ``advisories`` holds non-fatal warnings and ``values`` the numbers the
    check computed (bounds, margins).
    """

    violations: Dict[str, str] = field(default_factory=dict)
    advisories: List[str] = field(default_factory=list)
    values: Dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> str:
        return "; ".join(f"{k}: {v}" for k, v in self.violations.items())


def delta_lower_bound(R: float, beta: float) -> float:
    """Smallest admissible (excluded) comparison radius ``sqrt(2R)(beta+1)/(beta-1)``."""
    return math.sqrt(2.0 * R) * (beta + 1.0) / (beta - 1.0)


def validate_parameters(p: TuningParameters) -> ValidationReport:
    report = ValidationReport()
    bad = [name for name, v in p.as_dict().items() if not _is_finite_number(v)]
    if bad:
        report.violations["non-finite"] = "non-finite value for " + ", ".join(bad)
        return report

    if not p.R > 0:
        report.violations["R"] = f"R must be > 0 (got {p.R})"
    if not p.beta > 1:
        report.violations["beta"] = f"beta must be > 1 (got {p.beta})"
    if not 0 < p.rho < 1:
        report.violations["rho"] = f"rho must lie in (0, 1) (got {p.rho})"
    if not p.N >= 0:
        report.violations["N"] = f"N must be >= 0 (got {p.N})"
    if not p.Ts > 0:
        report.violations["Ts"] = f"Ts must be > 0 (got {p.Ts})"

    if p.R > 0 and p.beta > 1:
        dmin = delta_lower_bound(p.R, p.beta)
        report.values["delta_min"] = dmin
        if not p.delta > dmin:
            report.violations["delta"] = (
                f"delta must be strictly greater than sqrt(2R)(beta+1)/(beta-1) = {dmin!r} "
                f"(got {p.delta})"
            )
        elif p.delta > DELTA_ADVISORY_FACTOR * dmin:
            report.advisories.append(
                f"delta = {p.delta} exceeds {DELTA_ADVISORY_FACTOR:g}x its lower bound "
                f"{dmin:.6g}; mu1 will be inflated accordingly"
            )
    return report


def _is_finite_number(v) -> bool:
    try:
        return math.isfinite(v)
    except TypeError:
        return False


def _require_valid(p: TuningParameters) -> None:
    report = validate_parameters(p)
    if not report.ok:
        raise ParameterError(report.describe())


def mu1_lower_bound(p: TuningParameters) -> float:
    """Strict lower bound on ``mu1`` that makes the settling estimate fit in ``Ts``."""
    _require_valid(p)
    return 2.0 * p.delta / (p.Ts * math.sqrt(1.0 - p.beta**-2)) + p.N


def mu2_bound_terms(p: TuningParameters, mu1: float) -> Dict[str, float]:
    """The five competing lower bounds on ``mu2``, keyed by a short label."""
    _require_valid(p)
    return {
        "sqrt(R/2)": math.sqrt(p.R / 2.0),
        "rho*sqrt(R/(2(1-rho)))": p.rho * math.sqrt(p.R / (2.0 * (1.0 - p.rho))),
        "rho": p.rho,
        "beta*mu1": p.beta * mu1,
        "mu1+N": mu1 + p.N,
    }


def mu2_lower_bound(p: TuningParameters, mu1: float) -> float:
    return max(mu2_bound_terms(p, mu1).values())


def synthesize_gains(p: TuningParameters, margin: float = 0.01) -> Gains:
    """Pick gains a relative ``margin`` above both bounds.

    ``mu1`` is fixed first because the ``mu2`` bound depends on it.
    """
    if not (_is_finite_number(margin) and margin > 0):
        raise ValueError(f"margin must be a finite number > 0, got {margin!r}")
    mu1 = (1.0 + margin) * mu1_lower_bound(p)
    mu2 = (1.0 + margin) * mu2_lower_bound(p, mu1)
    gains = Gains(mu1, mu2)
    report = validate_gains(p, gains)
    if not report.ok:  # only reachable through rounding at absurdly small margins
        raise GainError(report.describe())
    return gains


def validate_gains(p: TuningParameters, g: Gains) -> ValidationReport:
    """Check both strict gain inequalities and report each margin (gain - bound)."""
    report = validate_parameters(p)
    if not report.ok:
        return report

    b1 = mu1_lower_bound(p)
    b2 = mu2_lower_bound(p, g.mu1)
    report.values.update(
        mu1_bound=b1, mu1_margin=g.mu1 - b1, mu2_bound=b2, mu2_margin=g.mu2 - b2
    )
    if not g.mu1 - b1 > 0:
        report.violations["mu1"] = f"mu1 = {g.mu1!r} is not strictly above its bound {b1!r}"
    if not g.mu2 - b2 > 0:
        report.violations["mu2"] = f"mu2 = {g.mu2!r} is not strictly above its bound {b2!r}"
    return report


def settling_estimate(p: TuningParameters, g: Gains) -> SettlingEstimate:
    report = validate_gains(p, g)
    if not report.ok:
        raise GainError(report.describe())

    reach = g.mu1 - p.N
    eta = reach / g.mu2
    root = math.sqrt(1.0 - eta * eta)
    return SettlingEstimate(
        r1=math.sqrt(2.0 * p.R),
        r2=p.rho * p.R / g.mu2,
        eta=eta,
        t2=p.delta * (root + 1.0) / (reach * root),
        t2_bound=2.0 * p.delta / (reach * math.sqrt(1.0 - p.beta**-2)),
    )


# pendulum regulation example: R=2, Ts=1 s, N=0.2 and the gains chosen for it
PENDULUM_TUNING = TuningParameters(R=2.0, beta=5.0, rho=0.5, delta=3.1, N=0.2, Ts=1.0)
PENDULUM_GAINS = Gains(mu1=6.63, mu2=33.24)
