"""Falsification campaigns for the prescribed-time guarantee.

Initial states are drawn on the boundary ``{V = R}`` (and optionally inside
``{V <= R}``), each is simulated against a fixed battery of admissible
disturbances, and every case must settle before ``Ts`` without leaving the
level set by more than the one-step discretisation overshoot. A finite
battery cannot prove the guarantee; a failing case is a counterexample.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import TABLE1_PENDULUM, DisturbanceProfile, PendulumParams, State, lyapunov_v
from .sim import (
    Plant,
    SimConfig,
    SimulationError,
    check_record_resolution,
    level_set_monitor,
    settling_time,
    simulate,
)
from .tuning import (
    Gains,
    SettlingEstimate,
    TuningParameters,
    settling_estimate,
    validate_gains,
)

__all__ = [
    "CampaignError",
    "CampaignSpec",
    "CaseResult",
    "CampaignReport",
    "default_battery",
    "invariance_tolerance",
    "sample_boundary",
    "sample_interior",
    "boundary_polyline",
    "run_campaign",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = (
    "case_id",
    "x1_0",
    "x2_0",
    "profile",
    "settled",
    "settle_time",
    "max_v_after_entry",
    "pass",
)

# sinusoidal torque disturbance of the pendulum example: d(t) = A sin(w t)
PENDULUM_DISTURBANCE_AMPLITUDE = 7e-4
PENDULUM_DISTURBANCE_FREQUENCY = 2.0


class CampaignError(ValueError):
    """The campaign specification is inconsistent, or a case failed to simulate."""


def default_battery(N: float, pendulum: PendulumParams = TABLE1_PENDULUM) -> List[DisturbanceProfile]:
    """Zero, +N and -N constants, the pendulum sinusoid capped at N, and the
    velocity-aligned adversarial sign disturbance at N."""
    sine_amp = min(pendulum.b * PENDULUM_DISTURBANCE_AMPLITUDE, N)
    return [
        DisturbanceProfile.zero(),
        DisturbanceProfile.constant(N, +1),
        DisturbanceProfile.constant(N, -1),
        DisturbanceProfile.sinusoid(sine_amp, PENDULUM_DISTURBANCE_FREQUENCY),
        DisturbanceProfile.adversarial(N, -1),
    ]


def invariance_tolerance(params: TuningParameters, gains: Gains, dt: float) -> float:
    """Allowed transient overshoot of ``V`` above ``R`` caused by discretisation."""
    return dt * (gains.mu1 + gains.mu2 + params.N) * math.sqrt(2.0 * params.R) * 2.0


def _check_gains(params: TuningParameters, gains: Gains) -> None:
    report = validate_gains(params, gains)
    if not report.ok:
        raise CampaignError(f"invalid gains for these parameters: {report.describe()}")


def sample_boundary(params: TuningParameters, gains: Gains, count: int, seed=0) -> List[State]:
    """``count`` states with ``V = R``.

    The four axis extremes come first; the rest have ``x2`` uniform on
    ``(-sqrt(2R), sqrt(2R))`` and ``x1`` on the matching branch, with the
    sign of ``x1`` alternating.
    """
    if count < 4:
        raise ValueError(f"boundary sampling needs count >= 4, got {count}")
    _check_gains(params, gains)
    R, mu2 = params.R, gains.mu2
    x2_max = math.sqrt(2.0 * R)
    states = [
        State(R / mu2, 0.0),
        State(-R / mu2, 0.0),
        State(0.0, x2_max),
        State(0.0, -x2_max),
    ]
    rng = np.random.default_rng(seed)
    for i, x2 in enumerate(rng.uniform(-x2_max, x2_max, size=count - 4)):
        x1 = (R - 0.5 * x2 * x2) / mu2
        states.append(State(x1 if i % 2 == 0 else -x1, float(x2)))
    return states


def sample_interior(params: TuningParameters, gains: Gains, count: int, seed=0) -> List[State]:
    """Rejection-sample ``count`` states uniformly from ``{V <= R}``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    _check_gains(params, gains)
    rng = np.random.default_rng(seed)
    half_w, half_h = params.R / gains.mu2, math.sqrt(2.0 * params.R)
    states: List[State] = []
    while len(states) < count:
        # the lens fills half its bounding box
        batch = rng.uniform((-half_w, -half_h), (half_w, half_h), size=(2 * (count - len(states)) + 8, 2))
        for x1, x2 in batch:
            s = State(float(x1), float(x2))
            if lyapunov_v(s, gains) <= params.R:
                states.append(s)
                if len(states) == count:
                    break
    return states


def boundary_polyline(params: TuningParameters, gains: Gains, points_per_branch: int = 200) -> np.ndarray:
    """Closed ``(x1, x2)`` polyline tracing ``{V = R}``, first point repeated at the end."""
    x2_max = math.sqrt(2.0 * params.R)
    x2 = np.linspace(-x2_max, x2_max, points_per_branch)
    x1 = (params.R - 0.5 * x2 * x2) / gains.mu2
    right = np.column_stack([x1, x2])
    left = np.column_stack([-x1[::-1], x2[::-1]])
    ring = np.vstack([right, left[1:-1]])
    return np.vstack([ring, ring[:1]])


@dataclass(frozen=True)
class CampaignSpec:
    params: TuningParameters
    gains: Gains
    boundary_count: int = 100
    interior_count: int = 0
    profiles: Optional[Sequence[DisturbanceProfile]] = None
    sim: Optional[SimConfig] = None
    rng_seed: int = 0
    extra_states: Tuple[State, ...] = ()
    workers: int = 1

    def __post_init__(self):
        if self.profiles is None:
            object.__setattr__(self, "profiles", tuple(default_battery(self.params.N)))
        else:
            object.__setattr__(self, "profiles", tuple(self.profiles))
        if self.sim is None:
            object.__setattr__(self, "sim", SimConfig.for_horizon(self.params.Ts))
        object.__setattr__(self, "extra_states", tuple(self.extra_states))

        if self.boundary_count < 4:
            raise CampaignError(f"boundary_count must be >= 4, got {self.boundary_count}")
        if self.interior_count < 0:
            raise CampaignError("interior_count must be >= 0")
        if not self.profiles:
            raise CampaignError("at least one disturbance profile is required")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise CampaignError("rng_seed must fit in an unsigned 64-bit integer")
        _check_gains(self.params, self.gains)
        for p in self.profiles:
            if p.bound > self.params.N:
                raise CampaignError(
                    f"profile {p.label} has bound {p.bound!r} above N = {self.params.N!r}"
                )
        try:
            check_record_resolution(self.sim, self.gains, self.params.N, self.sim.settle_eps)
        except ValueError as exc:
            raise CampaignError(str(exc)) from exc

    def initial_states(self) -> List[Tuple[str, State]]:
        seq = np.random.SeedSequence(int(self.rng_seed))
        b_seed, i_seed = seq.spawn(2)
        out = [("boundary", s) for s in sample_boundary(self.params, self.gains, self.boundary_count, b_seed)]
        out += [("interior", s) for s in sample_interior(self.params, self.gains, self.interior_count, i_seed)]
        out += [("extra", s) for s in self.extra_states]
        return out


@dataclass(frozen=True)
class CaseResult:
    case_id: int
    origin: str
    x0: State
    profile: DisturbanceProfile
    settle_time: Optional[float]
    max_v_after_entry: Optional[float]
    excursions: int
    passed: bool

    @property
    def settled(self) -> bool:
        return self.settle_time is not None


@dataclass
class CampaignReport:
    spec: CampaignSpec
    estimate: SettlingEstimate
    tolerance: float
    cases: List[CaseResult] = field(default_factory=list)

    @property
    def pass_count(self) -> int:
        return sum(c.passed for c in self.cases)

    @property
    def passed(self) -> bool:
        return bool(self.cases) and self.pass_count == len(self.cases)

    @property
    def worst_settle_time(self) -> float:
        """Largest settling time over all cases; ``inf`` if any case never settled."""
        return max((math.inf if c.settle_time is None else c.settle_time) for c in self.cases)

    @property
    def worst_v_excursion(self) -> float:
        """Largest ``max V after entry - R`` over all cases (negative if V stayed below R)."""
        R = self.spec.params.R
        return max((math.inf if c.max_v_after_entry is None else c.max_v_after_entry - R) for c in self.cases)

    def failures(self) -> List[CaseResult]:
        return [c for c in self.cases if not c.passed]

    def rows(self) -> List[list]:
        out = []
        for c in self.cases:
            out.append(
                [
                    c.case_id,
                    repr(c.x0.x1),
                    repr(c.x0.x2),
                    c.profile.label,
                    str(c.settled).lower(),
                    "nan" if c.settle_time is None else repr(c.settle_time),
                    "nan" if c.max_v_after_entry is None else repr(c.max_v_after_entry),
                    str(c.passed).lower(),
                ]
            )
        return out

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(REPORT_COLUMNS)
            writer.writerows(self.rows())
        return path

    def summary(self) -> str:
        p, e = self.spec.params, self.estimate
        lines = [
            f"cases            {len(self.cases)} ({self.pass_count} passed)",
            f"aggregate        {'PASS' if self.passed else 'FAIL'}",
            f"worst settle     {self.worst_settle_time:.6g} s (Ts = {p.Ts:g} s, eps = {self.spec.sim.settle_eps:g})",
            f"worst V - R      {self.worst_v_excursion:.6g} (tolerance {self.tolerance:.3g})",
            f"estimate         T2 = {e.t2:.6g} s <= bound {e.t2_bound:.6g} s",
            f"gains            mu1 = {self.spec.gains.mu1!r}, mu2 = {self.spec.gains.mu2!r}",
            f"dt               {self.spec.sim.dt:g} s, horizon {self.spec.sim.t_end:g} s",
        ]
        return "\n".join(lines)


def _run_case(spec: CampaignSpec, tol: float, case_id: int, origin: str, x0: State, profile) -> CaseResult:
    p = spec.params
    try:
        traj = simulate(Plant.DOUBLE_INTEGRATOR, spec.gains, profile, x0, spec.sim)
    except SimulationError as exc:
        raise CampaignError(
            f"case {case_id} (x0=({x0.x1!r}, {x0.x2!r}), {profile.label}) failed at step {exc.step}"
        ) from exc
    t_settle = settling_time(traj, spec.sim.settle_eps)
    level = level_set_monitor(traj, spec.gains, p.R)
    ok = (
        t_settle is not None
        and t_settle <= p.Ts
        and level.entered
        and level.max_v_after_entry <= p.R + tol
    )
    return CaseResult(
        case_id=case_id,
        origin=origin,
        x0=x0,
        profile=profile,
        settle_time=t_settle,
        max_v_after_entry=level.max_v_after_entry,
        excursions=level.excursions,
        passed=ok,
    )


def run_campaign(spec: CampaignSpec) -> CampaignReport:
    """Simulate every (initial state, profile) pair and collect the verdicts.

    Cases are independent; with ``spec.workers > 1`` they run on a thread
    pool (the integrator releases the GIL). Results are ordered by case id,
    so the report does not depend on scheduling.
    """
    tol = invariance_tolerance(spec.params, spec.gains, spec.sim.dt)
    report = CampaignReport(spec=spec, estimate=settling_estimate(spec.params, spec.gains), tolerance=tol)
    jobs = [
        (origin, x0, profile)
        for origin, x0 in spec.initial_states()
        for profile in spec.profiles
    ]

    def work(i):
        origin, x0, profile = jobs[i]
        return _run_case(spec, tol, i, origin, x0, profile)

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            report.cases = list(pool.map(work, range(len(jobs))))
    else:
        report.cases = [work(i) for i in range(len(jobs))]
    return report
