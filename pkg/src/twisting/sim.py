"""Fixed-step simulation of the closed loop and trajectory diagnostics.

The right-hand side switches on ``sgn(x1)`` and ``sgn(x2)``, so the loop is
integrated with explicit forward Euler at a fixed step: the control and the
disturbance are evaluated at the start of every step from the current
state and time. The inner loop is compiled with numba.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numba import njit

from .dynamics import DisturbanceKind, DisturbanceProfile, PendulumParams, State
from .tuning import Gains

__all__ = [
    "Plant",
    "SimConfig",
    "Trajectory",
    "SimulationError",
    "ResolutionError",
    "LevelSetReport",
    "simulate",
    "settling_time",
    "level_set_monitor",
    "check_record_resolution",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("t", "x1", "x2", "u", "omega", "V")

_KIND_CODES = {
    DisturbanceKind.ZERO: 0,
    DisturbanceKind.CONSTANT: 1,
    DisturbanceKind.SINUSOID: 2,
    DisturbanceKind.ADVERSARIAL: 3,
}


class Plant(str, Enum):
    DOUBLE_INTEGRATOR = "double-integrator"
    PENDULUM = "pendulum"


class SimulationError(RuntimeError):
    """The state became non-finite; ``step`` is the offending step index."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class ResolutionError(ValueError):
    """Recorded samples are too sparse to resolve the settling band."""


@dataclass(frozen=True)
class SimConfig:
    """Integration settings.

    ``record_stride=None`` picks the smallest stride keeping at most
    ``max_samples`` recorded samples; pass ``1`` to keep every step.
    """

    dt: float = 1e-5
    t_end: float = 2.0
    record_stride: Optional[int] = None
    settle_eps: float = 1e-2
    max_samples: int = 20_000

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt!r}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be finite and > 0, got {self.t_end!r}")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if not (math.isfinite(self.settle_eps) and self.settle_eps > 0):
            raise ValueError(f"settle_eps must be finite and > 0, got {self.settle_eps!r}")
        if self.record_stride is not None and int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")
        if self.max_samples < 2:
            raise ValueError("max_samples must be >= 2")
        if self.t_end / self.dt > np.iinfo(np.int64).max // 2:
            raise ValueError("t_end/dt does not fit the step counter")

    @classmethod
    def for_horizon(cls, Ts: float, **kwargs) -> "SimConfig":
        return cls(t_end=2.0 * Ts, **kwargs)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def stride(self) -> int:
        if self.record_stride is not None:
            return int(self.record_stride)
        return max(1, math.ceil(self.n_steps / (self.max_samples - 1)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded closed-loop samples, one row per recorded step.

    Columns are read-only numpy arrays. ``omega`` is the acceleration-level
    disturbance actually entering ``x2`` (``b*d`` for the pendulum).
    """

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    V: np.ndarray
    dt: float
    t_end: float
    plant: Plant
    gains: Gains
    stride: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in CSV_COLUMNS:
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if len({len(getattr(self, c)) for c in CSV_COLUMNS}) != 1:
            raise ValueError("trajectory columns differ in length")
        if len(self.t) == 0:
            raise ValueError("empty trajectory")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def norm(self) -> np.ndarray:
        return np.hypot(self.x1, self.x2)

    @property
    def final_state(self) -> State:
        return State(float(self.x1[-1]), float(self.x2[-1]))

    def as_array(self) -> np.ndarray:
        return np.column_stack([getattr(self, c) for c in CSV_COLUMNS])

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.as_array().tolist():
                writer.writerow([repr(v) for v in row])
        return path

    @classmethod
    def from_csv(
        cls,
        path: Union[str, Path],
        *,
        gains: Gains,
        dt: float,
        t_end: float,
        plant: Union[Plant, str] = Plant.DOUBLE_INTEGRATOR,
        stride: int = 1,
    ) -> "Trajectory":
        with Path(path).open(newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader))
            if header != CSV_COLUMNS:
                raise ValueError(f"unexpected trajectory header {header!r}")
            data = np.array([[float(v) for v in row] for row in reader], dtype=np.float64)
        data = data.reshape(-1, len(CSV_COLUMNS))
        return cls(*data.T, dt=dt, t_end=t_end, plant=Plant(plant), gains=gains, stride=stride)


@njit(cache=True, nogil=True)
def _sgn(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


@njit(cache=True, nogil=True)
def _euler(pendulum, b, fv, mgl, r, mu1, mu2, kind, amp, freq, sign, x1, x2, dt, n_steps, stride, out):
    j = 0
    for k in range(n_steps + 1):
        t = k * dt
        u = -mu2 * _sgn(x1) - mu1 * _sgn(x2)
        if kind == 0:
            w = 0.0
        elif kind == 1:
            w = sign * amp
        elif kind == 2:
            w = amp * math.sin(freq * t)
        else:
            w = -sign * amp * _sgn(x2)
        if pendulum:
            omega = b * w
        else:
            omega = w
        if k % stride == 0 or k == n_steps:
            out[j, 0] = t
            out[j, 1] = x1
            out[j, 2] = x2
            out[j, 3] = u
            out[j, 4] = omega
            out[j, 5] = mu2 * abs(x1) + 0.5 * (x2 * x2)
            j += 1
        if k == n_steps:
            break
        if pendulum:
            grav = mgl * math.sin(x1 + r)
            tau = u / b + fv * x2 + grav
            dx2 = b * (tau - fv * x2 - grav) + b * w
        else:
            dx2 = u + w
        x1n = x1 + dt * x2
        x2 = x2 + dt * dx2
        x1 = x1n
        if not (math.isfinite(x1) and math.isfinite(x2)):
            return k + 1, j
    return -1, j


def simulate(
    plant: Union[Plant, str, PendulumParams],
    gains: Gains,
    profile: DisturbanceProfile,
    x0: State,
    cfg: SimConfig = SimConfig(),
) -> Trajectory:
    """Integrate the twisting closed loop from ``x0``.

    ``plant`` is ``"double-integrator"`` or a :class:`PendulumParams`
    instance; the pendulum is driven by the friction/gravity compensating
    torque and ``profile`` is then read as the torque disturbance ``d``.
    Identical inputs give bit-identical trajectories.
    """
    if isinstance(plant, PendulumParams):
        pp, tag = plant, Plant.PENDULUM
    else:
        tag = Plant(plant)
        if tag is Plant.PENDULUM:
            raise TypeError("pass PendulumParams to simulate the pendulum")
        pp = None

    n_steps, stride = cfg.n_steps, cfg.stride
    n_rec = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    out = np.empty((n_rec, len(CSV_COLUMNS)), dtype=np.float64)
    failed, used = _euler(
        pp is not None,
        pp.b if pp else 1.0,
        pp.fv if pp else 0.0,
        pp.mgl if pp else 0.0,
        pp.r if pp else 0.0,
        float(gains.mu1),
        float(gains.mu2),
        _KIND_CODES[profile.kind],
        float(profile.amplitude),
        float(profile.frequency),
        float(profile.sign),
        float(x0.x1),
        float(x0.x2),
        float(cfg.dt),
        n_steps,
        stride,
        out,
    )
    if failed >= 0:
        raise SimulationError(failed)
    out = out[:used]
    return Trajectory(
        *out.T,
        dt=cfg.dt,
        t_end=cfg.t_end,
        plant=tag,
        gains=gains,
        stride=stride,
        meta={"x0": x0, "profile": profile},
    )


def settling_time(traj: Trajectory, eps: float) -> Optional[float]:
    """Earliest recorded time after which ``||x|| <= eps`` on every later sample.

    Returns ``None`` when the final sample is still outside the band.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    outside = np.flatnonzero(traj.norm > eps)
    if outside.size == 0:
        return float(traj.t[0])
    last = outside[-1]
    if last == len(traj) - 1:
        return None
    return float(traj.t[last + 1])


def check_record_resolution(traj_or_cfg: Union[Trajectory, SimConfig], gains: Gains, N: float, eps: float) -> None:
    """Raise if the state could cross the ``eps`` band between two recorded samples."""
    gap = traj_or_cfg.stride * traj_or_cfg.dt
    limit = eps / (gains.mu1 + gains.mu2 + N)
    if gap > limit:
        raise ResolutionError(
            f"recorded sample spacing {gap:.3g} s exceeds eps/(mu1+mu2+N) = {limit:.3g} s; "
            "lower record_stride"
        )


@dataclass(frozen=True)
class LevelSetReport:
    """Behaviour of ``V`` relative to the level ``R``.

    ``entered`` is False when no sample has ``V <= R``; the other fields are
    then ``None``/0.
    """

    entered: bool
    entry_time: Optional[float]
    max_v_after_entry: Optional[float]
    excursions: int


def level_set_monitor(
    traj: Trajectory, gains: Gains, R: float, *, N: Optional[float] = None, eps: Optional[float] = None
) -> LevelSetReport:
    """Track ``V`` from the first sample inside ``{V <= R}`` onwards.

    ``excursions`` counts later samples with ``V > R``. When ``N`` and ``eps``
    are given the sampling resolution is checked first.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if N is not None and eps is not None:
        check_record_resolution(traj, gains, N, eps)
    v = gains.mu2 * np.abs(traj.x1) + 0.5 * (traj.x2 * traj.x2)
    inside = np.flatnonzero(v <= R)
    if inside.size == 0:
        return LevelSetReport(False, None, None, 0)
    first = inside[0]
    after = v[first:]
    return LevelSetReport(
        entered=True,
        entry_time=float(traj.t[first]),
        max_v_after_entry=float(after.max()),
        excursions=int(np.count_nonzero(after > R)),
    )
