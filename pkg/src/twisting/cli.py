"""Command-line front end.

Usage::

    twisting tune --config run.ini
    twisting simulate --config run.ini --out results/
    twisting verify --config run.ini --seed 7
    twisting demo-pendulum --out demo/

Configuration is an INI file with the sections ``parameters``, ``gains``,
``sim``, ``pendulum``, ``campaign`` and ``output``. Every key can be
overridden on the command line by a flag of the same name (underscores
become dashes, e.g. ``t_end`` -> ``--t-end``). Unknown keys are rejected.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .dynamics import TABLE1_PENDULUM, DisturbanceProfile, PendulumParams, State
from .sim import Plant, SimConfig, SimulationError, level_set_monitor, settling_time, simulate
from .tuning import (
    PENDULUM_GAINS,
    PENDULUM_TUNING,
    Gains,
    GainError,
    TuningParameters,
    mu1_lower_bound,
    mu2_bound_terms,
    settling_estimate,
    synthesize_gains,
    validate_gains,
    validate_parameters,
)
from .verify import (
    PENDULUM_DISTURBANCE_AMPLITUDE,
    PENDULUM_DISTURBANCE_FREQUENCY,
    CampaignError,
    CampaignSpec,
    boundary_polyline,
    default_battery,
    run_campaign,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_NUMERIC = 4


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise ValueError(f"{text!r} is not an unsigned 64-bit integer")
    return value


# section -> key -> parser; key names are unique across sections
SCHEMA: Dict[str, Dict[str, Callable[[str], Any]]] = {
    "parameters": {"R": float, "beta": float, "rho": float, "delta": float, "N": float, "Ts": float},
    "gains": {"mu1": float, "mu2": float, "margin": float},
    "sim": {
        "dt": float,
        "t_end": float,
        "record_stride": int,
        "settle_eps": float,
        "max_samples": int,
        "x1_0": float,
        "x2_0": float,
        "profile": str,
        "plant": str,
    },
    "pendulum": {"m": float, "l": float, "J": float, "g": float, "fv": float, "r": float},
    "campaign": {
        "boundary_count": int,
        "interior_count": int,
        "seed": _u64,
        "profiles": str,
        "workers": int,
    },
    "output": {"out": str},
}
_KEY_SECTION = {key: section for section, keys in SCHEMA.items() for key in keys}


class ConfigError(Exception):
    pass


class RunConfig:
    """Flat, validated view of a config file merged with command-line overrides."""

    def __init__(self, values: Dict[str, Any]):
        self.values = values

    @classmethod
    def load(cls, path: Optional[str], overrides: Dict[str, Any]) -> "RunConfig":
        values: Dict[str, Any] = {}
        if path:
            parser = configparser.ConfigParser(interpolation=None)
            parser.optionxform = str  # keep R, N, Ts case
            try:
                with open(path) as fh:
                    parser.read_file(fh)
            except (OSError, configparser.Error) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            for section in parser.sections():
                if section not in SCHEMA:
                    raise ConfigError(f"unknown section [{section}]")
                for key, raw in parser.items(section):
                    if key not in SCHEMA[section]:
                        raise ConfigError(f"unknown key {key!r} in [{section}]")
                    try:
                        values[key] = SCHEMA[section][key](raw.strip())
                    except ValueError as exc:
                        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(values)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ConfigError(f"{key} required")
        return self.values[key]

    def parameters(self, default: Optional[TuningParameters] = None) -> TuningParameters:
        names = list(SCHEMA["parameters"])
        if default is not None:
            base = default.as_dict()
            p = TuningParameters(**{k: self.get(k, base[k]) for k in names})
        else:
            p = TuningParameters(**{k: self.require(k) for k in names})
        report = validate_parameters(p)
        if not report.ok:
            raise ConfigError("invalid parameters: " + report.describe())
        return p

    def gains(self, params: TuningParameters, default: Optional[Gains] = None) -> Gains:
        mu1, mu2 = self.get("mu1"), self.get("mu2")
        if mu1 is None and mu2 is None:
            if default is not None:
                return default
            try:
                return synthesize_gains(params, self.get("margin", 0.01))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if mu1 is None or mu2 is None:
            raise ConfigError("give both mu1 and mu2, or neither to synthesize them")
        try:
            return Gains(mu1, mu2)
        except GainError as exc:
            raise ConfigError(str(exc)) from exc

    def sim(self, params: TuningParameters) -> SimConfig:
        try:
            return SimConfig(
                dt=self.get("dt", 1e-5),
                t_end=self.get("t_end", 2.0 * params.Ts),
                record_stride=self.get("record_stride"),
                settle_eps=self.get("settle_eps", 1e-2),
                max_samples=self.get("max_samples", 20_000),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def pendulum(self) -> PendulumParams:
        base = {k: getattr(TABLE1_PENDULUM, k) for k in SCHEMA["pendulum"]}
        try:
            return PendulumParams(**{k: self.get(k, v) for k, v in base.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def profile(self, key: str, text: str) -> DisturbanceProfile:
        try:
            return DisturbanceProfile.parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad disturbance profile in {key}: {text!r} ({exc})") from exc

    def out_dir(self, default: str) -> Path:
        path = Path(self.get("out", default))
        path.mkdir(parents=True, exist_ok=True)
        return path


def _print_estimate(params: TuningParameters, gains: Gains) -> None:
    e = settling_estimate(params, gains)
    print("settling estimate:")
    print(f"  r1        = {e.r1:.6g}")
    print(f"  r2        = {e.r2:.6g}")
    print(f"  eta       = {e.eta:.6g}  (< 1/beta = {1.0 / params.beta:.6g})")
    print(f"  T2        = {e.t2:.6g} s")
    print(f"  T2 bound  = {e.t2_bound:.6g} s  (Ts = {params.Ts:g} s)")


def cmd_tune(cfg: RunConfig) -> int:
    params = cfg.parameters()
    report = validate_parameters(params)
    print("parameters:", ", ".join(f"{k}={v!r}" for k, v in params.as_dict().items()))
    print(f"  delta lower bound = {report.values['delta_min']:.6g}  -> ok")
    for note in report.advisories:
        print("  advisory:", note)

    given = cfg.get("mu1") is not None or cfg.get("mu2") is not None
    gains = cfg.gains(params)
    b1 = mu1_lower_bound(params)
    terms = mu2_bound_terms(params, gains.mu1)
    binding = max(terms, key=terms.get)
    print(f"mu1 lower bound     = {b1:.8g}")
    print(f"mu2 lower bound     = {terms[binding]:.8g}  (binding term {binding}, at mu1 = {gains.mu1:.8g})")
    print(f"gains ({'given' if given else 'synthesized, margin ' + repr(cfg.get('margin', 0.01))}): "
          f"mu1 = {gains.mu1!r}, mu2 = {gains.mu2!r}")

    check = validate_gains(params, gains)
    print(f"  mu1 margin = {check.values['mu1_margin']:.6g}, mu2 margin = {check.values['mu2_margin']:.6g}")
    if not check.ok:
        for name, message in check.violations.items():
            print(f"  VIOLATION {name}: {message}")
        return EXIT_VERIFY
    _print_estimate(params, gains)
    return EXIT_OK


def _validated_gains(cfg: RunConfig, params: TuningParameters) -> Gains:
    gains = cfg.gains(params)
    check = validate_gains(params, gains)
    if not check.ok:
        raise ConfigError("invalid gains: " + check.describe())
    return gains


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.parameters()
    gains = _validated_gains(cfg, params)
    sim_cfg = cfg.sim(params)
    x0 = State(cfg.require("x1_0"), cfg.require("x2_0"))
    profile = cfg.profile("profile", cfg.get("profile", "zero"))
    plant_name = cfg.get("plant", Plant.DOUBLE_INTEGRATOR.value)
    try:
        plant_tag = Plant(plant_name)
    except ValueError as exc:
        raise ConfigError(f"unknown plant {plant_name!r}") from exc

    plant: Any = plant_tag
    bound = profile.bound
    if plant_tag is Plant.PENDULUM:
        plant = cfg.pendulum()
        bound = plant.b * profile.bound
    if bound > params.N:
        raise ConfigError(f"disturbance bound {bound!r} exceeds N = {params.N!r}")

    traj = simulate(plant, gains, profile, x0, sim_cfg)
    out = cfg.out_dir(".")
    path = traj.to_csv(out / "trajectory.csv")
    t_settle = settling_time(traj, sim_cfg.settle_eps)
    level = level_set_monitor(traj, gains, params.R, N=params.N, eps=sim_cfg.settle_eps)
    print(f"wrote {path} ({len(traj)} samples)")
    print(f"settling time (eps = {sim_cfg.settle_eps:g}): "
          + ("did not settle" if t_settle is None else f"{t_settle:.6g} s"))
    if level.entered:
        print(f"max V after entering level set: {level.max_v_after_entry:.6g} (R = {params.R:g}), "
              f"excursions: {level.excursions}")
    else:
        print("trajectory never entered the level set")
    return EXIT_OK


def _campaign_profiles(cfg: RunConfig, params: TuningParameters) -> List[DisturbanceProfile]:
    text = cfg.get("profiles")
    if not text:
        return default_battery(params.N, cfg.pendulum())
    return [cfg.profile("profiles", item) for item in text.split(",") if item.strip()]


def cmd_verify(cfg: RunConfig) -> int:
    params = cfg.parameters()
    gains = _validated_gains(cfg, params)
    try:
        spec = CampaignSpec(
            params=params,
            gains=gains,
            boundary_count=cfg.get("boundary_count", 100),
            interior_count=cfg.get("interior_count", 0),
            profiles=_campaign_profiles(cfg, params),
            sim=cfg.sim(params),
            rng_seed=cfg.get("seed", 0),
            workers=cfg.get("workers", 1),
        )
    except CampaignError as exc:
        raise ConfigError(str(exc)) from exc

    report = run_campaign(spec)
    out = cfg.out_dir(".")
    csv_path = report.to_csv(out / "campaign.csv")
    summary = report.summary()
    (out / "summary.txt").write_text(summary + "\n")
    print(summary)
    print(f"wrote {csv_path}")
    for case in report.failures()[:10]:
        print(f"  FAIL case {case.case_id}: x0=({case.x0.x1:.6g}, {case.x0.x2:.6g}) "
              f"{case.profile.label} settle={case.settle_time} maxV={case.max_v_after_entry}")
    return EXIT_OK if report.passed else EXIT_VERIFY


def _write_columns(path: Path, header: List[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])
    return path


def cmd_demo_pendulum(cfg: RunConfig) -> int:
    params = cfg.parameters(default=PENDULUM_TUNING)
    gains = cfg.gains(params, default=PENDULUM_GAINS)
    check = validate_gains(params, gains)
    if not check.ok:
        raise ConfigError("invalid gains: " + check.describe())
    pend = cfg.pendulum()
    sim_cfg = cfg.sim(params)
    out = cfg.out_dir("demo-pendulum")

    d = DisturbanceProfile.sinusoid(PENDULUM_DISTURBANCE_AMPLITUDE, PENDULUM_DISTURBANCE_FREQUENCY)
    omega = d.scaled(pend.b)
    print(f"b = {pend.b:.6g}, disturbance bound b*A = {omega.amplitude:.6g} (N = {params.N:g})")
    if omega.amplitude > params.N:
        raise ConfigError(f"b*A = {omega.amplitude!r} exceeds N = {params.N!r}")

    initial = [State(0.9 * params.R / gains.mu2, 0.0), State(0.0, 0.8 * math.sqrt(2.0 * params.R))]
    ok = True
    phase_rows = []
    for i, x0 in enumerate(initial, start=1):
        traj = simulate(pend, gains, d, x0, sim_cfg)
        ref = simulate(Plant.DOUBLE_INTEGRATOR, gains, omega, x0, sim_cfg)
        traj.to_csv(out / f"pendulum_ic{i}.csv")
        ref.to_csv(out / f"reference_ic{i}.csv")
        err = float(np.max(np.abs(traj.as_array()[:, 1:3] - ref.as_array()[:, 1:3])))
        t_settle = settling_time(traj, sim_cfg.settle_eps)
        level = level_set_monitor(traj, gains, params.R)
        phase_rows.extend((f"ic{i}", a, b) for a, b in zip(traj.x1, traj.x2))
        settled = t_settle is not None and t_settle <= params.Ts
        ok &= settled and err <= 1e-9
        print(f"ic{i}: x0 = ({x0.x1:.6g}, {x0.x2:.6g})  V0 = {traj.V[0]:.6g}")
        print(f"  settling time  {'did not settle' if t_settle is None else f'{t_settle:.6g} s'} "
              f"(Ts = {params.Ts:g} s)")
        print(f"  max V after entry {level.max_v_after_entry:.6g}, excursions {level.excursions}")
        print(f"  max |pendulum - double integrator| = {err:.3g}")

    _write_columns(out / "phase_portrait.csv", ["run", "x1", "x2"], phase_rows)
    _write_columns(out / "gamma_boundary.csv", ["x1", "x2"], boundary_polyline(params, gains))
    print(f"wrote CSVs to {out}")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "tune": cmd_tune,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "demo-pendulum": cmd_demo_pendulum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twisting", description=__doc__.split("\n")[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, allow_abbrev=False)
        p.add_argument("--config", help="INI configuration file")
        for section, keys in SCHEMA.items():
            for key, kind in keys.items():
                p.add_argument(
                    "--" + key.replace("_", "-"),
                    dest=key,
                    type=kind,
                    default=None,
                    help=f"[{section}] {key}",
                )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in _KEY_SECTION}
    try:
        cfg = RunConfig.load(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CampaignError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
