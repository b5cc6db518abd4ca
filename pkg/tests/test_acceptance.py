"""Acceptance gate: one test per criterion, each at its fixed tolerance.

A PASS/FAIL line per criterion is printed in the pytest terminal summary.
Run alone with ``pytest tests/test_acceptance.py``.
"""

import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_RESULTS

from twisting.dynamics import TABLE1_PENDULUM, DisturbanceProfile, State, lyapunov_v
from twisting.sim import Plant, SimConfig, level_set_monitor, settling_time, simulate
from twisting.tuning import (
    PENDULUM_GAINS,
    PENDULUM_TUNING,
    Gains,
    TuningParameters,
    mu1_lower_bound,
    mu2_lower_bound,
    settling_estimate,
    validate_gains,
)
from twisting.verify import CampaignSpec, run_campaign, sample_boundary

P, G = PENDULUM_TUNING, PENDULUM_GAINS
SINE_D = DisturbanceProfile.sinusoid(7e-4, 2.0)
DEMO_CFG = SimConfig(dt=1e-5, t_end=2.0)
INITIAL = {
    "x0=(0.9R/mu2, 0)": State(0.9 * P.R / G.mu2, 0.0),
    "x0=(0, 0.8 sqrt(2R))": State(0.0, 0.8 * math.sqrt(2 * P.R)),
}


def record(key, passed, detail):
    ACCEPTANCE_RESULTS[key] = (bool(passed), detail)
    assert passed, detail


@pytest.fixture(scope="module")
def demo_runs():
    runs = {}
    for name, x0 in INITIAL.items():
        start = time.perf_counter()
        traj = simulate(TABLE1_PENDULUM, G, SINE_D, x0, DEMO_CFG)
        runs[name] = (traj, time.perf_counter() - start)
    return runs


def test_criterion_1_gain_bounds():
    b1 = mu1_lower_bound(P)
    b2 = mu2_lower_bound(P, 6.63)
    ok_gains = validate_gains(P, G).ok
    passed = abs(b1 - 6.52784) <= 1e-4 and abs(b2 - 33.15) <= 1e-6 and ok_gains
    record("1", passed, f"mu1 bound {b1:.6f}, mu2 bound {b2:.8f}, (6.63, 33.24) valid={ok_gains}")


def test_criterion_2_estimate_chain():
    e = settling_estimate(P, G)
    passed = (
        abs(e.eta - 0.193442) <= 1e-4
        and e.eta < 0.2
        and abs(e.t2 - 0.97351) <= 1e-4
        and abs(e.t2_bound - 0.98411) <= 1e-4
        and e.t2 <= e.t2_bound <= 1.0
    )
    record("2", passed, f"eta {e.eta:.6f}, T2 {e.t2:.5f}, bound {e.t2_bound:.5f}")


def test_criterion_3_disturbance_bound():
    bA = TABLE1_PENDULUM.b * 7e-4
    passed = abs(bA - 0.190035) <= 1e-5 and round(bA, 2) == 0.19
    record("3", passed, f"b*A = {bA:.6f}")


def test_criterion_4_demo_settles(demo_runs):
    details, passed = [], True
    for name, (traj, elapsed) in demo_runs.items():
        t_s = settling_time(traj, 1e-2)
        passed &= t_s is not None and t_s <= 1.0 and elapsed <= 10.0
        details.append(f"{name}: settle {t_s} s ({elapsed:.2f} s wall)")
    record("4", passed, "; ".join(details))


def test_criterion_5_level_set_invariance(demo_runs):
    details, passed = [], True
    for name, (traj, _) in demo_runs.items():
        rep = level_set_monitor(traj, G, P.R)
        passed &= rep.entered and rep.max_v_after_entry <= P.R + 0.05
        details.append(f"{name}: max V after entry {rep.max_v_after_entry:.6f}")
    record("5", passed, "; ".join(details))


def test_criterion_6_campaign():
    start = time.perf_counter()
    report = run_campaign(CampaignSpec(P, G, boundary_count=100, sim=DEMO_CFG, rng_seed=0))
    elapsed = time.perf_counter() - start
    passed = (
        len(report.cases) == 500
        and report.passed
        and report.worst_settle_time <= P.Ts
        and elapsed <= 120.0
    )
    record(
        "6",
        passed,
        f"{report.pass_count}/{len(report.cases)} pass, worst settle {report.worst_settle_time:.5f} s, "
        f"{elapsed:.1f} s wall",
    )


def test_criterion_7_compensation_identity():
    omega = SINE_D.scaled(TABLE1_PENDULUM.b)
    worst = 0.0
    for x0 in INITIAL.values():
        pend = simulate(TABLE1_PENDULUM, G, SINE_D, x0, SimConfig(dt=1e-5, t_end=2.0, record_stride=1))
        ref = simulate(Plant.DOUBLE_INTEGRATOR, G, omega, x0, SimConfig(dt=1e-5, t_end=2.0, record_stride=1))
        worst = max(worst, float(np.abs(pend.as_array()[:, 1:3] - ref.as_array()[:, 1:3]).max()))
    record("7", worst <= 1e-9, f"max per-sample state difference {worst:.3g}")


def _random_design(rng):
    R = rng.uniform(0.1, 10.0)
    beta = rng.uniform(1.1, 20.0)
    dmin = math.sqrt(2 * R) * (beta + 1) / (beta - 1)
    p = TuningParameters(
        R=R,
        beta=beta,
        rho=rng.uniform(0.05, 0.95),
        delta=dmin * rng.uniform(1.001, 3.0),
        N=rng.uniform(0.0, 2.0),
        Ts=rng.uniform(0.1, 5.0),
    )
    mu1 = mu1_lower_bound(p) * rng.uniform(1.001, 1.5)
    mu2 = mu2_lower_bound(p, mu1) * rng.uniform(1.001, 1.5)
    return p, Gains(mu1, mu2)


def test_criterion_8_property_suite():
    rng = np.random.default_rng(20240601)
    bad = []
    for i in range(1000):
        p, g = _random_design(rng)
        e = settling_estimate(p, g)
        if not (e.eta < 1 / p.beta and e.t2 <= e.t2_bound <= p.Ts and e.r2 < min(p.R, e.r1)):
            bad.append((i, "estimate chain"))
        for s in sample_boundary(p, g, 20, seed=i):
            if abs(lyapunov_v(s, g) - p.R) > 1e-12 or not (e.r2 <= s.norm <= e.r1):
                bad.append((i, f"boundary sample {s}"))
    record("8", not bad, f"1000 random designs, {len(bad)} violations" + (f", first {bad[0]}" if bad else ""))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
