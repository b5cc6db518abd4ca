import csv

import numpy as np
import pytest

from twisting import cli
from twisting.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_VERIFY, main
from twisting.dynamics import State
from twisting.sim import Plant, SimConfig, SimulationError, Trajectory, simulate
from twisting.verify import default_battery

PAPER = ["--R", "2", "--beta", "5", "--rho", "0.5", "--delta", "3.1", "--N", "0.2", "--Ts", "1"]
PAPER_GAINS = ["--mu1", "6.63", "--mu2", "33.24"]

CONFIG = """\
[parameters]
R = 2
beta = 5
rho = 0.5
delta = 3.1
N = 0.2
Ts = 1

[gains]
mu1 = 6.63
mu2 = 33.24

[sim]
x1_0 = 0
x2_0 = 1.6
profile = sinusoid:0.19:2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CONFIG)
    return path


def test_tune_paper(capsys):
    assert main(["tune", *PAPER, *PAPER_GAINS]) == EXIT_OK
    out = capsys.readouterr().out
    assert "T2 bound  = 0.984113 s" in out
    assert "beta*mu1" in out


def test_tune_short_deadline_fails(capsys):
    args = ["tune", *PAPER, *PAPER_GAINS]
    args[args.index("--Ts") + 1] = "0.9"
    assert main(args) == EXIT_VERIFY
    out = capsys.readouterr().out
    assert "VIOLATION mu1" in out and "7.23094" in out


def test_tune_missing_R(capsys):
    assert main(["tune", "--beta", "5", "--rho", "0.5", "--delta", "3.1", "--N", "0.2", "--Ts", "1"]) == EXIT_CONFIG
    assert "R required" in capsys.readouterr().err


def test_tune_invalid_parameter(capsys):
    args = ["tune", *PAPER]
    args[args.index("--delta") + 1] = "3.0"
    assert main(args) == EXIT_CONFIG
    assert "delta" in capsys.readouterr().err


def test_tune_synthesizes(capsys):
    assert main(["tune", *PAPER, "--margin", "0.01"]) == EXIT_OK
    assert "synthesized" in capsys.readouterr().out


def test_tune_from_config(config_file, capsys):
    assert main(["tune", "--config", str(config_file)]) == EXIT_OK
    # flags override the file
    assert main(["tune", "--config", str(config_file), "--Ts", "0.9"]) == EXIT_VERIFY


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG + "\n[campaign]\nbogus = 1\n")
    assert main(["tune", "--config", str(path)]) == EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err


def test_unknown_section_rejected(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG + "\n[extras]\nx = 1\n")
    assert main(["tune", "--config", str(path)]) == EXIT_CONFIG


def test_simulate_round_trip(config_file, tmp_path, capsys):
    out_dir = tmp_path / "sim"
    assert main(["simulate", "--config", str(config_file), "--out", str(out_dir)]) == EXIT_OK
    out = capsys.readouterr().out
    t_settle = float(out.split("settling time (eps = 0.01): ")[1].split(" s")[0])
    assert t_settle <= 1.0

    from twisting.dynamics import DisturbanceProfile
    from twisting.tuning import PENDULUM_GAINS

    mem = simulate(Plant.DOUBLE_INTEGRATOR, PENDULUM_GAINS, DisturbanceProfile.sinusoid(0.19, 2.0), State(0, 1.6))
    back = Trajectory.from_csv(out_dir / "trajectory.csv", gains=PENDULUM_GAINS, dt=mem.dt, t_end=mem.t_end)
    assert back.as_array().tobytes() == mem.as_array().tobytes()


def test_simulate_pendulum(config_file, tmp_path, capsys):
    args = ["simulate", "--config", str(config_file), "--out", str(tmp_path), "--plant", "pendulum"]
    assert main([*args, "--profile", "sinusoid:7e-4:2"]) == EXIT_OK
    # torque amplitude 1e-3 lifts to b*1e-3 = 0.27 > N
    assert main([*args, "--profile", "sinusoid:1e-3:2"]) == EXIT_CONFIG


def test_simulate_rejects_zero_gains(config_file, tmp_path, capsys):
    code = main(["simulate", "--config", str(config_file), "--out", str(tmp_path), "--mu1", "0", "--mu2", "0"])
    assert code == EXIT_CONFIG
    assert not (tmp_path / "trajectory.csv").exists()


def test_simulate_requires_initial_state(tmp_path, capsys):
    assert main(["simulate", *PAPER, *PAPER_GAINS, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "x1_0 required" in capsys.readouterr().err


def test_simulate_numeric_failure(config_file, tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise SimulationError(17)

    monkeypatch.setattr(cli, "simulate", boom)
    assert main(["simulate", "--config", str(config_file), "--out", str(tmp_path)]) == EXIT_NUMERIC
    assert "step 17" in capsys.readouterr().err


def _campaign_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_verify_paper(tmp_path, capsys):
    out_dir = tmp_path / "v"
    args = ["verify", *PAPER, *PAPER_GAINS, "--boundary-count", "100", "--interior-count", "50", "--out", str(out_dir)]
    assert main(args) == EXIT_OK
    rows = _campaign_rows(out_dir / "campaign.csv")
    assert len(rows) == 150 * 5
    assert all(r["pass"] == "true" for r in rows)
    assert "aggregate        PASS" in (out_dir / "summary.txt").read_text()

    out2 = tmp_path / "v2"
    assert main([*args[:-1], str(out2), "--seed", "12345"]) == EXIT_OK
    rows2 = _campaign_rows(out2 / "campaign.csv")
    assert [r["x2_0"] for r in rows2] != [r["x2_0"] for r in rows]


def test_verify_rejects_oversized_profile(tmp_path, capsys):
    code = main(["verify", *PAPER, *PAPER_GAINS, "--profiles", "zero,constant:0.4:+1", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG
    assert "above N" in capsys.readouterr().err


def test_verify_failure_exit(tmp_path, capsys):
    code = main(
        [
            "verify", *PAPER, *PAPER_GAINS,
            "--boundary-count", "4", "--profiles", "zero",
            "--settle-eps", "1e-3", "--record-stride", "1", "--out", str(tmp_path),
        ]
    )
    assert code == EXIT_VERIFY


def test_verify_default_battery_in_csv(tmp_path, capsys):
    assert main(["verify", *PAPER, *PAPER_GAINS, "--boundary-count", "4", "--out", str(tmp_path)]) == EXIT_OK
    labels = {r["profile"] for r in _campaign_rows(tmp_path / "campaign.csv")}
    assert labels == {p.label for p in default_battery(0.2)}


def test_demo_pendulum(tmp_path, capsys):
    assert main(["demo-pendulum", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("settling time  0.") == 2
    for name in ("pendulum_ic1.csv", "pendulum_ic2.csv", "phase_portrait.csv", "gamma_boundary.csv"):
        assert (tmp_path / name).exists()
    ring = np.loadtxt(tmp_path / "gamma_boundary.csv", delimiter=",", skiprows=1)
    v = 33.24 * np.abs(ring[:, 0]) + 0.5 * ring[:, 1] ** 2
    assert np.abs(v - 2.0).max() <= 1e-12
    pend = np.loadtxt(tmp_path / "pendulum_ic2.csv", delimiter=",", skiprows=1)
    ref = np.loadtxt(tmp_path / "reference_ic2.csv", delimiter=",", skiprows=1)
    assert np.abs(pend[:, 1:3] - ref[:, 1:3]).max() <= 1e-9


def test_demo_deterministic(tmp_path, capsys):
    main(["demo-pendulum", "--out", str(tmp_path / "a"), "--dt", "1e-4", "--settle-eps", "0.1"])
    main(["demo-pendulum", "--out", str(tmp_path / "b"), "--dt", "1e-4", "--settle-eps", "0.1"])
    for name in ("pendulum_ic1.csv", "phase_portrait.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "twisting", "tune", *PAPER, *PAPER_GAINS], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "eta" in proc.stdout
