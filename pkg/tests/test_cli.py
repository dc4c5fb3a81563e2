import re
import subprocess
import sys

import pytest

from robocrane.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_TRANSPORT, main
from robocrane.sim import COLUMNS, SimTrace


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_stability_fig7(capsys):
    code, out, _ = run(capsys, "stability", "--preset", "fig7")
    assert code == EXIT_OK
    assert "a1=700" in out and "a4=8.95e+06" in out
    assert out.splitlines()[4] == "verdict: stable"
    assert "a1*a2*a3 > a3^2 + a1^2*a4" in out


def test_rootlocus(capsys, tmp_path):
    code, out, _ = run(capsys, "rootlocus", "--Mr", "10", "--tau-r", "0.02", "--Ke", "500", "--csv", str(tmp_path / "rl.csv"))
    assert code == EXIT_OK
    k_stab = float(re.search(r"critical stability gain K_r = ([\d.]+)", out).group(1))
    k_osc = float(re.search(r"critical oscillation gain K_r = ([\d.]+)", out).group(1))
    assert k_stab == pytest.approx(85.49, rel=0.01)
    assert k_osc == pytest.approx(487.178, rel=0.01)
    assert (tmp_path / "rl.csv").read_text().startswith("K_r,B_r,root1_re")


def test_rootlocus_without_crossing(capsys):
    code, out, _ = run(capsys, "rootlocus", "--Mr", "10", "--tau-r", "0.02", "--Ke", "500", "--Kmin", "1000", "--Kmax", "2000", "--Kstep", "100")
    assert code == EXIT_OK
    assert out.count("not bracketed") == 2


def test_simulate_writes_csv_and_script(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--preset", "fig7", "--out", str(tmp_path))
    assert code == EXIT_OK
    tr = SimTrace.from_csv(tmp_path / "fig7_trace.csv")
    assert len(tr) == 5001
    gp = (tmp_path / "fig7_trace.gp").read_text()
    assert "set multiplot layout 3,1" in gp and "fig7_trace.csv" in gp
    assert sum(line.startswith("plot ") for line in gp.splitlines()) == 3


def test_compare_writes_pair(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", "--preset", "fig8-compare", "--out", str(tmp_path))
    assert code == EXIT_OK
    for name in ("fig8-compare_collaborative.csv", "fig8-compare_velocity_only.csv"):
        assert (tmp_path / name).read_text().splitlines()[0] == ",".join(COLUMNS)
    gp = (tmp_path / "fig8-compare_compare.gp").read_text()
    assert "layout 3,2" in gp and sum(line.startswith("plot ") for line in gp.splitlines()) == 6


def test_config_file(capsys, tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'preset = "fig7"\n[scenario]\nduration = 15.0\n[output]\ndir = "{tmp_path / "o"}"\nprefix = "x_"\n')
    code, out, _ = run(capsys, "simulate", "--config", str(cfg))
    assert code == EXIT_OK
    assert len(SimTrace.from_csv(tmp_path / "o" / "x_fig7_trace.csv")) == 3751


def test_estimate_ke(capsys, tmp_path):
    code, out, _ = run(capsys, "estimate-ke", "--m", "10", "--R", "0.5", "--csv", str(tmp_path / "ke.csv"))
    assert code == EXIT_OK
    assert "K_e = 196.2 N/m" in out


def test_design_warnings(capsys):
    code, out, _ = run(capsys, "design", "--Mr", "10", "--Kr", "400", "--Mc", "1", "--Kc", "1000", "--Ke", "500")
    assert code == EXIT_OK
    assert "warning: robot stiffness" in out


def test_dump_preset_round_trips(capsys, tmp_path):
    code, out, _ = run(capsys, "dump-preset", "exp-0.09")
    assert code == EXIT_OK
    (tmp_path / "p.toml").write_text(out)
    from robocrane.config import load_config, load_preset

    assert load_config(tmp_path / "p.toml").scenario == load_preset("exp-0.09")


def test_config_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('preset = "fig7"\n[scenario]\nwobble = 1\n')
    code, _, err = run(capsys, "stability", "--config", str(bad))
    assert code == EXIT_CONFIG
    assert "line 3" in err


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "estimate-ke", "--m", "10", "--R", "0.5", "--Lmax", "0.7")
    assert code == EXIT_CONFIG


def test_numerical_error_exit_code(capsys, tmp_path):
    cfg = tmp_path / "div.toml"
    cfg.write_text('preset = "fig7"\n[scenario]\ndt = 0.05\n')
    with pytest.warns(RuntimeWarning):
        code, _, err = run(capsys, "simulate", "--config", str(cfg), "--out", str(tmp_path))
    assert code == EXIT_NUMERICAL
    assert "diverge" in err.lower()


def test_transport_error_exit_code(capsys):
    import socket

    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
        code, _, err = run(capsys, "serve-plant", "--listen", f"127.0.0.1:{port}")
    assert code == EXIT_TRANSPORT


def test_controller_without_plant(capsys, tmp_path):
    code, _, err = run(capsys, "run-controller", "--plant", "127.0.0.1:9", "--startup-timeout", "0.3", "--out", str(tmp_path))
    assert code == EXIT_TRANSPORT


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--preset", "nope"])
    assert exc.value.code == 2


def test_two_processes(tmp_path):
    import socket

    with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    cfg = tmp_path / "short.toml"
    cfg.write_text(
        'preset = "fig7"\n[scenario]\nduration = 1.0\n'
        "profile = { v_max = 0.1, t_ramp = 0.2, t_cruise = 0.3, t_start = 0.1 }\n"
        f'[output]\ndir = "{tmp_path}"\n'
    )
    plant = subprocess.Popen(
        [sys.executable, "-m", "robocrane", "serve-plant", "--config", str(cfg), "--listen", f"127.0.0.1:{port}", "--lockstep"],
        stdout=subprocess.PIPE,
        text=True,
    )
    ctrl = subprocess.run(
        [sys.executable, "-m", "robocrane", "run-controller", "--config", str(cfg), "--plant", f"127.0.0.1:{port}"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    out, _ = plant.communicate(timeout=60)
    assert plant.returncode == 0 and ctrl.returncode == 0, (out, ctrl.stderr)
    from robocrane.config import load_config
    from robocrane.sim import simulate

    ref = simulate(load_config(cfg).scenario)
    tr = SimTrace.from_csv(tmp_path / "fig7_plant.csv")
    assert max(tr.max_abs_deviation(ref).values()) < 1e-9
