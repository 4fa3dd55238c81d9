import csv
import json
import math

import numpy as np
import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from afcdd.cli import main
from afcdd.config import ConfigError, RunConfig, load_config, parse_config
from afcdd.curves import DecayCurve

SWEEP = {
    "scenario": "sweep-fixed-n",
    "physics": {"ou": {"sigma_hz": 15.1, "tau_c_ms": 9.5}},
    "sequence": {"kind": "XX", "n": 4, "tau_grid_ms": [1, 3, 6, 10]},
    "ensemble": {"n_traj": 3000, "seed": 11},
}


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def run_cli(tmp_path, data, *extra, out="out"):
    cfg = write_config(tmp_path, data)
    return main([data["scenario"], "--config", str(cfg), "--out-dir", str(tmp_path / out),
                 *extra])


def summary(tmp_path, out="out"):
    return json.loads((tmp_path / out / "summary.json").read_text())


def read_table(path):
    lines = [x for x in path.read_text().splitlines() if not x.startswith("#")]
    return list(csv.DictReader(lines))


def body(path):
    return "".join(line for line in path.read_text().splitlines(True) if not line.startswith("#"))


# ---------------------------------------------------------------------------
# schema


def test_defaults_validate():
    cfg = parse_config({"scenario": "check-config"})
    assert cfg.physics.ou.sigma_hz == 15.1
    assert cfg.ou.tau_c == pytest.approx(9.5e-3)
    assert cfg.epsilon == 0.0


def test_reproduce_defaults_to_calibrated_pulse_error():
    cfg = parse_config({"scenario": "reproduce", "reproduce": {"name": "fig6a"},
                        "ensemble": {"seed": 1}})
    assert cfg.physics.epsilon_rad == 0.154


@pytest.mark.parametrize("patch, fragment", [
    ({"sequence": {"kind": "XX", "n": 4, "tau_grid_ms": []}}, "tau_grid_ms"),
    ({"ensemble": {"n_traj": 100}}, "seed"),
    ({"sequence": {"kind": "XX", "n": 3, "tau_grid_ms": [1]}}, "multiple"),
    ({"sequence": {"kind": "KDD", "n": 4, "tau_grid_ms": [1]}}, "kind"),
    ({"physics": {"ou": {"sigma_hz": 15.1, "tau_ms": 9.5}}}, "tau_ms"),
    ({"extra": 1}, "extra"),
    ({"physics": {"eta_afc": 1.5}}, "eta_afc"),
])
def test_schema_violations(patch, fragment):
    data = {**SWEEP, **patch}
    with pytest.raises(ConfigError, match=fragment):
        parse_config(data)


def test_load_config_file(tmp_path):
    cfg = load_config(write_config(tmp_path, SWEEP))
    assert cfg.tau_grid_s == pytest.approx([1e-3, 3e-3, 6e-3, 10e-3])


@given(seed=st.integers(0, 2**64 - 1), n_traj=st.integers(1, 10**7),
       grid=st.lists(st.floats(0.01, 100), min_size=1, max_size=8),
       eps=st.one_of(st.none(), st.floats(-0.5, 0.5)), sigma=st.floats(0, 100))
def test_config_echo_round_trip(seed, n_traj, grid, eps, sigma):
    data = {"scenario": "sweep-fixed-n",
            "physics": {"ou": {"sigma_hz": sigma, "tau_c_ms": 9.5}, "epsilon_rad": eps},
            "sequence": {"kind": "XY4", "n": 8, "tau_grid_ms": grid},
            "ensemble": {"n_traj": n_traj, "seed": seed}}
    cfg = parse_config(data)
    assert parse_config(cfg.to_dict()) == cfg
    assert parse_config(cfg.to_yaml()) == cfg
    assert isinstance(cfg, RunConfig)


# ---------------------------------------------------------------------------
# command line


def test_check_config_default_values(tmp_path, capsys):
    assert main(["check-config", "--out-dir", str(tmp_path / "out")]) == 0
    s = summary(tmp_path)
    assert s["all_constraints_passed"]
    checks = s["results"]["constraints"]
    assert set(checks) == {"delta_gt_gamma_inh", "delta_gt_rabi", "delta_e_gt_gamma_afc"}
    assert all(c["passed"] for c in checks.values())
    assert {"versions", "wall_time_s", "seed", "config", "outputs"} <= set(s)


def test_empty_grid_exits_with_schema_error(tmp_path, capsys):
    data = {**SWEEP, "sequence": {"kind": "XX", "n": 4, "tau_grid_ms": []}}
    assert run_cli(tmp_path, data) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "schema"


def test_scenario_mismatch_is_schema_error(tmp_path, capsys):
    cfg = write_config(tmp_path, SWEEP)
    assert main(["simulate", "--config", str(cfg)]) == 2


def test_strict_constraint_failure(tmp_path, capsys):
    data = {"scenario": "check-config", "physics": {"field": {"magnitude_t": 1e-3}}}
    assert run_cli(tmp_path, data, "--strict") == 3
    err = capsys.readouterr().err.strip().splitlines()
    assert json.loads(err[-1])["error"] == "constraint"
    # without --strict the violation is a warning
    assert run_cli(tmp_path, data, out="lenient") == 0
    warnings = [json.loads(x) for x in capsys.readouterr().err.strip().splitlines()]
    assert any(w.get("warning") == "constraint" for w in warnings)
    assert not summary(tmp_path, "lenient")["all_constraints_passed"]


def test_sweep_writes_curve_and_overrides_apply(tmp_path, capsys):
    assert run_cli(tmp_path, SWEEP, "--seed", "5", "--n-traj", "2000") == 0
    s = summary(tmp_path)
    assert s["seed"] == 5 and s["config"]["ensemble"]["n_traj"] == 2000
    curve = DecayCurve.from_csv(tmp_path / "out" / "sweep_fixed_n4.csv")
    assert len(curve) == 4 and curve.meta["n"] == 4 and curve.meta["seed"] == 5
    assert curve.t_spin == pytest.approx([4e-3, 12e-3, 24e-3, 40e-3])


def test_byte_identical_across_threads_and_reruns(tmp_path, capsys, monkeypatch):
    assert run_cli(tmp_path, SWEEP, "--threads", "1", out="a") == 0
    assert run_cli(tmp_path, SWEEP, "--threads", "4", out="b") == 0
    monkeypatch.setenv("AFCDD_THREADS", "3")
    assert run_cli(tmp_path, SWEEP, out="c") == 0
    a, b, c = (tmp_path / d / "sweep_fixed_n4.csv" for d in "abc")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    # the echoed config reproduces the run
    echo = summary(tmp_path, "a")["config"]
    echo["io"]["out_dir"] = str(tmp_path / "d")
    assert main(["sweep-fixed-n", "--config", str(write_config(tmp_path, echo, "echo.yaml"))]) == 0
    assert body(tmp_path / "d" / "sweep_fixed_n4.csv") == body(a)


def test_simulate_and_fixed_tau(tmp_path, capsys):
    sim = {"scenario": "simulate", "sequence": {"kind": "XY8", "n_s": 2, "tau_ms": 2.0},
           "physics": {"epsilon_rad": 0.1}, "ensemble": {"n_traj": 2000, "seed": 3}}
    assert run_cli(tmp_path, sim, out="s") == 0
    r = summary(tmp_path, "s")["results"]["simulation"]
    assert r["n"] == 16 and r["t_spin_s"] == pytest.approx(0.032)
    tau = {"scenario": "sweep-fixed-tau", "sequence": {"kind": "XY4", "tau_ms": 2.0,
                                                        "n_grid": [0, 4, 8, 16]},
           "ensemble": {"n_traj": 2000, "seed": 3}}
    assert run_cli(tmp_path, tau, out="t") == 0
    curve = DecayCurve.from_csv(tmp_path / "t" / "sweep_fixed_tau.csv")
    assert curve.eta[0] == 1.0 and len(curve) == 4


def test_fit_scenario(tmp_path, capsys):
    t = np.linspace(0.0, 0.3, 12)
    DecayCurve(t, 0.8 * np.exp(-2 * t / 0.1), np.full(t.size, 1e-3)).to_csv(tmp_path / "c.csv")
    data = {"scenario": "fit", "fit": {"model": "EXP", "inputs": ["c.csv"]}}
    assert run_cli(tmp_path, data) == 0
    fits = json.loads((tmp_path / "out" / "fits.json").read_text())
    assert fits["c"]["params"]["t2"] == pytest.approx(0.1, rel=1e-8)


def test_fit_failures_have_their_own_exit_code(tmp_path, capsys):
    t = np.linspace(0.0, 0.3, 3)
    DecayCurve(t, np.exp(-t), np.full(3, 1e-3)).to_csv(tmp_path / "short.csv")
    data = {"scenario": "fit", "fit": {"model": "STRETCHED", "inputs": ["short.csv"]}}
    assert run_cli(tmp_path, data) == 4
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "fit"
    # a flat curve has no finite decay time: reported, not guessed
    t = np.linspace(0.0, 0.3, 12)
    DecayCurve(t, np.full(12, 0.5), np.full(12, 1e-3)).to_csv(tmp_path / "flat.csv")
    data = {"scenario": "fit", "fit": {"model": "EXP", "inputs": ["flat.csv"]}}
    assert run_cli(tmp_path, data, out="flat") == 4
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "fit_nonconvergence"
    assert summary(tmp_path, "flat")["fits_converged"] is False


def test_missing_input_is_reported(tmp_path, capsys):
    data = {"scenario": "fit", "fit": {"model": "EXP", "inputs": ["nope.csv"]}}
    assert run_cli(tmp_path, data) == 2


# ---------------------------------------------------------------------------
# reproduce bundles


def test_reproduce_fig4_total_efficiency(tmp_path, capsys):
    assert main(["reproduce", "fig4", "--seed", "1", "--n-traj", "5000",
                 "--out-dir", str(tmp_path / "out")]) == 0
    first = read_table(tmp_path / "out" / "fig4_total_efficiency.csv")[0]
    assert float(first["t_spin_s"]) == pytest.approx(2e-3)
    assert float(first["eta_spin"]) == pytest.approx(1.0, abs=0.01)
    assert abs(float(first["eta_tot"]) - 0.037) <= 0.002


def test_reproduce_fig5_bundle(tmp_path, capsys):
    main(["reproduce", "fig5", "--seed", "1", "--n-traj", "5000",
          "--out-dir", str(tmp_path / "out")])
    out = tmp_path / "out"
    for n in (2, 4, 8, 16):
        assert DecayCurve.from_csv(out / f"fig5_n{n}.csv").meta["n"] == n
    fits = json.loads((out / "fig5_fits.json").read_text())
    assert math.isfinite(fits["power_law"]["params"]["gamma"])
    assert {"sigma_hz", "tau_c"} <= set(fits["ou_global"]["params"])


def test_reproduce_fig6a_dashed_line(tmp_path, capsys):
    main(["reproduce", "fig6a", "--seed", "2", "--n-traj", "1000",
          "--out-dir", str(tmp_path / "out")])
    rows = read_table(tmp_path / "out" / "fig6a_t2_vs_tau.csv")
    for r in rows:
        tau = float(r["tau_s"])
        assert float(r["t2_xx_line_s"]) == pytest.approx(2 * math.sqrt(2) * tau / 0.154,
                                                         rel=1e-15)
        assert float(r["t2_pulse_error_s"]) > 0 and float(r["t2_ou_limit_s"]) > 0
    assert {r["kind"] for r in rows} == {"XX", "XY4", "XY8"}


def test_unknown_reproduce_name(tmp_path, capsys):
    assert main(["reproduce", "fig7", "--seed", "1"]) == 2
