import json

import numpy as np
import pytest
import yaml

from kinlimits.cli import main
from kinlimits.fluid_reference import solve_stationary_stokes
from kinlimits.harness import (
    CSV_COLUMNS,
    ConfigError,
    EmptyInput,
    ExperimentConfig,
    cmd_coefficients,
    cmd_relax_test,
    cmd_report,
    cmd_sweep,
    fit_order,
    reference_state,
)
from kinlimits.kinetic_model import default_source
from kinlimits.kinetic_solver import NotConverged

SMALL = dict(M=8, N=8, epsilon_ladder=[0.2, 0.1])


@pytest.mark.parametrize(
    "kw",
    [
        dict(epsilon_ladder=[0.1, 0.2]),
        dict(epsilon_ladder=[0.6, 0.1]),
        dict(epsilon_ladder=[0.2, 0.2]),
        dict(epsilon_ladder=[]),
        dict(r=1.0, q=1.0),
        dict(method="euler"),
        dict(amplitude=-1.0),
    ],
)
def test_config_invariants(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw)


def test_yaml_config_and_overrides(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump({"r": 2.0, "q": 0.5, "epsilon_ladder": [0.2, 0.1], "M": 16}))
    cfg = ExperimentConfig.from_yaml(path, M=8, nu0=None)
    assert cfg.regime.cls.value == "Stokes" and cfg.M == 8 and cfg.nu0 == 1.0
    path.write_text(yaml.safe_dump({"bogus": 1}))
    with pytest.raises(ConfigError, match="unknown keys"):
        ExperimentConfig.from_yaml(path)
    with pytest.raises(ConfigError, match="cannot read"):
        ExperimentConfig.from_yaml(tmp_path / "missing.yaml")


def test_regime_dispatch_is_total():
    nsf = reference_state(ExperimentConfig(r=0.5, q=0.5, M=8))
    stokes = reference_state(ExperimentConfig(r=2.0, q=0.5, M=8))
    euler = reference_state(ExperimentConfig(r=0.5, q=2.0, M=8))
    f = default_source(8).momentum
    assert np.allclose(stokes.u, solve_stationary_stokes(f, 1.0).u)
    assert nsf.iterations >= 1
    assert euler is None
    assert ExperimentConfig(r=0.5, q=2.0).resolved_method() == "stationary"
    assert ExperimentConfig(r=2.0, q=0.5).resolved_method() == "stepping"


def test_zero_amplitude_sweep_has_no_error():
    for r, q in [(0.5, 0.5), (2.0, 0.5), (0.5, 2.0)]:
        rep = cmd_sweep(ExperimentConfig(r=r, q=q, amplitude=0.0, **SMALL), write=False)
        for row in rep.rows:
            assert row.u_error < 1e-10 and row.theta_error < 1e-10
            assert row.euler_momentum_residual < 1e-10


def test_stokes_sweep_compares_with_stokes_solution():
    rep = cmd_sweep(ExperimentConfig(r=2.0, q=0.5, **SMALL), write=False)
    assert rep.regime["class"] == "Stokes"
    errs = rep.column("u_error")
    assert errs[1] < errs[0]
    assert rep.fitted_order is not None and rep.fitted_order > 0


def test_euler_sweep_reports_residuals_only():
    rep = cmd_sweep(ExperimentConfig(r=0.5, q=2.0, **SMALL), write=False)
    assert np.all(np.isnan(rep.column("u_error")))
    assert rep.rows[0].method == "stationary"
    assert "nan" in rep.csv_text()
    assert rep.to_json()["rows"][0]["u_error"] is None


def test_not_converged_carries_epsilon():
    cfg = ExperimentConfig(max_steps=3, **SMALL)
    with pytest.raises(NotConverged) as info:
        cmd_sweep(cfg, write=False)
    assert info.value.epsilon == 0.2


def test_sweep_writes_reports_and_snapshots(tmp_path):
    cfg = ExperimentConfig(output_dir=str(tmp_path), snapshots=True, **SMALL)
    rep = cmd_sweep(cfg)
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "# kinlimits sweep report, schema_version=1"
    assert lines[1].split(",") == list(CSV_COLUMNS)
    assert len(lines) == 2 + len(cfg.epsilon_ladder)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["coefficients"] == {"kappa": "1", "nu": "1"}
    assert all(r["wall_time"] > 0 for r in data["rows"])
    assert sorted(p.name for p in tmp_path.glob("*.npz")) == ["snapshot_eps0.1.npz", "snapshot_eps0.2.npz"]
    merged = cmd_report([tmp_path])
    assert len(merged["runs"]) == 1 and merged["runs"][0]["fitted_order"] == rep.fitted_order


def test_fit_order():
    eps = np.array([0.2, 0.1, 0.05])
    assert fit_order(eps, 3 * eps**1.5) == pytest.approx(1.5)
    assert fit_order(eps, np.array([1.0, np.nan, 0.5])) is None
    assert fit_order(eps[:1], eps[:1]) is None


def test_report_empty_and_missing(tmp_path):
    with pytest.raises(EmptyInput):
        cmd_report([tmp_path])
    with pytest.raises(FileNotFoundError):
        cmd_report([tmp_path / "nope"])


def test_coefficients_and_relax():
    assert cmd_coefficients(1.0) == "kappa=1 nu=1"
    assert cmd_coefficients(2.0) == "kappa=1/2 nu=1/2"
    res = cmd_relax_test()
    assert res.ok and res.max_deviation < 1e-10
    assert all(c["final_ratio"] == pytest.approx(1e-3) for c in res.cases)


def test_cli_subcommands(tmp_path, capsys):
    assert main(["coefficients", "--nu0", "1"]) == 0
    assert capsys.readouterr().out.strip() == "kappa=1 nu=1"
    assert main(["verify-algebra", "--nu0", "2"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "kappa=1/2 nu=1/2" in out
    assert main(["verify-algebra", "--corrupt-bhat"]) == 1
    assert "FAIL  tensor identities" in capsys.readouterr().out
    assert main(["relax-test"]) == 0
    assert main(["report", str(tmp_path)]) == 2
    assert "no report.json" in capsys.readouterr().err


def test_cli_sweep_with_config_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({"M": 8, "epsilon_ladder": [0.2, 0.1], "amplitude": 0.0}))
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(cfg), "--output-dir", str(out), "--epsilon-ladder", "0.3,0.2"]) == 0
    assert "0.3," in (out / "report.csv").read_text()
    assert main(["sweep", "--config", str(cfg), "--epsilon-ladder", "0.1,0.2"]) == 2
    assert main(["report", str(out), "-o", str(tmp_path / "merged.json")]) == 0
    assert json.loads((tmp_path / "merged.json").read_text())["runs"]


@pytest.mark.parametrize("name,cls", [("nsf", "NSF"), ("stokes", "Stokes"), ("euler", "Euler")])
def test_shipped_configs_load(name, cls):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.yaml"
    cfg = ExperimentConfig.from_yaml(path)
    assert cfg.regime.cls.value == cls
    assert cfg.epsilon_ladder == [0.2, 0.1, 0.05]
