import dataclasses
import json
import subprocess
import sys

import numpy as np
import pytest

from phenotumor import cli
from phenotumor.acceptance import Suite
from phenotumor.errors import ConfigError
from phenotumor.experiments import (
    DIAGNOSTICS_COLUMNS,
    DIAGNOSTICS_SCHEMA,
    OUT_ENV,
    SNAPSHOT_SCHEMA,
    cmd_epsilon_sweep,
    cmd_gamma_sweep,
    config_from_dict,
    diagnostics_header,
    execute_run,
    initial_population,
    load_reference_config,
    parse_config,
    read_csv,
    read_schema,
)

SMALL = {
    "grid": {"extents": [[-3, 3]], "cells": [120]},
    "phenotype": {"nodes": 2},
    "solver": {"gamma": 3, "T": 0.1},
    "reaction": {"family": "linear_inhibition", "g0": 1, "g1": 0.5},
    "initial": {"profile": "box", "half_width": 0.5, "level": 0.6},
    "output": {"snapshot_times": [0.05]},
}


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_defaults_are_filled():
    cfg = config_from_dict({})
    s = cfg.solver
    assert (s.gamma, s.eps, s.p_M, s.c_cfl, s.boundary_policy) == (2.0, 0.0, 1.0, 0.4, "abort")
    assert cfg.mesh.n_nodes == 1 and cfg.grid.shape == (400,)


def test_invalid_values_are_all_reported():
    data = {"solver": {"gamma": 0.5, "eps": -1, "bogus": 1}, "extra": {}, "reaction": {"g0": "x"}}
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    text = "\n".join(info.value.problems)
    for needle in ("extra", "solver.bogus", "reaction.g0"):
        assert needle in text
    data = {"solver": {"gamma": 0.5, "eps": -1}}
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert len(info.value.problems) == 2


def test_support_touching_boundary_is_rejected():
    with pytest.raises(ConfigError, match="boundary"):
        config_from_dict({"grid": {"extents": [[-1, 1]], "cells": [100]},
                          "initial": {"profile": "box", "half_width": 0.95, "level": 0.5}})


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"grid": {')
    with pytest.raises(ConfigError, match="line 1"):
        parse_config(path)
    with pytest.raises(FileNotFoundError):
        parse_config(tmp_path / "missing.json")


def test_zero_data_gives_zero_outputs(tmp_path):
    data = {**SMALL, "initial": {"profile": "box", "half_width": 0.5, "level": 0.0}}
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(_write(tmp_path, data)), "--out", str(out)]) == 0
    header, rows = read_csv(out / "snapshot_002.csv")
    assert np.all(rows[:, header.index("rho"):] == 0)
    header, rows = read_csv(out / "diagnostics.csv")
    assert np.all(rows[:, 1:] == 0)


def test_run_writes_versioned_csvs(tmp_path):
    out = tmp_path / "out"
    traj = execute_run(config_from_dict(SMALL), out)
    files = sorted(p.name for p in out.iterdir())
    assert files == ["diagnostics.csv", "snapshot_000.csv", "snapshot_001.csv", "snapshot_002.csv"]
    assert read_schema(out / "diagnostics.csv") == DIAGNOSTICS_SCHEMA
    assert read_schema(out / "snapshot_001.csv") == SNAPSHOT_SCHEMA
    header, rows = read_csv(out / "diagnostics.csv")
    assert tuple(header) == DIAGNOSTICS_COLUMNS == tuple(diagnostics_header((0.1, 0.25, 0.4)))
    assert rows[-1, 0] == 0.1 and len(rows) == len(traj.records)
    h, snap = read_csv(out / "snapshot_002.csv")
    assert h[:4] == ["x", "rho", "p", "v"] and h[-2:] == ["n_0", "n_1"]
    np.testing.assert_array_equal(snap[:, h.index("rho")], traj.final.rho)


def test_barenblatt_reference_spreads():
    cfg = load_reference_config("barenblatt")
    cfg = dataclasses.replace(cfg, grid=dataclasses.replace(cfg.grid, cells=(200,)))
    cfg = cfg.with_solver(T=0.1)
    n0 = initial_population(cfg)
    traj = execute_run(cfg, False)
    width = lambda rho: np.count_nonzero(rho > 0)
    assert width(traj.final.rho) > width(cfg.mesh.integrate(n0))
    assert traj.monitors.max_rel_mass_drift < 1e-13


def test_runs_are_byte_identical(tmp_path):
    cfg = config_from_dict(SMALL)
    execute_run(cfg, tmp_path / "a")
    execute_run(cfg, tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_invalid_config_exit_code(tmp_path, capsys):
    path = _write(tmp_path, {"solver": {"gamma": 0.5}})
    assert cli.main(["run", "--config", str(path)]) == 1
    assert "gamma" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["gamma-sweep", "--config", str(path), "--gammas", "a,b"])
    assert info.value.code == 1


def test_entry_point_subprocess(tmp_path):
    path = _write(tmp_path, {"solver": {"c_cfl": 2}})
    proc = subprocess.run([sys.executable, "-m", "phenotumor.cli", "run", "--config", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 1 and "c_cfl" in proc.stderr


def test_sweep_list_validation():
    cfg = config_from_dict(SMALL)
    for bad in ([], [5, 3], [1.0, 2.0]):
        with pytest.raises(ConfigError):
            cmd_gamma_sweep(cfg, bad, write=False)
    for bad in ([0.1, 0.2, 0.0], [0.1, 0.01], [-0.1, 0.0]):
        with pytest.raises(ConfigError):
            cmd_epsilon_sweep(cfg, bad, write=False)


def test_single_value_gamma_sweep_and_zero_state(tmp_path):
    cfg = config_from_dict(SMALL)
    res = cmd_gamma_sweep(cfg, [4.0], out=tmp_path)
    assert len(res.rows) == 1 and not res.failures
    assert (tmp_path / "gamma_sweep" / "sweep.csv").is_file()
    zero = config_from_dict({**SMALL, "initial": {"profile": "box", "half_width": 0.5, "level": 0.0}})
    res = cmd_gamma_sweep(zero, [2.0, 5.0], write=False)
    assert np.all(res.column("saturation_avg") == 0) and np.all(res.column("complementarity_avg") == 0)


def test_parallel_sweep_matches_serial():
    cfg = config_from_dict(SMALL)
    a = cmd_gamma_sweep(cfg, [2.0, 4.0], write=False)
    b = cmd_gamma_sweep(cfg, [2.0, 4.0], jobs=2, write=False)
    for col in ("saturation_avg", "grad_p_l4_int", "mass_final"):
        np.testing.assert_array_equal(a.column(col), b.column(col))


def test_epsilon_sweep_reference_and_lift():
    cfg = config_from_dict(SMALL)
    res = cmd_epsilon_sweep(cfg, [0.0], write=False)
    assert res.column("l1_rho_diff")[0] == 0 and res.column("l2_v_diff")[0] == 0
    # vacuum with no reaction: only the eps-lift survives, its mass is linear in eps
    vac = config_from_dict({**SMALL, "reaction": {"family": "none"},
                            "initial": {"profile": "box", "half_width": 0.5, "level": 0.0}})
    vac = vac.with_solver(T=0.0)
    res = cmd_epsilon_sweep(vac, [0.02, 0.01, 0.0], write=False)
    d = res.column("l1_rho_diff")
    assert d[2] == 0 and d[0] == pytest.approx(2 * d[1], rel=1e-12)
    assert d[0] == pytest.approx(res.rows[0]["mass_final"], rel=1e-12)


def test_out_env_is_honoured(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "root"))
    path = _write(tmp_path, SMALL, "named.json")
    assert cli.main(["run", "--config", str(path)]) == 0
    assert (tmp_path / "root" / "named" / "diagnostics.csv").is_file()


def test_verify_missing_config_dir(tmp_path, capsys):
    assert cli.main(["verify", "--config", str(tmp_path / "absent")]) == 2
    assert "not found" in capsys.readouterr().err


def test_corrupted_barenblatt_constant_fails_first_check():
    suite = Suite()
    good = suite.barenblatt_profile
    suite.__dict__["barenblatt_profile"] = dataclasses.replace(good, C=good.C * 1.01)
    res = suite.c1_barenblatt()
    assert not res.passed and "self-test" in res.detail
