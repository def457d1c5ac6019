import json
import logging
import math

import numpy as np
import pytest

from wavepint import bench
from wavepint.bench import (
    CSV_HEADER,
    ExperimentConfig,
    RunRecord,
    emit_csv,
    emit_json,
    get_preset,
    plan_runs,
    read_csv,
    read_json,
    run_experiment,
    run_spectrum_study,
)
from wavepint.cli import main


def _record(**kw):
    base = dict(gamma=1e-6, h=2.0 ** -7, dof=32766, preconditioner="strang", iterations=10,
                converged=True, wall_time_s=0.0123456789, e_y=3.0022543896607995e-1,
                e_p=1.267e-4, final_relative_residual=1.5e-13)
    base.update(kw)
    return RunRecord(**base)


def test_csv_single_record(tmp_path):
    path = tmp_path / "r.csv"
    emit_csv([_record()], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == "gamma,h,dof,preconditioner,iterations,converged,wall_time_s,e_y,e_p,final_relative_residual"
    assert tuple(lines[0].split(",")) == CSV_HEADER


def test_csv_round_trip(tmp_path):
    recs = [_record(), _record(preconditioner="none", converged=False, iterations=200, e_y=math.nan)]
    path = tmp_path / "r.csv"
    emit_csv(recs, path)
    back = read_csv(path)
    assert back[0] == recs[0]
    assert back[1].converged is False and math.isnan(back[1].e_y)
    for a, b in zip(recs, back):
        for k in ("gamma", "h", "wall_time_s", "e_p", "final_relative_residual"):
            assert getattr(b, k) == pytest.approx(getattr(a, k), rel=1e-15)


def test_read_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(path)


def test_empty_gamma_list():
    assert run_experiment(ExperimentConfig(gammas=[], hs=["2^-5"])) == []


def test_invalid_preconditioner_name():
    with pytest.raises(ValueError, match="unknown preconditioner"):
        run_experiment(ExperimentConfig(gammas=[1e-4], hs=["2^-5"], preconditioners=["ilu"]))


def test_abs_h_memory_guard():
    with pytest.raises(ValueError, match="abs-h"):
        run_experiment(ExperimentConfig(gammas=[1e-4], hs=["2^-7"], preconditioners=["abs-h"]))


def test_run_record_fields_and_determinism():
    cfg = ExperimentConfig("example-1d", [1e-6], ["2^-5"], ["strang", "tau"])
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert [r.iterations for r in a] == [r.iterations for r in b]
    assert [(r.e_y, r.e_p) for r in a] == [(r.e_y, r.e_p) for r in b]
    for r in a:
        assert r.dof == 2 * 31 * 33
        assert r.iterations <= cfg.maxit and r.converged


def test_concurrent_runs_match_serial():
    cfg = ExperimentConfig("example-1d", [1e-4, 1e-8], ["2^-5"], ["strang", "mod-tau"])
    serial = run_experiment(cfg)
    cfg.workers = 3
    parallel = run_experiment(cfg)
    assert [(r.preconditioner, r.iterations, r.e_y) for r in serial] == \
           [(r.preconditioner, r.iterations, r.e_y) for r in parallel]


def test_2d_run_matches_tables():
    (rec,) = run_experiment(ExperimentConfig("example-2d", [1e-6], ["2^-5"], ["strang"]))
    assert abs(rec.iterations - 10) <= 2
    assert rec.e_y == pytest.approx(3.63e-2, rel=0.05)


def test_table1_preset_shape_and_skips(caplog):
    cfg = get_preset("table1")
    runs, skipped = plan_runs(cfg)
    assert len(runs) + len(skipped) == 5 * 4 * 3
    assert {r.h for r in runs} == {2.0 ** -7, 2.0 ** -8}
    assert all("desk cap" in s for s in skipped)
    with caplog.at_level(logging.WARNING):
        bench.run_experiment(get_preset("table1", gammas=[1e-8], preconditioners=["strang"], hs=[2.0 ** -9]))
    assert any("skipped" in rec.message for rec in caplog.records)


def test_allow_large_lifts_desk_cap():
    runs, skipped = plan_runs(get_preset("table4", allow_large=True))
    assert not skipped and len(runs) == 5 * 4 * 3


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.from_dict({"gammas": [1e-2], "colour": "red"})


def test_spectrum_study_lengths():
    cfg = ExperimentConfig("example-1d", [1e-4], [], ["psi"], mode="spectrum", m1s=[15], ns=[32])
    (rep,) = run_spectrum_study(cfg)
    assert rep.size == 960 and len(rep.eigenvalues) == len(rep.samples) == 960


def test_spectrum_study_skips_oversize(caplog):
    cfg = ExperimentConfig("example-2d", [1e-6], [], ["psi"], mode="spectrum", m1s=[7], ns=[128])
    with caplog.at_level(logging.WARNING):
        assert run_spectrum_study(cfg) == []
    assert "skipped" in caplog.text


def test_preconditioned_spectrum_reports(tmp_path):
    cfg = ExperimentConfig("example-1d", [1e-8], [], ["strang", "tau"], mode="spectrum", m1s=[7], ns=[16])
    reps = run_spectrum_study(cfg)
    assert [r.label for r in reps] == ["strang vs +-1", "tau vs +-1"]
    for r in reps:
        assert r.interval_check is not None
        assert r.outlier_count <= 16 * 7
    path = tmp_path / "s.json"
    emit_json(reps, path)
    assert read_json(path) == reps


def test_distribution_improves_with_n():
    cfg = ExperimentConfig("example-1d", [1e-6], [], ["psi"], mode="spectrum", m1s=[15], ns=[32, 64])
    r32, r64 = run_spectrum_study(cfg)
    assert r64.mean_abs_diff <= r32.mean_abs_diff


# command line

def test_cli_solve_writes_csv(tmp_path, capsys):
    out = tmp_path / "results.csv"
    code = main(["solve", "--problem", "example-1d", "--gamma", "1e-6", "--h", "2^-5", "--precond", "strang",
                 "--tol", "1e-10", "--maxit", "200", "--out", str(out)])
    assert code == 0
    (rec,) = read_csv(out)
    assert rec.preconditioner == "strang" and rec.converged
    assert "strang" in capsys.readouterr().out


def test_cli_spectrum_json(tmp_path):
    out = tmp_path / "report.json"
    assert main(["spectrum", "--problem", "example-1d", "--m", "15", "--n", "32", "--gamma", "1e-4",
                 "--out", str(out)]) == 0
    (data,) = json.loads(out.read_text())
    assert len(data["eigenvalues"]) == len(data["samples"]) == 960


def test_cli_spectrum_size_flags():
    with pytest.raises(SystemExit):
        main(["spectrum", "--m", "15", "--m1", "3"])
    assert main(["spectrum", "--problem", "example-2d", "--m", "8", "--n", "4", "--gamma", "1e-4"]) == 2


def test_cli_strict_exit_code(capsys):
    args = ["solve", "--problem", "example-1d", "--gamma", "1e-2", "--h", "2^-5", "--precond", "none",
            "--maxit", "5"]
    assert main(args) == 0
    assert main(args + ["--strict"]) == 1
    assert "not converged" in capsys.readouterr().err


def test_cli_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "example-1d", "gammas": [1e-8], "hs": ["2^-5"],
                               "preconditioners": ["tau"], "maxit": 50}))
    out = tmp_path / "o.csv"
    assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    (rec,) = read_csv(out)
    assert rec.preconditioner == "tau" and rec.gamma == 1e-8


def test_cli_bad_input_reports_error(capsys):
    assert main(["solve", "--gamma", "1e-4", "--h", "0.3"]) == 2
    assert "error" in capsys.readouterr().err


def test_cli_sweep(tmp_path, monkeypatch):
    small = get_preset("table3", gammas=[1e-6], hs=[2.0 ** -5])
    monkeypatch.setitem(bench.PRESETS, "table3", small)
    out = tmp_path / "t3.csv"
    assert main(["sweep", "--preset", "table3", "--out", str(out)]) == 0
    recs = read_csv(out)
    assert [r.preconditioner for r in recs] == ["mod-strang", "mod-tau"]
    assert np.all([r.converged for r in recs])
