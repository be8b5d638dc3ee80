import csv
import json

import pytest

import sgecrack.cli as cli
from sgecrack.errors import SolverError

FAST_GEOMETRY = {"d": 0.3, "L": 1.0, "R": 0.003, "M": 4, "grading": 1.6, "n_theta": 8}


def write_config(tmp_path, **extra):
    data = {"material": {"ell": 0.03}, "geometry": dict(FAST_GEOMETRY)}
    data.update(extra)
    path = tmp_path / "case.json"
    path.write_text(json.dumps(data))
    return path


def read_csv(path):
    with path.open() as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_outputs_and_exit_code(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(write_config(tmp_path)), "--out", str(out)]) == cli.EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert printed["mode"] == "I" and printed["kt"] > 1.0
        for name in ("summary.json", "crack_opening.csv", "bottom_line.csv", "crack_opening.svg",
                     "bottom_line.svg"):
            assert (out / name).is_file()
        record = json.loads((out / "summary.json").read_text())
        assert record["summary"]["residual_norm"] < 1e-9
        assert record["config"]["geometry"]["M"] == 4
        opening = read_csv(out / "crack_opening.csv")
        assert all(float(r["x"]) < 0.0 for r in opening)

    def test_deterministic(self, tmp_path):
        cfg = write_config(tmp_path)
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / "same"
            assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == cli.EXIT_OK
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outputs[0] == outputs[1]

    def test_mode2_reports_shear_kt(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(write_config(tmp_path, mode="II")), "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["mode"] == "II" and summary["k"][0] == 0.0 and summary["kt"] > 1.0


class TestExitCodes:
    def test_configuration_error(self, tmp_path, capsys):
        assert cli.main(["run", "--config", str(write_config(tmp_path, bogus=1))]) == cli.EXIT_CONFIG
        assert "unknown key" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG

    def test_wrong_study_kind(self, tmp_path):
        assert cli.main(["converge", "--config", str(write_config(tmp_path))]) == cli.EXIT_CONFIG

    def test_solver_error(self, tmp_path, monkeypatch, capsys):
        def fail(cfg, out):
            raise SolverError("factorization failed")

        monkeypatch.setattr(cli, "run_single", fail)
        assert cli.main(["run", "--config", str(write_config(tmp_path))]) == cli.EXIT_SOLVER
        assert "factorization failed" in capsys.readouterr().err

    def test_bad_arguments(self, tmp_path):
        with pytest.raises(SystemExit):
            cli.main(["run", "--config", str(write_config(tmp_path)), "--threads", "-1"])
        with pytest.raises(SystemExit):
            cli.main(["bogus"])


class TestMeshDump:
    def test_writes_mesh(self, tmp_path, capsys):
        out = tmp_path / "mesh"
        assert cli.main(["mesh-dump", "--config", str(write_config(tmp_path)), "--out", str(out)]) == 0
        stats = json.loads((out / "mesh_statistics.json").read_text())
        assert (out / "mesh.txt").is_file() and stats["enriched"] == 4
        assert f"{stats['nodes']} nodes" in capsys.readouterr().out


class TestConverge:
    def test_failed_points_recorded(self, tmp_path):
        # R / ell = 5 puts the fan outside the refined core: that point fails, the rest run
        study = {"kind": "convergence", "sweep": "R_over_ell", "values": [0.2, 5.0]}
        out = tmp_path / "conv"
        cfg = write_config(tmp_path, study=study)
        assert cli.main(["converge", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
        rows = read_csv(out / "convergence.csv")
        failures = json.loads((out / "failures.json").read_text())
        assert len(rows) == 1 and len(failures) == 1
        assert float(rows[0]["value"]) == 0.2
        assert float(rows[0]["kt"]) > float(rows[0]["kt_conventional"]) > 1.0
        assert (out / "convergence.svg").is_file()
        assert sorted(p.name for p in (out / "points").iterdir()) == ["R_over_ell_000.json"]

    def test_m_sweep(self, tmp_path):
        study = {"kind": "convergence", "sweep": "M", "values": [4, 6]}
        out = tmp_path / "m"
        assert cli.main(["converge", "--config", str(write_config(tmp_path, study=study)), "--out", str(out)]) == 0
        rows = read_csv(out / "convergence.csv")
        assert [int(float(r["value"])) for r in rows] == [4, 6]


class TestSizeEffect:
    def test_small_sweep(self, tmp_path):
        study = {"kind": "size-effect", "d_over_L": [0.1, 0.3], "ell_over_L": [0.02]}
        out = tmp_path / "size"
        cfg = write_config(tmp_path, study=study)
        assert cli.main(["size-effect", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_csv(out / "size_effect.csv")
        assert len(rows) == 2
        for r in rows:
            assert float(r["K1_n"]) < 0.0 and float(r["K3_n"]) < 0.0
            assert 0.0 < float(r["inv_kt_I"]) < 1.0
        for name in ("size_effect_amplitudes.svg", "size_effect_j.svg", "size_effect_kt.svg"):
            assert (out / name).is_file()
