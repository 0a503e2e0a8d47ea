import csv
import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from spherewaves import runner
from spherewaves.runner import ConfigError, ExperimentConfig, IncompleteRun, emit_report, load_config, run_experiment


def _cfg(tmp_path, **kw):
    base = dict(kind="reduction", experiment_id="exp", ells=[8, 12], reps=10, output_dir=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(kind="bogus"),
            dict(experiment_id=""),
            dict(experiment_id="a/b"),
            dict(ells=[0]),
            dict(reps=0),
            dict(workers=0),
            dict(rho=2),
            dict(cap={"rule": "power", "c": 1.0, "beta": 1.0}),
            dict(cap={"rule": "power", "c": 1.0, "beta": -0.1}),
            dict(cap={"rule": "power", "c": 0.0, "beta": 0.5}),
            dict(cap={"rule": "fixed", "radii": [0.0]}),
            dict(cap={"rule": "spiral"}),
            dict(kind="nodal-cap"),
        ],
    )
    def test_rejected(self, tmp_path, kw):
        with pytest.raises(ConfigError):
            _cfg(tmp_path, **kw)

    def test_cap_rules(self, tmp_path):
        c = _cfg(tmp_path, cap={"rule": "power", "c": 2.0, "beta": 0.5})
        assert c.radii(100) == [pytest.approx(0.2)]
        assert c.radii(1) == [pytest.approx(2.0)]
        f = _cfg(tmp_path, cap={"rule": "fixed", "radii": [0.5, 0.8]})
        assert f.radii(10) == [0.5, 0.8]

    def test_load(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"kind": "hilb-scan", "experiment_id": "h", "ells": [50, 100]}))
        c = load_config(p, workers=3)
        assert c.workers == 3 and c.ells == [50, 100]
        p.write_text(json.dumps({"kind": "hilb-scan", "experiment_id": "h", "colour": 1}))
        with pytest.raises(ConfigError):
            load_config(p)
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(runner.OUTPUT_ENV, str(tmp_path / "root"))
        c = ExperimentConfig(kind="variance-slope", experiment_id="v", ells=[100])
        assert c.out_dir() == tmp_path / "root" / "v"


class TestRun:
    def test_records(self, tmp_path):
        m = run_experiment(_cfg(tmp_path))
        recs = [json.loads(line) for line in (m.parent / "records.ndjson").read_text().splitlines()]
        assert [r["index"] for r in recs] == list(range(20))
        assert len({r["stream_id"] for r in recs}) == 20
        assert {r["version"] for r in recs} == {runner.build_hash()}
        assert all(r["wall_time"] >= 0 and {"length", "m"} <= set(r["payload"]) for r in recs)
        manifest = json.loads(m.read_text())
        assert manifest["complete"] and manifest["config"]["ells"] == [8, 12]

    def test_csv_full_precision(self, tmp_path):
        m = run_experiment(_cfg(tmp_path))
        recs = [json.loads(line) for line in (m.parent / "records.ndjson").read_text().splitlines()]
        rows = list(csv.DictReader((m.parent / "samples.csv").open()))
        assert [float(r["m"]) for r in rows] == [r["payload"]["m"] for r in recs]

    def test_rerun_is_idempotent(self, tmp_path):
        cfg = _cfg(tmp_path)
        m = run_experiment(cfg)
        before = {p.name: p.read_bytes() for p in m.parent.iterdir()}
        run_experiment(cfg)
        after = {p.name: p.read_bytes() for p in m.parent.iterdir()}
        assert before == after

    def test_worker_count_invariance(self, tmp_path):
        a = run_experiment(_cfg(tmp_path / "a", workers=1))
        b = run_experiment(_cfg(tmp_path / "b", workers=8))
        for name in ("samples.csv", "manifest.json", "config.json"):
            assert (a.parent / name).read_bytes() == (b.parent / name).read_bytes()

    def test_partial_then_resume(self, tmp_path):
        ref = run_experiment(_cfg(tmp_path / "ref"))
        cfg = _cfg(tmp_path / "part")
        m = run_experiment(cfg, max_new_records=7)
        assert not json.loads(m.read_text())["complete"]
        with pytest.raises(IncompleteRun, match="resume"):
            emit_report(m)
        # a torn final line, as left by a crash mid-write
        with (m.parent / "records.ndjson").open("a") as fh:
            fh.write('{"experiment": "exp", "ind')
        run_experiment(cfg)
        assert (m.parent / "samples.csv").read_bytes() == (ref.parent / "samples.csv").read_bytes()

    def test_sigkill_and_resume(self, tmp_path):
        conf = {"kind": "nodal-mean", "experiment_id": "killed", "ells": [60], "reps": 400}
        (tmp_path / "c.json").write_text(json.dumps(conf))
        ref_root, run_root = tmp_path / "ref", tmp_path / "run"
        run_experiment(load_config(tmp_path / "c.json", output_dir=str(ref_root)))
        proc = subprocess.Popen([sys.executable, "-m", "spherewaves", "run", "--config", str(tmp_path / "c.json"), "--output", str(run_root)])
        rec = run_root / "killed" / "records.ndjson"
        deadline = time.time() + 60
        while time.time() < deadline and (not rec.exists() or rec.read_text().count("\n") < 20):
            time.sleep(0.01)
        proc.send_signal(signal.SIGKILL)
        proc.wait()
        done = rec.read_text().count("\n")
        assert 0 < done < 400
        run_experiment(load_config(tmp_path / "c.json", output_dir=str(run_root)))
        assert (run_root / "killed" / "samples.csv").read_bytes() == (ref_root / "killed" / "samples.csv").read_bytes()

    def test_hash_mismatch_refused(self, tmp_path):
        cfg = _cfg(tmp_path)
        m = run_experiment(cfg, max_new_records=3)
        path = m.parent / "records.ndjson"
        path.write_text(path.read_text().replace(runner.build_hash(), "0" * 16))
        with pytest.raises(IncompleteRun, match="force"):
            run_experiment(cfg)
        m = run_experiment(cfg, force=True)
        with pytest.raises(IncompleteRun, match="force"):
            emit_report(m)
        assert emit_report(m, force=True)["experiment_id"] == "exp"

    def test_changed_config_refused(self, tmp_path):
        run_experiment(_cfg(tmp_path, reps=3))
        with pytest.raises(ConfigError):
            run_experiment(_cfg(tmp_path, reps=4, master_seed=9))


class TestReport:
    KEYS = {"experiment_id", "kind", "version", "passed", "rows", "checks", "plot"}

    def test_variance_slope_csv(self, tmp_path):
        m = run_experiment(ExperimentConfig(kind="variance-slope", experiment_id="vs", ells=[100 * 2**k for k in range(4)], output_dir=str(tmp_path)))
        rep = emit_report(m)
        assert set(rep) == self.KEYS and rep["passed"]
        rows = list(csv.reader((m.parent / "variance_slope.csv").open()))
        assert rows[0] == ["ell", "oracle_variance", "reference_one_thirtysecond_log_ell"]
        assert len(rows) == 5

    def test_mdp_diag_csv(self, tmp_path):
        m = run_experiment(ExperimentConfig(kind="mdp-diag", experiment_id="md", ells=[20], reps=300, output_dir=str(tmp_path)))
        rep = emit_report(m)
        header = next(csv.reader((m.parent / "mdp_curve_ell20.csv").open()))
        assert header == ["x", "rate", "ci_lo", "ci_hi", "half_x_squared"]
        assert {c["name"].split(" ")[0] for c in rep["checks"]} == {"right", "left"}

    def test_empty_experiment(self, tmp_path):
        m = run_experiment(ExperimentConfig(kind="nodal-mean", experiment_id="empty", ells=[], output_dir=str(tmp_path)))
        rep = emit_report(m)
        assert set(rep) == self.KEYS
        assert rep["rows"] == [] and rep["checks"] == [] and rep["passed"] is True
        assert json.loads((m.parent / "summary.json").read_text()) == rep

    def test_summary_checks(self, tmp_path):
        m = run_experiment(ExperimentConfig(kind="nodal-mean", experiment_id="nm", ells=[10], reps=60, output_dir=str(tmp_path)))
        rep = emit_report(m)
        row = rep["rows"][0]
        assert {"mean", "se", "expected", "rel_err"} <= set(row)
        assert rep["checks"][0]["passed"] == (abs(row["mean"] - row["expected"]) <= row["band"])

    def test_hilb_and_calibration(self, tmp_path):
        h = emit_report(run_experiment(ExperimentConfig(kind="hilb-scan", experiment_id="h", ells=[50, 100, 200], output_dir=str(tmp_path))))
        assert h["passed"]
        c = emit_report(run_experiment(ExperimentConfig(kind="calibration", experiment_id="c", params={"sim_reps": 20_000}, output_dir=str(tmp_path))))
        names = [k["name"] for k in c["checks"]]
        assert any("gaussian" in n for n in names) and any("rate at x=1" in n for n in names)
        header = next(csv.reader((Path(tmp_path) / "c" / "mdp_curve.csv").open()))
        assert header == ["x", "rate", "ci_lo", "ci_hi", "half_x_squared"]
