from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from instances import SIX_M, example1, six_student
from smartlottery.cli import main
from smartlottery.instance_gen import RawRecord, write_records
from smartlottery.io import load_instance, load_random_matching, save_instance
from smartlottery.market import average_rank

FIXTURE = str(Path(__file__).parent / "fixtures" / "example1.json")


def test_gen_and_ingest(tmp_path, capsys):
    out = tmp_path / "g.json"
    assert main(["gen", "--n", "10", "--m", "3", "--alpha", "0.4", "--seed", "2", "--out", str(out)]) == 0
    inst = load_instance(out)
    assert inst.n_students == 10 and len(inst.schools) == 3
    recs = tmp_path / "r.csv"
    write_records([RawRecord("a", ("x", "y"), frozenset({"y"})), RawRecord("b", ("y", "x"))], recs)
    out2 = tmp_path / "e.json"
    assert main(["ingest", "--records", str(recs), "--sib", "sib", "--dist", "dist3", "--out", str(out2)]) == 0
    assert load_instance(out2).priorities["y"] == (("a",), ("b",))


def test_da_sample_exact(tmp_path):
    assert main(["da-sample", "--instance", FIXTURE, "--exact", "--out", str(tmp_path)]) == 0
    p = load_random_matching(tmp_path / "random_matching.json")
    assert average_rank(example1(), p) == pytest.approx(13 / 8)
    doc = json.loads((tmp_path / "distribution.json").read_text())
    assert len(doc["support"]) == 6 and doc["provenance"]["kind"] == "exact"


def test_pirmes_bundle(tmp_path):
    code = main(["pirmes", "--instance", FIXTURE, "--base", "da", "--exact", "--pricing", "enumerate",
                 "--draw", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["status"] == "optimal"
    assert summary["average_rank"] == pytest.approx(1.5)
    assert summary["drawn"]
    for name in ("q.json", "base.json", "decomposition.json", "duals.json", "iterations.json"):
        assert (tmp_path / name).exists()


def test_pirmes_from_file_base(tmp_path):
    main(["da-sample", "--instance", FIXTURE, "--exact", "--out", str(tmp_path / "d")])
    code = main(["pirmes", "--instance", FIXTURE, "--base", f"file:{tmp_path / 'd' / 'random_matching.json'}",
                 "--variant", "A", "--lp-backend", "simplex", "--out", str(tmp_path / "o")])
    assert code == 0
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["average_rank"] == pytest.approx(1.5)


def test_oracle_checks(tmp_path, capsys):
    assert main(["oracle", "--instance", FIXTURE, "--check", "enumerate"]) == 0
    assert capsys.readouterr().out.startswith("8 weakly stable matchings")
    main(["da-sample", "--instance", FIXTURE, "--exact", "--out", str(tmp_path)])
    p = str(tmp_path / "random_matching.json")
    assert main(["oracle", "--instance", FIXTURE, "--check", "ex-post", "--p", p]) == 0
    assert main(["oracle", "--instance", FIXTURE, "--check", "csd-eff", "--p", p]) == 1
    assert "constrained-sd-efficient: False" in capsys.readouterr().out


def test_ee_trace(tmp_path, capsys):
    inst_path = tmp_path / "six.json"
    save_instance(six_student(), inst_path)
    mpath = tmp_path / "m.json"
    mpath.write_text(json.dumps(dict(SIX_M)))
    assert main(["ee", "--instance", str(inst_path), "--matching", str(mpath)]) == 0
    out = capsys.readouterr().out
    assert "step 1" in out and "average rank 7/6" in out


def test_method_command(capsys):
    assert main(["method", "--instance", FIXTURE, "--method", "DA-PIRMES-CG", "--exact"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["average_rank"] == pytest.approx(1.5)


def test_experiment_command(tmp_path):
    code = main(["experiment", "--grid", "8:2:0/0.8:0.2", "--methods", "DA,EE,DA-PIRMES-heur",
                 "--seeds", "0-1", "--samples", "20", "--out", str(tmp_path)])
    assert code == 0
    assert len((tmp_path / "results.tsv").read_text().splitlines()) == 7
    assert "DA-PIRMES-heur" in (tmp_path / "summary.txt").read_text()


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["pirmes", "--instance", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["oracle", "--instance", FIXTURE, "--check", "ex-post"]) == 1
    assert main(["experiment", "--grid", "8:2:0", "--out", str(tmp_path)]) == 1


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "smartlottery", "oracle", "--instance", FIXTURE,
                          "--check", "enumerate"], capture_output=True, text=True)
    assert res.returncode == 0 and "8 weakly stable" in res.stdout
