import json
from pathlib import Path

import pytest

from sclag import cli

JOBS = Path(__file__).resolve().parents[1] / "jobs"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(out_dir: Path) -> dict:
    return json.loads((out_dir / "report.json").read_text())


def test_empty_job_list(tmp_path, capsys):
    code, _, _ = run(capsys, "run", str(JOBS / "empty.json"), "--out", str(tmp_path))
    assert code == 0
    assert report(tmp_path)["jobs"] == []


def test_malformed_expression_reports_column(tmp_path, capsys):
    code, _, err = run(capsys, "run", str(JOBS / "malformed.json"), "--out", str(tmp_path))
    assert code == 2
    assert "column 7" in err


@pytest.mark.parametrize("text", ['{"jobs": [{"id": "x"}]}', "not json", '{"jobs": [{"id": "a", "command": "nope"}]}'])
def test_schema_errors(tmp_path, capsys, text):
    path = tmp_path / "job.json"
    path.write_text(text)
    code, _, err = run(capsys, "run", str(path), "--out", str(tmp_path / "out"))
    assert code == 2 and err.startswith("sclag:")


def test_conormal_golden(tmp_path, capsys):
    code, out, _ = run(capsys, "run", str(JOBS / "conormal.json"), "--out", str(tmp_path))
    assert code == 0
    assert "conormal_k1_d2: lagrangian-sample PASS" in out
    res = report(tmp_path)["jobs"][0]["result"]
    assert max(res["closed_form_distance"].values()) <= 1e-8
    assert max(res["legendrian"]["worst"].values()) <= 1e-8
    assert (tmp_path / "conormal_k1_d2.lambda.csv").read_bytes().startswith(b"face,rho_x")
    assert (tmp_path / "conormal_k1_d2.lambda.png").read_bytes()[:4] == b"\x89PNG"


def test_csv_line_endings(tmp_path, capsys):
    run(capsys, "run", str(JOBS / "conormal.json"), "--out", str(tmp_path), "--no-figures")
    raw = (tmp_path / "conormal_k1_d2.lambda.csv").read_bytes()
    assert raw.count(b"\r\n") == raw.count(b"\n") > 1
    assert not list(tmp_path.glob("*.png"))


def test_reports_are_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    run(capsys, "run", str(JOBS / "misc.json"), "--out", str(a))
    run(capsys, "run", str(JOBS / "misc.json"), "--out", str(b))
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    for png in a.glob("*.png"):
        assert png.read_bytes() == (b / png.name).read_bytes()


def test_misc_jobs(tmp_path, capsys):
    code, out, _ = run(capsys, "run", str(JOBS / "misc.json"), "--out", str(tmp_path))
    assert code == 0, out
    jobs = {j["id"]: j for j in report(tmp_path)["jobs"]}
    assert set(jobs) == {"validate_xt", "critical_xt", "excess_one", "symbol_xt", "fourier_gauss"}
    assert all(j["passes"] for j in jobs.values())
    assert (tmp_path / "fourier_gauss.eps.csv").exists()


def test_equivalence_headlines(tmp_path, capsys):
    code, out, _ = run(capsys, "run", str(JOBS / "equiv.json"), "--out", str(tmp_path), "--no-figures")
    assert code == 0
    assert "scaled_fiber: equivalent: true" in out
    assert "opposite_lifts: equivalent: false" in out


def test_coherence_job(tmp_path, capsys):
    code, out, _ = run(capsys, "run", str(JOBS / "coherence.json"), "--out", str(tmp_path))
    assert code == 0 and "PASS" in out
    assert list(tmp_path.glob("*.symbols.csv"))


def test_wf_job(tmp_path, capsys):
    code, _, _ = run(capsys, "run", str(JOBS / "wf.json"), "--out", str(tmp_path))
    assert code == 0
    res = report(tmp_path)["jobs"][0]["result"]
    verdicts = [p["verdict"] for p in res["probes"]]
    assert verdicts == ["singular", "regular", "singular", "regular"]
    assert (tmp_path / "wf_line.decay.png").exists()


def test_computation_error_exit_code(tmp_path, capsys):
    path = tmp_path / "rf.json"
    path.write_text(json.dumps({"jobs": [
        {"id": "rf_bad", "command": "reduce-fiber", "space": {"d": 1, "s": 1},
         "phase": "x1*t1+t1^2*jbt()^-1", "config": {"face": "interior"}}]}))
    code, out, _ = run(capsys, "run", str(path), "--out", str(tmp_path / "o"))
    assert code == 3
    assert "rf_bad: error:" in out
    assert report(tmp_path / "o")["jobs"][0]["error"]["kind"] == "computation"


def test_expect_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps({"id": "c", "command": "critical", "space": {"d": 2, "s": 1},
                                "phase": "x1*t1", "config": {"count": 4}, "expect": {"excess": 1}}))
    code, out, _ = run(capsys, "critical", str(path), "--out", str(tmp_path / "o"))
    assert code == 1 and "c: critical FAIL" in out


def test_seed_recorded(tmp_path, capsys):
    run(capsys, "run", str(JOBS / "empty.json"), "--out", str(tmp_path), "--seed", "7")
    prov = report(tmp_path)["provenance"]
    assert prov["seed"] == 7 and len(prov["config_hash"]) == 64


def test_matches_helper():
    assert cli.matches(1.0 + 1e-9, 1.0, 1e-6)
    assert not cli.matches(1.1, 1.0, 1e-6)
    assert cli.matches(3, {"min": 2, "max": 4}, 0)
    assert cli.matches([1, 2], [1, 2], 0)
    assert not cli.matches(True, 1, 0)
