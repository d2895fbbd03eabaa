import json

import pytest

from heisenlab.cli import main

WEYL_SMALL = {"grids": [64, 128, 256], "k_max": 2}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_kmax_out_of_range_exits_1(tmp_path, capsys):
    assert main(["classify", "--config", write(tmp_path, {"k_max": 5}), "--out", str(tmp_path / "o")]) == 1
    assert "k_max" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_usage_errors_exit_1(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    assert main(["weyl-audit", "--jobs", "0", "--out", str(tmp_path)]) == 1
    assert main(["weyl-audit", "--config", str(tmp_path / "missing.json")]) == 1


def test_weyl_audit_jobs_and_cache_are_invisible(tmp_path, capsys):
    cfg = write(tmp_path, WEYL_SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["weyl-audit", "--config", cfg, "--out", str(a), "--no-cache"]) == 0
    assert main(["weyl-audit", "--config", cfg, "--out", str(b), "--jobs", "2"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert not (a / "cache").exists()
    # second run in b is served from the cache and writes the same bytes
    assert main(["weyl-audit", "--config", cfg, "--out", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    meta = json.loads((b / "metadata.json").read_text())
    assert meta["cache"]["misses"] == 0 and meta["cache"]["hits"] > 0
    report = json.loads((a / "report.json").read_text())
    assert report["audit"]["passed"] and report["exit_status"] == 0
    assert report["thresholds"]["bounded"] == 0.1
    assert sorted(report["results"]["weyl"]["correspondence"]) == [
        "chirp(rate=0.25)", "constant(value=1)", "separable_trig(amplitude=1)"]
    assert (a / "summary.csv").read_text().startswith("family,pipeline,q,order,verdict,expected,match")
    assert any(p.name.startswith("chirp") for p in (a / "curves").iterdir())
    assert "passed" in capsys.readouterr().out


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HEISENLAB_OUT", str(tmp_path / "env"))
    cfg = write(tmp_path, {**WEYL_SMALL, "families": ["constant"], "out": str(tmp_path / "cfg")})
    assert main(["weyl-audit", "--config", cfg]) == 0
    assert (tmp_path / "env" / "report.json").exists()
    assert not (tmp_path / "cfg").exists()


def test_failed_check_exits_2(tmp_path):
    # the chirp's smoothed family keeps growing on coarse grids
    cfg = write(tmp_path, {"families": ["chirp"], "grids": {"garding": [64, 128, 256]}, "k_max": 1,
                           "widths": [0.5, 0.25]})
    assert main(["garding", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["audit"]["failed_checks"][0]["check"] == "garding"


@pytest.mark.slow
def test_counterexamples_defaults(tmp_path):
    out = tmp_path / "cx"
    assert main(["counterexamples", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    records = {(c["family"], c["q"], c["record"]) for c in report["audit"]["confirmations"]}
    assert ("triangle_wave(period=1,slope=1)", "inf", "C1 pass, Y1(norm) fail") in records
    assert ("holder_half(period=1)", "inf", "Y0 pass, C1 fail") in records
    assert report["audit"]["violations"] == []
    assert report["open_questions"][0]["id"] == "holder-witness"
