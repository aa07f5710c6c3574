import json

import pytest

from tracelab.cli import EXIT_OK, EXIT_REGRESSION, EXIT_USAGE, main

IDM = [[1, 0], [0, 1]]


def _suite(tmp_path):
    data = {
        "primes": [101, 103],
        "patterns": [
            {"id": "kl2-pair", "trace": {"kind": "kloosterman", "r": 2}, "gammas": [IDM, IDM], "profile": "sp:2"},
            {"id": "kl2-normal", "trace": {"kind": "kloosterman", "r": 2}, "gammas": [IDM, [[2, 0], [0, 1]]]},
        ],
        "output": str(tmp_path / "report.csv"),
        "threads": 2,
        "frozen_constants": str(tmp_path / "frozen.json"),
    }
    path = tmp_path / "suite.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_mult(capsys):
    assert main(["mult", "sp", "2", "4", "0"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "2"
    assert main(["mult", "sl", "3", "3", "3"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "6"


def test_classify(capsys):
    code = main(["classify", "--p", "101", "--profile", "sp:2", "--gammas", "[[1,0],[0,1]],[[1,0],[0,1]]"])
    assert code == EXIT_OK
    assert capsys.readouterr().out.strip() == "MainTerm m=1"
    code = main(["classify", "--profile", "sp:2", "--gammas", "[[1,0],[0,1]],[[2,0],[0,1]]", "--json"])
    assert code == EXIT_OK
    assert json.loads(capsys.readouterr().out)["kind"] == "Cancellation"


def test_classify_hyp(capsys):
    assert main(["classify-hyp", "--p", "101", "--chi", "7", "57"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["kummer_d"] == [2]
    assert out["g0_candidates"] == []


def test_context_and_kloos(capsys, tmp_path):
    assert main(["context", "101"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["p"] == 101 and out["order"] == 100
    csv_path = tmp_path / "kl2.csv"
    assert main(["kloos", "--p", "13", "--r", "2", "--x", "1", "--csv", str(csv_path)]) == EXIT_OK
    assert capsys.readouterr().out.strip().endswith("i")
    assert len(csv_path.read_text(encoding="utf-8").splitlines()) == 14


def test_sumprod(capsys):
    code = main(["sumprod", "--p", "101", "--r", "2", "--gammas", "[[1,0],[0,1]],[[1,0],[0,1]]"])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["prediction"]["kind"] == "MainTerm"
    assert out["re"] == pytest.approx((101 * 101 - 101 - 1) / 101, abs=1e-8)
    assert out["residual"] < 1


def test_scan(capsys):
    assert main(["scan", "--p", "31", "--r", "2", "--k", "2", "--show", "3"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["count"] == 30
    assert out["total"] == 900
    assert len(out["witnesses"]) == 1


def test_usage_errors(capsys, tmp_path):
    assert main(["verify", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main(["context", "100"]) == EXIT_USAGE
    assert main(["classify", "--profile", "sp:3", "--gammas", "[[1,0],[0,1]]"]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text('{"primes": [91], "patterns": []}', encoding="utf-8")
    assert main(["verify", "--config", str(bad)]) == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_config_from_environment(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("TRACELAB_CONFIG", str(_suite(tmp_path)))
    assert main(["verify"]) == EXIT_OK
    assert (tmp_path / "report.csv").exists()


@pytest.mark.slow
def test_verify_is_deterministic(tmp_path, capsys):
    config = _suite(tmp_path)
    report = tmp_path / "report.csv"
    assert main(["verify", "--config", str(config)]) == EXIT_OK
    first = report.read_bytes()
    assert main(["verify", "--config", str(config), "--threads", "1"]) == EXIT_OK
    assert report.read_bytes() == first
    lines = first.decode().splitlines()
    assert lines[0] == "p,pattern,kind,m,re,im,residual"
    assert [line.split(",")[:4] for line in lines[1:]] == [
        ["101", "kl2-normal", "Cancellation", ""],
        ["101", "kl2-pair", "MainTerm", "1"],
        ["103", "kl2-normal", "Cancellation", ""],
        ["103", "kl2-pair", "MainTerm", "1"],
    ]


@pytest.mark.slow
def test_frozen_constants_round_trip(tmp_path, capsys):
    config = _suite(tmp_path)
    frozen = tmp_path / "frozen.json"
    assert main(["verify", "--config", str(config), "--freeze"]) == EXIT_OK
    assert set(json.loads(frozen.read_text(encoding="utf-8"))) == {"kl2-pair", "kl2-normal"}
    capsys.readouterr()
    assert main(["verify", "--config", str(config)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["kl2-pair"]["within"] is True
    assert summary["kl2-normal"]["rows"] == 2

    values = json.loads(frozen.read_text(encoding="utf-8"))
    values["kl2-pair"] = 1e-6
    frozen.write_text(json.dumps(values), encoding="utf-8")
    assert main(["verify", "--config", str(config)]) == EXIT_REGRESSION
    assert "kl2-pair" in capsys.readouterr().err


def test_scan_prints_witnesses(capsys):
    assert main(["scan", "--p", "101", "--r", "3", "--k", "2"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["count"] == 100
    assert out["witnesses"][0][0] == [1, 100]
