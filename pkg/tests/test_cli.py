import json

import yaml

from dsknn.cli import main
from dsknn.data import ingest_csv
from dsknn.harness import ExperimentReport

SMALL = {
    "datasets": [{"name": "moons", "synthetic": "moons", "n": 100, "noise": 0.3, "seed": 1},
                 {"name": "xor", "synthetic": "xor", "n": 100, "noise": 1.5, "seed": 2}],
    "techniques": ["ola", "knora-u"],
    "baselines": [7],
    "pool_size": 4,
    "replications": 2,
    "epochs": 10,
}


def _json_line(text):
    return json.loads(text.strip().splitlines()[-1])


def test_generate(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert main(["generate", "moons", "--n", "50", "--out", str(out)]) == 0
    assert _json_line(capsys.readouterr().out)["n"] == 50
    ds = ingest_csv(out)
    assert ds.n_samples == 50 and ds.class_count == 2


def test_hardness_to_file(tmp_path, capsys):
    out = tmp_path / "h.csv"
    assert main(["hardness", "--synthetic", "banana", "--n", "80", "-k", "5", "--out", str(out)]) == 0
    summary = _json_line(capsys.readouterr().out)
    assert summary["K"] == 5 and sum(summary["bin_counts"]) == 80
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "index,label,disagreeing,kdn" and len(rows) == 81


def test_hardness_stdout(tmp_path, capsys):
    src = tmp_path / "b.csv"
    main(["generate", "circles", "--n", "30", "--out", str(src)])
    capsys.readouterr()
    assert main(["hardness", str(src)]) == 0
    cap = capsys.readouterr()
    assert len(cap.out.strip().splitlines()) == 31
    assert _json_line(cap.err)["n"] == 30


def test_run_and_compare(tmp_path, capsys):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump(SMALL))
    assert main(["run", str(cfg), "--out", str(tmp_path / "a"), "--format", "json", "markdown"]) == 0
    status = _json_line(capsys.readouterr().out)
    assert status["status"] == "ok" and len(status["files"]) == 2
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--format", "json", "--seed", "5"]) == 0
    capsys.readouterr()
    rep = ExperimentReport.load(tmp_path / "a" / "report.json")
    assert rep.datasets == ["moons", "xor"]
    assert main(["compare", str(tmp_path / "a" / "report.json"), str(tmp_path / "b" / "report.json"),
                 "--technique-a", "knora-u", "--technique-b", "7nn"]) == 0
    res = _json_line(capsys.readouterr().out)
    assert res["wins"] + res["ties"] + res["losses"] == 2
    assert set(res["reject_equivalence"]) == {"0.1", "0.05", "0.01"}


def test_run_env_output(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "exp.yaml"
    cfg.write_text(yaml.safe_dump(dict(SMALL, replications=1)))
    monkeypatch.setenv("DSKNN_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", str(cfg), "--format", "csv"]) == 0
    assert (tmp_path / "env" / "accuracy.csv").exists()


def test_error_exit_code(tmp_path, capsys):
    assert main(["hardness", str(tmp_path / "nope.csv")]) == 1
    err = _json_line(capsys.readouterr().err)
    assert err["status"] == "error" and err["message"]
    bad = tmp_path / "bad.yaml"
    bad.write_text("techniques: [wizardry]\n")
    assert main(["run", str(bad)]) == 1
