import json
import subprocess
import sys

import pytest

from eepeval import io
from eepeval.cli import main


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "300", "--seed", "3", "--out", str(d)]) == 0
    return d


def test_synth_writes_events(workdir):
    eps = io.parse_event_file(workdir / "events.jsonl")
    assert len(eps) == 300


def test_validate(workdir, capsys):
    assert main(["validate", str(workdir / "events.jsonl")]) == 0
    assert "300 episodes" in capsys.readouterr().out


def test_stagewise_equals_run(workdir, tmp_path):
    ev = str(workdir / "events.jsonl")
    s, r = tmp_path / "stages", tmp_path / "run"
    common = ["--seed", "9", "--b", "0.5", "--b", "2", "--tau", "0.4"]
    assert main(["label", ev, "--out", str(s), *common]) == 0
    assert main(["sample", ev, "--out", str(s), *common]) == 0
    assert main(["score", ev, "--instances", str(s / "instances.jsonl"), "--scorer", "noisy:0.1",
                 "--out", str(s), *common]) == 0
    assert main(["evaluate", "--instances", str(s / "instances.jsonl"), "--trajectories",
                 str(s / "trajectories.jsonl"), "--out", str(s), *common]) == 0
    assert main(["report", "--rows", str(s / "rows.jsonl"), "--out", str(s), *common]) == 0
    assert main(["run", ev, "--scorer", "noisy:0.1", "--out", str(r), *common]) == 0
    for name in ("labels.jsonl", "instances.jsonl", "trajectories.jsonl", "rows.jsonl", "report.json", "report.txt"):
        assert (s / name).read_bytes() == (r / name).read_bytes(), name
    report = json.loads((r / "report.json").read_text())
    assert [a["b"] for a in report["aggregate"]] == [0.5, 2.0]


def test_config_file_and_flag_precedence(workdir, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[run]\nevents = {workdir / 'events.jsonl'}\nfolds = 3\nseed = 1\nscorer = constant:0.5\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    rows = io.read_rows(tmp_path / "a/rows.jsonl")
    assert {r.fold for r in rows} == {0, 1, 2}
    assert all(r.auroc == 0.5 for r in rows)
    assert main(["run", "--config", str(cfg), "--folds", "4", "--out", str(tmp_path / "b")]) == 0
    assert {r.fold for r in io.read_rows(tmp_path / "b/rows.jsonl")} == {0, 1, 2, 3}


def test_errors_give_nonzero_exit(workdir, tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.jsonl")]) == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"episode_id": "a", "modality": "lab", "value": 1, "t_hours": -2}\n')
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "[parse]" in err and "line 1" in err
    assert main(["run", "--out", str(tmp_path / "o")]) == 1
    assert main(["run", str(workdir / "events.jsonl"), "--task", "nope", "--out", str(tmp_path / "o")]) == 1
    assert main(["run", str(workdir / "events.jsonl"), "--folds", "1", "--out", str(tmp_path / "o")]) == 1


def test_console_script(workdir, tmp_path):
    out = subprocess.run([sys.executable, "-m", "eepeval.cli", "run", str(workdir / "events.jsonl"),
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert "task: generic" in out.stdout
