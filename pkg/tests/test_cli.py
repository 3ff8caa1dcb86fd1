import json

import pytest

from eegarm import cli
from eegarm.labels import ActionLabel


def yaml_file(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


@pytest.fixture(scope="module")
def model_path(trained_model, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.bin"
    trained_model[0].save(path)
    return str(path)


@pytest.fixture(scope="module")
def data_dir(offline_files):
    return str(next(iter(offline_files)).parent)


def test_help_and_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--help"])
    assert exc.value.code == 0
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == cli.EXIT_USAGE


def test_bad_config_exit_3(tmp_path):
    cfg = yaml_file(tmp_path, "dataset: {win_size: 1}\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_missing_data_exit_4(tmp_path):
    assert cli.main(["train", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")]) == cli.EXIT_IO


def test_bad_model_file_exit_4(tmp_path, data_dir):
    bogus = tmp_path / "model.bin"
    bogus.write_bytes(b"not a model")
    assert cli.main(["eval", str(bogus), data_dir, "--out", str(tmp_path / "o")]) == cli.EXIT_IO


def test_malformed_csv_exit_4(tmp_path):
    for lab in ActionLabel:
        (tmp_path / f"{lab.file_stem}.csv").write_text("garbage\n1,2,3\n")
    assert cli.main(["train", str(tmp_path), "--out", str(tmp_path / "o")]) == cli.EXIT_IO


def test_bad_event_log_exit_4(tmp_path):
    log = tmp_path / "events.jsonl"
    log.write_text("{not json}\n")
    assert cli.main(["replay", str(log), "--out", str(tmp_path / "o")]) == cli.EXIT_IO


def test_transport_failure_exit_5(tmp_path, model_path):
    cfg = yaml_file(tmp_path, "transport: {host: 256.0.0.1}\n")
    assert cli.main(["run", model_path, "--config", cfg, "--duration", "5",
                     "--out", str(tmp_path / "o")]) == cli.EXIT_TRANSPORT


def test_too_little_data_exit_6(tmp_path, offline_files):
    # a few rows per action: too short for even one window per split
    for path, lab in offline_files.items():
        lines = path.read_text().splitlines()
        (tmp_path / path.name).write_text("\n".join(lines[:30]) + "\n")
    assert cli.main(["train", str(tmp_path), "--out", str(tmp_path / "o")]) == cli.EXIT_TRAINING


def test_eval_writes_report_and_manifest(tmp_path, model_path, data_dir, capsys):
    out = tmp_path / "eval"
    assert cli.main(["eval", model_path, data_dir, "--out", str(out)]) == cli.EXIT_OK
    assert "Precision" in capsys.readouterr().out
    rep = json.loads((out / "report.json").read_text())
    assert rep["accuracy"] >= 0.9
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "eval" and len(manifest["inputs"]) == 4
    assert all(len(v) == 64 for v in manifest["inputs"].values())


def test_sweep_writes_table(tmp_path, capsys):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--out", str(out)]) == cli.EXIT_OK
    lines = (out / "threshold_sweep.csv").read_text().splitlines()
    assert len(lines) == 5 and "threshold" in lines[0]
    assert "handshake" in capsys.readouterr().out


def test_short_run_then_replay(tmp_path, model_path, capsys):
    cfg = yaml_file(tmp_path, "run: {segment: 12.0}\neeg: {noise: {white_sigma: 0.0, mains_amp: 0.0}}\n")
    out = tmp_path / "run"
    assert cli.main(["run", model_path, "--config", cfg, "--duration", "36", "--speed", "20",
                     "--out", str(out)]) == cli.EXIT_OK
    session = json.loads((out / "session.json").read_text())
    assert all(r >= 0.9 for r in session["online_success"].values())
    assert session["udp"]["gaps"] == 0
    rep = tmp_path / "replay"
    assert cli.main(["replay", str(out / "actuator_events.jsonl"), "--plot", "--out", str(rep)]) == cli.EXIT_OK
    assert (rep / "joints.csv").exists() and (rep / "transitions.csv").exists()
    assert (rep / "joints.png").stat().st_size > 0
    assert (rep / "manifest.json").exists()
