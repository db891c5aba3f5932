import json

import pytest

from cusplab import cli
from cusplab.config import load_config
from cusplab.errors import ConfigError


def test_missing_seed_is_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("CUSPLAB_SEED", raising=False)
    assert cli.main(["curvature", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "seed" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(env={})


def test_bad_values_are_config_errors(tmp_path):
    assert cli.main(["curvature", "--seed", "1", "--d0", "0.9", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[section]\nseed = 1\n")
    assert cli.main(["curvature", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    with pytest.raises(ConfigError):
        load_config(env={"CUSPLAB_SEED": "x"})
    with pytest.raises(ConfigError):
        load_config(env={"CUSPLAB_BOGUS": "1", "CUSPLAB_SEED": "1"})


def test_layer_precedence(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 1\nr = 5.0\nd0 = 0.05\neps = [0.1, 0.05]\nout = "from-file"\n')
    cfg = load_config(path, env={})
    assert (cfg.seed, cfg.r, cfg.d0, cfg.eps, cfg.out) == (1, 5.0, 0.05, (0.1, 0.05), "from-file")
    cfg = load_config(path, env={"CUSPLAB_R": "6", "CUSPLAB_SEED": "2"})
    assert (cfg.seed, cfg.r, cfg.d0) == (2, 6.0, 0.05)
    cfg = load_config(path, env={"CUSPLAB_R": "6"}, overrides={"r": 7.0, "eps": "0.2,0.1"})
    assert (cfg.r, cfg.eps, cfg.d0) == (7.0, (0.2, 0.1), 0.05)


def test_module_error_exit_code(tmp_path, capsys):
    code = cli.main(["growth-check", "--seed", "1", "--nu", "1.2", "--out", str(tmp_path)])
    assert code == cli.EXIT_ERROR
    assert "BadParameters" in capsys.readouterr().err


def test_run_outputs_are_reproducible(tmp_path, capsys):
    a = tmp_path / "a"
    names = ("curvature.csv", "curvature-report.json")
    assert cli.main(["curvature", "--seed", "3", "--grid", "9", "--out", str(a)]) == cli.EXIT_OK
    first = [(a / n).read_bytes() for n in names]
    assert cli.main(["curvature", "--seed", "3", "--grid", "9", "--out", str(a)]) == cli.EXIT_OK
    assert "C1 PASS" in capsys.readouterr().out
    assert [(a / n).read_bytes() for n in names] == first
    rep = json.loads((a / "curvature-report.json").read_text())
    assert rep["schema_version"] == "1.0" and rep["checks"]["C1"]["verdict"] is True
    assert rep["config"]["seed"] == 3
    tel = json.loads((a / "curvature-telemetry.json").read_text())
    assert tel["schema_version"] == "1.0" and tel["wall_s"] >= 0


def test_csv_format(tmp_path):
    assert cli.main(["curvature", "--seed", "3", "--grid", "5", "--out", str(tmp_path)]) == cli.EXIT_OK
    raw = (tmp_path / "curvature.csv").read_bytes()
    lines = raw.split(b"\r\n")
    assert lines[0] == b"model,r,x,K_kernel,K_fd,K_closed_form,rel_err"
    assert lines[-1] == b"" and b"\n" not in raw.replace(b"\r\n", b"")
    fields = lines[1].split(b",")
    assert fields[0] == b"revolution"
    for f in fields[1:]:
        assert b"%.17g" % float(f) == f
    assert len(lines[2].split(b",")[3].lstrip(b"-").replace(b".", b"")) == 17


def test_parser_lists_subcommands():
    help_text = cli.build_parser().format_help()
    for sub in cli.RUNNERS:
        assert sub in help_text
