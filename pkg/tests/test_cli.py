import json
import os

from smelab import cli
from smelab.repro import parse_csv


def _files(dirpath):
    return sorted(os.listdir(dirpath))


def test_no_subcommand_is_usage_error(capsys):
    assert cli.main([]) == 2
    err = capsys.readouterr().err
    assert "a subcommand is required" in err
    assert "usage" in err


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli.main(["frobnicate"]) == 2


def test_bad_config_names_offending_key(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "weak_error",
                               "eta_grid": [0.05, 0.1]}))
    code = cli.main(["weak-error", "--config", str(bad),
                     "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert err.startswith("config error: eta_grid")


def test_missing_config_file(tmp_path, capsys):
    code = cli.main(["weak-error", "--config", str(tmp_path / "absent.json"),
                     "--out", str(tmp_path)])
    assert code == 2
    assert "config: cannot read" in capsys.readouterr().err


def test_config_for_wrong_command(tmp_path, capsys):
    cfg = tmp_path / "div.json"
    cfg.write_text(json.dumps({"experiment": "divergence"}))
    code = cli.main(["weak-error", "--config", str(cfg),
                     "--out", str(tmp_path)])
    assert code == 2
    assert "experiment: config declares" in capsys.readouterr().err


def test_weak_error_deterministic_and_contained(tmp_path, monkeypatch, capsys):
    scratch = tmp_path / "cwd"
    scratch.mkdir()
    monkeypatch.chdir(scratch)
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert cli.main(["weak-error", "--out", str(out1), "--seed", "7"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert sum(1 for l in lines if l.startswith("wrote ")) == 6  # 4 csv + 2 svg
    assert all(l.startswith(("wrote ", "PASS ")) for l in lines)
    assert cli.main(["weak-error", "--out", str(out2), "--seed", "7"]) == 0
    names = _files(out1)
    assert names == _files(out2)
    assert "weak_error_isotropic_shift_order1.csv" in names
    assert "weak_error_eigenbasis_scaled_order1.csv" in names
    for name in names:
        a = (out1 / name).read_bytes()
        assert a == (out2 / name).read_bytes()
    assert _files(scratch) == []              # nothing written outside --out


def test_seed_echoed_into_csv(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["divergence", "--out", str(out), "--seed", "99"]) == 0
    table = parse_csv(str(out / "divergence.csv"))
    assert "seed,99" in table.comments


def test_out_precedence_env_and_flag(tmp_path, monkeypatch):
    env_dir = tmp_path / "env"
    monkeypatch.setenv("SMELAB_OUT", str(env_dir))
    assert cli.main(["divergence"]) == 0
    assert "divergence.csv" in _files(env_dir)
    flag_dir = tmp_path / "flag"
    assert cli.main(["divergence", "--out", str(flag_dir)]) == 0
    assert "divergence.csv" in _files(flag_dir)
    assert _files(env_dir) == ["divergence.csv", "divergence.svg"]


def test_momentum_threads_do_not_change_bytes(tmp_path):
    cfg = tmp_path / "momentum.json"
    cfg.write_text(json.dumps({
        "experiment": "momentum_dynamics", "eigenvalues": [1.0, 0.25],
        "eta_grid": [0.1], "horizon": 6.0, "mu_values": [0.3, 3.0],
        "n_paths": 128, "x0": [30.0, 30.0], "seed": 5}))
    out1 = tmp_path / "t1"
    out4 = tmp_path / "t4"
    assert cli.main(["momentum", "--config", str(cfg), "--out", str(out1),
                     "--threads", "1"]) == 0
    assert cli.main(["momentum", "--config", str(cfg), "--out", str(out4),
                     "--threads", "4"]) == 0
    for name in _files(out1):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()


def test_selftest_passes_and_writes_nothing(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["selftest"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert len(lines) == 6
    assert all(l.startswith("PASS ") for l in lines)
    assert _files(tmp_path) == []
