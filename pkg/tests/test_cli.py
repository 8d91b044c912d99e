from __future__ import annotations

import json
import subprocess
import sys

import pytest

from lgt_dual.cli import EXIT_CONFIG, EXIT_OK, EXIT_RESIDUAL, load_config, run
from lgt_dual.lab import ConfigError


def test_verify_example(capsys):
    code = run(["verify", "--map", "kw", "--lattice", "square:2x2", "--t", "0.7", "--k", "8",
                "--lambda", "1.3", "--mode", "exhaustive"])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["summary"]["passed"] and report["summary"]["n_branches"] == 16
    assert report["config"]["couplings"]["lambda"] == 1.3


@pytest.mark.parametrize("argv", [
    ["verify", "--map", "kw", "--lattice", "square:2x2", "--t", "bogus"],
    ["verify", "--map", "kw", "--lattice", "square:2x2", "--N", "3"],
    ["verify", "--map", "kw"],
    ["verify", "--config", "/nonexistent/cfg.json"],
    ["frobnicate"],
    [],
    ["noise", "--map", "kw", "--lattice", "cycle:4"],
    ["converge", "--map", "kw", "--lattice", "cycle:3", "--ks", "4,x"],
])
def test_config_errors(argv, capsys):
    assert run(argv) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_residual_violation_exit_code(capsys):
    # a tolerance below the floating-point floor cannot be met
    code = run(["verify", "--map", "kw", "--lattice", "cycle:4", "--t", "0.7",
                "--tolerance", "1e-30"])
    assert code == EXIT_RESIDUAL
    assert "residual check failed" in capsys.readouterr().err


def test_list_models(capsys):
    assert run(["list-models"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7
    for map_id in ("kw", "kw_tri", "kw_zn", "kw_gm", "jw", "fs"):
        assert any(f" {map_id} " in line for line in lines[1:])


class TestLoadConfig:
    def test_minimal_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "cycle:4"}))
        c = load_config(p)
        assert (c.k, c.mode, c.seed) == (8, "exhaustive", 0)

    def test_flags_win(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "cycle:4", "k": 3,
                                 "couplings": {"lambda": 2.0, "h": 0.1}}))
        c = load_config(p, {"k": 5, "couplings": {"lambda": 0.5}})
        assert c.k == 5 and c.couplings["lambda"] == 0.5 and c.couplings["h"] == 0.1

    def test_unknown_key_has_field_message(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "cycle:4", "speed": 3}))
        with pytest.raises(ConfigError, match="speed"):
            load_config(p)

    def test_type_error_names_field(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "cycle:4", "k": "eight"}))
        with pytest.raises(ConfigError, match="^k:"):
            load_config(p)

    def test_qutrit_kw_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "square:2x2", "N": 3}))
        with pytest.raises(ConfigError):
            load_config(p)

    def test_noise_block(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"map": "kw", "lattice": "cycle:4",
                                 "noise": {"p": 0.1, "channel": "z-rotation"}}))
        assert load_config(p).noise.channel == "z-rotation"

    def test_bad_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(p)


def test_output_files_are_byte_identical(tmp_path, capsys):
    out = tmp_path / "a.json"
    blobs = []
    for _ in range(2):
        assert run(["verify", "--map", "kw_zn", "--lattice", "cycle:3", "--mode", "sampled",
                    "--shots", "50", "--seed", "7", "--output", str(out)]) == EXIT_OK
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    assert (tmp_path / "a.meta.json").exists()
    assert "PASS" in capsys.readouterr().out


def test_converge_csv(tmp_path, capsys):
    csv_path = tmp_path / "t.csv"
    assert run(["converge", "--map", "kw", "--lattice", "cycle:3", "--ks", "2,4",
                "--output", str(tmp_path / "t.json"), "--csv", str(csv_path)]) == EXIT_OK
    assert csv_path.read_text().startswith("k,")


def test_noise_and_gauge_check(tmp_path):
    assert run(["noise", "--map", "kw", "--lattice", "cycle:4", "--noise-p", "0.2",
                "--shots", "10", "--output", str(tmp_path / "n.json")]) == EXIT_OK
    assert run(["gauge-check", "--map", "kw", "--lattice", "square:2x2", "--initial", "plus",
                "--output", str(tmp_path / "g.json")]) == EXIT_OK


def test_help_lists_subcommands():
    out = subprocess.run([sys.executable, "-m", "lgt_dual", "--help"],
                         capture_output=True, text=True, check=True).stdout
    for sub in ("verify", "noise", "converge", "gauge-check", "list-models"):
        assert sub in out
    for map_id in ("kw_tri", "kw_zn", "kw_gm", "jw", "fs"):
        assert map_id in out


def test_console_script_help():
    proc = subprocess.run(["lgt-dual", "verify", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "--counter-policy" in proc.stdout and "--noise-p" in proc.stdout
