from __future__ import annotations

import json
import subprocess
import sys

import pytest

from delta_lab.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def run_exit(argv, capsys):
    """main() for argv that argparse rejects."""
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return exc.value.code, capsys.readouterr().err


class TestUsage:
    @pytest.mark.parametrize("q", ["4", "3", "x", "1001"])
    def test_bad_q(self, q, capsys):
        code, err = run_exit(["verify-charsum", "--q", q], capsys)
        assert code == 2
        assert "q must be prime > 3" in err

    def test_amplifier_divides_level(self, capsys):
        code, _, err = run(["verify-pipeline", "--q", "11", "--N", "40", "--L", "3,11"], capsys)
        assert code == 2
        assert "amplifier prime divides level" in err

    def test_list_with_spaces(self, capsys):
        code, err = run_exit(["census", "--q", "101", "--N", "400", "--L", "2, 3", "--P", "5,7"], capsys)
        assert code == 2

    def test_missing_config(self, tmp_path, capsys):
        code, err = run_exit(["verify-delta", "--config", str(tmp_path / "none.cfg")], capsys)
        assert code == 2 and "file not found" in err

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("q=101\nbogus=1\n")
        code, err = run_exit(["census", "--config", str(cfg)], capsys)
        assert code == 2 and "bogus" in err

    def test_version(self, capsys):
        code, _ = run_exit(["--version"], capsys)
        assert code == 0


class TestCommands:
    def test_verify_delta(self, capsys):
        code, out, _ = run(["verify-delta", "--q-max", "101", "--threads", "1"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["command"] == "verify-delta" and doc["seed"] == 0
        assert doc["config"]["q_max"] == 101

    def test_verify_charsum(self, capsys):
        code, out, _ = run(["verify-charsum", "--q", "7", "--exhaustive"], capsys)
        assert code == 0

    def test_census_in_window(self, capsys):
        code, out, _ = run(["census", "--q", "101", "--N", "400", "--L", "2,3", "--P", "5,7"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert all(f["counterexample_count"] == 0 for f in doc["families"])

    def test_census_outside_window_is_finding(self, capsys):
        code, out, _ = run(["census", "--q", "101", "--N", "1500", "--L", "3,5", "--P", "193,197", "--family", "S10"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["families"][0]["counterexample_count"] > 0 and not doc["families"][0]["in_window"]

    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "census.cfg"
        cfg.write_text("# census\nq=101\nN=400\nL=2,3\nP=5,7\nfamily=S11\n")
        code, out, _ = run(["census", "--config", str(cfg)], capsys)
        assert code == 0
        assert [f["family"] for f in json.loads(out)["families"]] == ["S11"]
        code, out, _ = run(["census", "--config", str(cfg), "--family", "D11"], capsys)
        assert [f["family"] for f in json.loads(out)["families"]] == ["D11"]

    def test_byte_identical_out(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["verify-pipeline", "--q", "11", "--N", "1.7", "--L", "2", "--P", "5", "--threads", "1"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()
        doc = json.loads(a.read_text())
        assert doc["transcript"]["passed"]
        assert doc["version"] and doc["config"]["q"] == 11

    def test_pretty(self, capsys):
        code, out, _ = run(["verify-pipeline", "--q", "11", "--N", "1.7", "--L", "2", "--P", "5", "--pretty"], capsys)
        assert code == 0 and "exact_chain" in out
        with pytest.raises(json.JSONDecodeError):
            json.loads(out)

    def test_compute_l(self, capsys):
        code, out, _ = run(["compute-l", "--q", "11"], capsys)
        assert code == 0
        assert len(json.loads(out)["values"]) == 9
        code, _, err = run(["compute-l", "--q", "11", "--chi", "0"], capsys)
        assert code == 2 and "primitive" in err

    def test_lstudy(self, tmp_path, level_files, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(["lstudy", "--levels", ",".join(str(level_files[q]) for q in (11, 17, 19)), "--out", str(out)], capsys)
        assert code == 0
        assert out.read_text().count("\n") == 1 + (9 + 1) + (15 + 1) + (17 + 1)

    def test_lstudy_no_success(self, tmp_path, capsys):
        code, _, err = run(["lstudy", "--levels", str(tmp_path / "missing.txt")], capsys)
        assert code == 1 and "missing.txt" in err

    def test_lstudy_empty(self, capsys):
        code, out, _ = run(["lstudy"], capsys)
        assert code == 0 and out.startswith("q,chi_index")


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "delta_lab.cli", "verify-delta", "--q-max", "13"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["command"] == "verify-delta"
