import json
import subprocess
import sys

import pytest

from fractaldim.cli import main
from fractaldim.dyadic_cover import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def cantor_json(tmp_path, capsys):
    path = tmp_path / "cantor.json"
    assert run(capsys, "gen", "cantor", "--out", str(path))[0] == 0
    return path


class TestGen:
    def test_cantor_csv(self, capsys):
        code, out, _ = run(capsys, "gen", "cantor", "--depth", "4")
        assert code == 0 and len(read_csv(out)) == 16
        assert out.startswith("# fractaldim")

    def test_blocks_csv(self, capsys):
        code, out, _ = run(capsys, "gen", "blocks", "--base", "2", "--r", "1", "--s", "2", "--depth", "8")
        assert code == 0 and len(read_csv(out)) == 16

    def test_ngrowth_json(self, capsys):
        code, out, _ = run(capsys, "gen", "ngrowth", "--seeds", "1,1", "--blocks", "4", "--role", "A")
        blob = json.loads(out)
        assert code == 0 and blob["a_lengths"] == [1, 2, 16, 216] and blob["b_lengths"] == [1, 4, 48, 864]

    def test_floorpow(self, capsys):
        code, out, err = run(capsys, "gen", "floorpow", "--base", "1000", "--r", "1", "--s", "2")
        assert code == 0 and json.loads(out)["f"] == 31 and "F=31" in err

    def test_roundtrip_bytes(self, tmp_path, capsys):
        path = tmp_path / "a.json"
        run(capsys, "gen", "ngrowth", "--blocks", "3", "--out", str(path))
        from fractaldim.digit_fractal import dumps_schedule, loads_schedule
        text = path.read_text()
        assert dumps_schedule(loads_schedule(text)) == text

    @pytest.mark.parametrize("argv", [["gen", "blocks", "--base", "2", "--r", "3", "--s", "2"],
                                      ["gen", "blocks", "--base", "2"],
                                      ["gen", "ngrowth", "--seeds", "x"],
                                      ["gen", "ngrowth", "--seeds", "0,1"],
                                      ["gen", "cantor", "--depth", "40"]])
    def test_bad_params(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2


class TestDim:
    def test_exact_cantor(self, capsys, cantor_json):
        code, out, _ = run(capsys, "dim", "--schedule", str(cantor_json))
        rep = json.loads(out)
        assert code == 0 and rep["classical_exists"] == "yes"
        assert rep["limsup_est"] == pytest.approx(0.6309297535714574, abs=1e-12)

    def test_qlim_ngrowth(self, capsys, tmp_path):
        path = tmp_path / "a.json"
        run(capsys, "gen", "ngrowth", "--out", str(path))
        code, out, _ = run(capsys, "dim", "--method", "qlim", "--schedule", str(path),
                           "--oracle", "tail:blockends-A", "--scales", "block-ends:64")
        rep = json.loads(out)
        assert code == 0 and rep["qdim"] > 0.96

    def test_boxcount(self, capsys, tmp_path):
        csv = tmp_path / "c.csv"
        run(capsys, "gen", "cantor", "--depth", "12", "--out", str(csv))
        code, out, _ = run(capsys, "dim", "--method", "boxcount", "--points", str(csv))
        assert code == 0 and abs(json.loads(out)["limsup_est"] - 0.631) < 0.02

    def test_boxcount_no_window(self, capsys, tmp_path):
        csv = tmp_path / "p.csv"
        csv.write_text("x1\n0.5\n")
        assert run(capsys, "dim", "--method", "boxcount", "--points", str(csv))[0] == 3

    def test_content(self, capsys, cantor_json):
        code, out, _ = run(capsys, "dim", "--method", "content", "--schedule", str(cantor_json), "--depth", "1000")
        assert code == 0 and json.loads(out)["provenance"]["bracket"] == [0.63, 0.64]

    @pytest.mark.parametrize("argv", [["dim"], ["dim", "--schedule", "missing.json"],
                                      ["dim", "--schedule", "{bad"], ["dim", "--schedule", '{"kind": "constant"}'],
                                      ["dim", "--falconer", "--method", "qlim", "--tol", "0"],
                                      ["dim", "--falconer", "--method", "qlim", "--oracle", "tail:prime"]])
    def test_bad_input(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2

    def test_deterministic(self, capsys, cantor_json):
        first = run(capsys, "dim", "--schedule", str(cantor_json), "--method", "qlim")[1]
        second = run(capsys, "dim", "--schedule", str(cantor_json), "--method", "qlim")[1]
        assert first == second and "config_hash" in json.loads(first)

    def test_hash_tracks_config(self, capsys, cantor_json):
        a = json.loads(run(capsys, "dim", "--schedule", str(cantor_json), "--depth", "100")[1])
        b = json.loads(run(capsys, "dim", "--schedule", str(cantor_json), "--depth", "200")[1])
        assert a["config_hash"] != b["config_hash"]

    def test_env_horizon(self, capsys, cantor_json, monkeypatch):
        monkeypatch.setenv("FRACTALDIM_HORIZON", "1000")
        out = json.loads(run(capsys, "dim", "--schedule", str(cantor_json), "--method", "qlim")[1])
        assert out["provenance"]["horizon"] == 1000


class TestQlim:
    def test_ledger(self, capsys):
        code, out, _ = run(capsys, "qlim", "--falconer", "--oracle", "lazy", "--scales", "block-ends:16")
        blob = json.loads(out)
        assert code == 0 and blob["ledger"]["policy"] == "lazy" and blob["horizon"] == 15


class TestCheck:
    def test_product_cantor(self, capsys, cantor_json):
        code, out, _ = run(capsys, "check", "product", "--a", str(cantor_json), "--b", str(cantor_json))
        assert code == 0 and json.loads(out)["verdict"] == "pass"

    def test_product_falconer(self, capsys):
        code, out, _ = run(capsys, "check", "product", "--falconer")
        blob = json.loads(out)
        assert code == 0 and blob["passed"]
        assert blob["limsup_sum_analytic"] == 2.0 and blob["limsup_product_analytic"] == 1.0
        assert blob["product_ratio_identity"] is True

    def test_oracle_audit(self, capsys):
        code, out, _ = run(capsys, "check", "oracle", "--spec", "lazy", "--queries", "500", "--seed", "7")
        assert code == 0 and json.loads(out)["clean"]

    def test_oracle_blockends(self, capsys, monkeypatch):
        monkeypatch.setenv("FRACTALDIM_HORIZON", "100000")
        code, out, _ = run(capsys, "check", "oracle", "--oracle", "tail:blockends-A", "--queries", "200")
        assert code == 0

    def test_sandwich(self, capsys):
        code, out, _ = run(capsys, "check", "sandwich", "--clouds", "20", "--seed", "4")
        assert code == 0 and json.loads(out)["checks"] == 20 * 13

    def test_sandwich_points(self, capsys, tmp_path):
        csv = tmp_path / "p.csv"
        csv.write_text("x1\n0.2\n0.3\n0.7\n")
        assert run(capsys, "check", "sandwich", "--points", str(csv))[0] == 0

    def test_content(self, capsys, cantor_json):
        assert run(capsys, "check", "content", "--schedule", str(cantor_json))[0] == 0

    def test_violation_exit_code(self, capsys, monkeypatch):
        import fractaldim.cli as cli
        monkeypatch.setattr(cli, "_check_content", lambda args: ({"stub": True}, False, {}))
        code, out, _ = run(capsys, "check", "content", "--falconer")
        assert code == 1 and json.loads(out)["verdict"] == "fail"


def test_module_entry(tmp_path):
    res = subprocess.run([sys.executable, "-m", "fractaldim.cli", "gen", "cantor", "--depth", "2"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.count("\n") == 9
