import json

import pytest

from brlab.cli import main, resolve_config


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


class TestConfig:
    def test_layers(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps({"grid": {"N": 64}, "options": {"p": 1.1}}))
        cfg = resolve_config("czd", cfg_path, {"L": 32.0}, ["options.multiplier=50", "pack.q=4.7"])
        assert cfg["grid"] == {"N": 64, "L": 32.0}
        assert cfg["options"]["p"] == 1.1 and cfg["options"]["multiplier"] == 50
        assert cfg["pack"]["q"] == 4.7

    def test_flags_beat_file_and_set_beats_flags(self, tmp_path):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps({"grid": {"N": 64}}))
        cfg = resolve_config("gen", cfg_path, {"N": 128}, [])
        assert cfg["grid"]["N"] == 128
        assert resolve_config("gen", cfg_path, {"N": 128}, ["grid.N=32"])["grid"]["N"] == 32

    @pytest.mark.parametrize("bad", [["grid.N=100"], ["pack.lambda=0.5"], ["novalue"]])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            resolve_config("gen", None, {}, bad)


class TestCommands:
    def test_region(self, capsys):
        code, rep = run(capsys, "region", "--lambda", "1/4")
        assert code == 0 and rep["ok"]
        verts = [(v["x"], v["y"]) for v in rep["result"]["vertices"]]
        assert verts == [("7/8", "1/8"), ("5/8", "1/8"), ("7/8", "5/8"), ("1/8", "7/8")]

    def test_q_four_is_a_config_error(self, capsys):
        code, rep = run(capsys, "dominate", "--q", "4", "--N", "128", "--L", "64", "--f", "corpus:ind_unit",
                        "--h", "corpus:ind_unit")
        assert code == 2
        assert "q must exceed 4" in rep["error"]["message"]

    def test_dominate_then_verify(self, capsys, tmp_path):
        coll = tmp_path / "S.json"
        code, rep = run(capsys, "dominate", "--N", "128", "--L", "64", "--f", "corpus:random_2", "--h",
                        "corpus:gauss_1", "--collection-out", str(coll))
        assert code == 0 and rep["result"]["eta"] == "99/100"
        code, rep = run(capsys, "verify", "--collection", str(coll))
        assert code == 0 and rep["result"]["ok"]
        code, rep = run(capsys, "sparse-form", "--N", "128", "--L", "64", "--collection", str(coll), "--f",
                        "corpus:random_2", "--h", "corpus:gauss_1")
        assert code == 0 and rep["result"]["value"] > 0

    def test_gen_and_apply(self, capsys, tmp_path):
        code, _ = run(capsys, "gen", "--N", "64", "--L", "32", "--kind", "gaussian", "--field-out",
                      str(tmp_path / "g"), "--set", "options.params.width=2.0")
        assert code == 0
        code, rep = run(capsys, "apply", "--N", "64", "--L", "32", "--f", str(tmp_path / "g.json"), "--piece",
                        "annular:2", "--field-out", str(tmp_path / "out"))
        assert code == 0 and (tmp_path / "out.bin").exists()
        assert rep["result"]["piece"] == "annular:2"

    def test_reports_are_reproducible(self, capsys, tmp_path):
        outs = []
        for k in range(2):
            code, rep = run(capsys, "czd", "--N", "128", "--L", "64", "--f", "corpus:spikes", "--seed", "3")
            assert code == 0
            rep.pop("metadata")
            outs.append(json.dumps(rep, sort_keys=True))
        assert outs[0] == outs[1]

    def test_report_file(self, capsys, tmp_path):
        path = tmp_path / "r" / "rep.json"
        code, rep = run(capsys, "region", "--out", str(path))
        assert json.loads(path.read_text()) == rep

    def test_missing_input(self, capsys):
        code, rep = run(capsys, "czd")
        assert code == 2 and rep["error"]["type"] == "ConfigError"
        code, rep = run(capsys, "czd", "--f", "corpus:nope")
        assert code == 2 and "unknown corpus field" in rep["error"]["message"]

    def test_norm_growth_csv(self, capsys, tmp_path):
        path = tmp_path / "g.csv"
        code, rep = run(capsys, "norm-growth", "--family", "kernel", "--jmin", "2", "--jmax", "3", "--csv", str(path))
        assert code == 0 and path.read_text().startswith("p,lambda,family,j,estimate")

    def test_weighted_weak(self, capsys):
        code, rep = run(capsys, "weighted-weak", "--N", "128", "--L", "64", "--f", "corpus:gauss_1")
        assert code == 0 and rep["result"]["rho_admissible"]

    def test_kernel_decay(self, capsys, tmp_path):
        path = tmp_path / "tau.csv"
        code, rep = run(capsys, "kernel-decay", "--j", "2", "3", "--order", "1", "2", "--csv", str(path),
                        "--set", "options.samples=60")
        assert code == 0 and len(rep["result"]["certificates"]) == 4
        lines = path.read_text().splitlines()
        assert lines[0] == "j,u,tau" and len(lines) == 121
