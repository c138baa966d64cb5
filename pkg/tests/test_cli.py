import json
import os

import numpy as np
import pytest

from feketelab import DiscreteMeasure, GramMatrix
from feketelab.cli import main, read_config


def run(*argv):
    return main(list(argv))


class TestConfig:
    def test_read_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("shape = circle\nnmin = 2\nnmax = 3\nresolution = 24\n")
        out = tmp_path / "o"
        assert run("fekete", "--config", str(cfg), "--nmax", "4", "--out", str(out)) == 0
        text = (out / "fekete.csv").read_text()
        # flag wins over config: degrees 2..4 present
        assert text.splitlines()[1].startswith("2,")
        assert any(line.startswith("4,") for line in text.splitlines())

    def test_unknown_key_diagnostic(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("shpae = circle\n")
        assert run("fekete", "--config", str(cfg)) == 2
        assert "shpae" in capsys.readouterr().err

    def test_bad_value_diagnostic(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("nmax = three\n")
        assert run("fekete", "--config", str(cfg)) == 2
        assert "nmax" in capsys.readouterr().err

    def test_comments_and_blank_lines(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# a comment\n\nshape = circle  # trailing\n")
        assert read_config(str(cfg)) == {"shape": "circle"}

    def test_bad_line(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("just some words\n")
        assert run("mesh", "--config", str(cfg)) == 2
        assert "key = value" in capsys.readouterr().err


class TestArtifacts:
    def test_mesh_outputs(self, tmp_path):
        out = tmp_path / "m"
        assert run("mesh", "--shape", "interval:-1,1", "--epsilon", "0.1",
                   "--resolution", "31", "--out", str(out)) == 0
        assert (out / "mesh.csv").exists()
        assert (out / "mesh.png").exists()
        meta = json.loads((out / "mesh.json").read_text())
        assert meta["epsilon"] == 0.1

    def test_diameter_schema(self, tmp_path):
        out = tmp_path / "d"
        assert run("diameter", "--shape", "interval:-1,1", "--nmin", "2", "--nmax", "4",
                   "--resolution", "40", "--out", str(out)) == 0
        header = (out / "diameter.csv").read_text().splitlines()[0]
        assert header == "n,epsilon,delta_kn,delta_k,monotone_violation"
        assert (out / "diameter.png").exists()

    def test_gram_json_round_trip(self, tmp_path):
        out = tmp_path / "g"
        assert run("gram", "--shape", "circle", "--n", "3", "--resolution", "24",
                   "--out", str(out)) == 0
        G = GramMatrix.from_json((out / "gram.json").read_text())
        assert G.n == 3 and G.m == 4

    def test_optimal_measure_round_trip(self, tmp_path):
        out = tmp_path / "o"
        assert run("optimal", "--shape", "interval:-1,1", "--n", "2",
                   "--resolution", "41", "--out", str(out)) == 0
        mu = DiscreteMeasure.from_json((out / "optimal_measure.json").read_text())
        assert np.isclose(mu.probs.sum(), 1.0)
        assert (out / "optimal.png").exists()

    def test_bergman_outputs(self, tmp_path):
        out = tmp_path / "b"
        assert run("bergman", "--shape", "interval:-1,1", "--n", "3",
                   "--resolution", "50", "--out", str(out)) == 0
        lines = (out / "bergman.csv").read_text().splitlines()
        assert lines[0] == "re_1,im_1,bergman"
        assert len(lines) == 51

    def test_perturb_outputs(self, tmp_path):
        out = tmp_path / "p"
        assert run("perturb", "--shape", "interval:-1,1", "--probe", "re2",
                   "--nmin", "2", "--nmax", "4", "--resolution", "60",
                   "--out", str(out)) == 0
        header = (out / "perturb.csv").read_text().splitlines()[0]
        assert header == "n,f_n0,fprime_direct,fprime_fd,g_prime_ref,gap"
        assert (out / "perturb.png").exists()

    def test_converge_outputs(self, tmp_path):
        out = tmp_path / "c"
        assert run("converge", "--shape", "circle", "--nmin", "2", "--nmax", "5",
                   "--moment-degree", "3", "--resolution", "60", "--out", str(out)) == 0
        obj = json.loads((out / "converge.json").read_text())
        assert obj["meta"]["reference"] == "uniform-circle"
        assert (out / "converge_long.csv").read_text().startswith("n,quantity,value")

    def test_float_precision_17_digits(self, tmp_path):
        out = tmp_path / "f"
        run("fekete", "--shape", "interval:-1,1", "--nmin", "2", "--nmax", "3",
            "--resolution", "40", "--out", str(out))
        row = (out / "fekete.csv").read_text().splitlines()[1].split(",")
        # doubles round-trip through the printed representation
        val = float(row[4])
        assert f"{val:.17g}" == row[4]


class TestDeterminism:
    def test_identical_runs_identical_files(self, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            assert run("fekete", "--shape", "circle", "--nmin", "2", "--nmax", "5",
                       "--eps-law", "inv-n", "--eps0", "0.5",
                       "--resolution", "40", "--out", str(out)) == 0
            outs.append(out)
        for fname in ("fekete.csv", "fekete.json"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


class TestVerify:
    def test_fast_verify_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "v"
        assert run("verify", "--fast", "--seed", "0", "--out", str(out)) == 0
        text = (out / "verify.txt").read_text()
        assert "FAIL" not in text
        assert text.count("PASS") == 7


class TestErrorPaths:
    def test_mesh_too_small_for_degree(self, tmp_path, capsys):
        out = tmp_path / "e"
        code = run("fekete", "--shape", "interval:-1,1", "--nmin", "6", "--nmax", "6",
                   "--resolution", "5", "--out", str(out))
        assert code == 2
        err = capsys.readouterr().err
        assert "degenerate" in err or "n=6" in err

    def test_invalid_n_range(self, capsys):
        assert run("fekete", "--nmin", "5", "--nmax", "2") == 2
        assert "nmin" in capsys.readouterr().err

    def test_unknown_shape(self, tmp_path, capsys):
        assert run("mesh", "--shape", "hexagon", "--out", str(tmp_path / "x")) == 2
        assert "hexagon" in capsys.readouterr().err

    def test_missing_reference_surfaced(self, tmp_path, capsys):
        assert run("converge", "--shape", "square:1", "--nmin", "2", "--nmax", "3",
                   "--resolution", "20", "--out", str(tmp_path / "x")) == 2
        assert "reference" in capsys.readouterr().err
