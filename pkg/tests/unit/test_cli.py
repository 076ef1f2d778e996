import json

import pytest

from ozmm import matfile
from ozmm._version import __version__
from ozmm.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main
from ozmm.numeric import MatrixF64, MultiWordMatrix
from ozmm.oracle import ExactMatrix, exact_matmul


@pytest.fixture(scope="function")
def integer_pair(tmp_path):
    a, b = str(tmp_path / "a.ozmm"), str(tmp_path / "b.ozmm")
    assert main(["gen", "--kind", "integer", "--seed", "1", "--rows", "4", "--cols", "5", "-o", a]) == EXIT_OK
    assert main(["gen", "--kind", "integer", "--seed", "2", "--rows", "5", "--cols", "3", "-o", b]) == EXIT_OK
    return a, b


@pytest.fixture(scope="function")
def randn_pair(tmp_path):
    a, b = str(tmp_path / "a.ozmm"), str(tmp_path / "b.ozmm")
    assert main(["gen", "--seed", "1", "--rows", "8", "-o", a]) == EXIT_OK
    assert main(["gen", "--seed", "2", "--rows", "8", "-o", b]) == EXIT_OK
    return a, b


class TestGen:
    def test_square_by_default(self, tmp_path):
        path = str(tmp_path / "x.ozmm")
        assert main(["gen", "--rows", "3", "-o", path]) == EXIT_OK
        X = matfile.read_matrix(path)
        assert isinstance(X, MatrixF64)
        assert X.shape == (3, 3)

    def test_multiword(self, tmp_path):
        path = str(tmp_path / "x.ozmm")
        assert main(["gen", "--rows", "2", "--cols", "5", "--words", "2", "-o", path]) == EXIT_OK
        X = matfile.read_matrix(path)
        assert isinstance(X, MultiWordMatrix)
        assert X.v == 2
        assert X.shape == (2, 5)

    def test_integer_range(self, integer_pair):
        X = matfile.read_matrix(integer_pair[0]).data
        assert X.min() >= -8
        assert X.max() <= 8

    def test_bad_range_is_usage_error(self, tmp_path, capsys):
        path = str(tmp_path / "x.ozmm")
        assert main(["gen", "--kind", "integer", "--rows", "2", "--int-range", "a,b", "-o", path]) == EXIT_USAGE
        assert "InvalidConfigurationError" in capsys.readouterr().err


class TestMatmul:
    @pytest.mark.parametrize(
        "fixture_name,fixture",
        [
            ("os2_fast_fp64", ["--method", "os2-fast"]),
            ("os2_accu_int8", ["--method", "os2-accu", "--regime", "int8", "--s", "10"]),
            ("os2_bigint", ["--regime", "int8", "--backend", "bigint", "--s", "8"]),
            ("os1_full", ["--method", "os1", "--k", "3", "--slice-mode", "full"]),
        ],
    )
    def test_integers_are_exact(self, fixture_name, fixture, integer_pair, tmp_path):
        out = str(tmp_path / "c.ozmm")
        assert main(["matmul", *integer_pair, *fixture, "-o", out]) == EXIT_OK
        A, B = (matfile.read_matrix(p) for p in integer_pair)
        assert ExactMatrix.from_matrix(matfile.read_matrix(out)) == exact_matmul(A, B)

    def test_output_words(self, randn_pair, tmp_path):
        out = str(tmp_path / "c.ozmm")
        assert main(["matmul", *randn_pair, "--s", "16", "--output-words", "3", "-o", out]) == EXIT_OK
        C = matfile.read_matrix(out)
        assert isinstance(C, MultiWordMatrix)
        assert C.v == 3

    def test_missing_input(self, tmp_path, capsys):
        missing = str(tmp_path / "missing.ozmm")
        assert main(["matmul", missing, missing, "-o", str(tmp_path / "c.ozmm")]) == EXIT_USAGE
        assert "MatrixFormatError" in capsys.readouterr().err

    def test_shape_mismatch_is_failure(self, integer_pair, tmp_path, capsys):
        a, _ = integer_pair
        assert main(["matmul", a, a, "-o", str(tmp_path / "c.ozmm")]) == EXIT_FAILURE
        assert "ShapeMismatchError" in capsys.readouterr().err


class TestVerify:
    def test_within_tolerance(self, integer_pair, capsys):
        assert main(["verify", *integer_pair, "--tolerance", "0"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["report"]["max_rel_err"] == 0.0
        assert out["counts"] == {"residue": 14}
        assert out["tolerance"] == 0.0

    def test_tolerance_breach(self, randn_pair, capsys):
        assert main(["verify", *randn_pair, "--s", "1", "--tolerance", "0"]) == EXIT_FAILURE
        captured = capsys.readouterr()
        assert json.loads(captured.out)["report"]["max_rel_err"] > 0.0
        assert "ToleranceError" in captured.err

    def test_slice_counts_reported(self, randn_pair, capsys):
        assert main(["verify", *randn_pair, "--method", "os1", "--k", "4", "--tolerance", "1"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["counts"] == {"slice": 10}


class TestKplot:
    def test_stdout(self, capsys):
        assert main(["kplot", "--regime", "int8", "--q", "1024", "--s-range", "15,16"]) == EXIT_OK
        assert capsys.readouterr().out == "q,s,k\n1024,15,53\n1024,16,57\n"

    def test_file(self, tmp_path):
        path = tmp_path / "k.csv"
        assert main(["kplot", "--q", "1024,4096", "--s-range", "20..21", "-o", str(path)]) == EXIT_OK
        assert path.read_text().splitlines()[1:] == ["1024,20,214", "1024,21,225", "4096,20,203", "4096,21,213"]


class TestSweep:
    def test_csv(self, sweep_config_file, tmp_path):
        path = tmp_path / "sweep.csv"
        assert main(["sweep", "--config", sweep_config_file, "--no-timing", "-o", str(path)]) == EXIT_OK
        lines = path.read_text().splitlines()
        assert lines[0].startswith("method,")
        assert len(lines) == 6

    def test_overrides(self, sweep_config_file, capsys):
        argv = ["sweep", "--config", sweep_config_file, "--methods", "dgemm", "--n-list", "4,6", "--no-timing"]
        assert main(argv) == EXIT_OK
        assert len(capsys.readouterr().out.splitlines()) == 3

    def test_failed_point(self, sweep_config_file, capsys):
        argv = ["sweep", "--config", sweep_config_file, "--methods", "os2-fast", "--s-range", "0,2", "--no-timing"]
        assert main(argv) == EXIT_FAILURE
        rows = capsys.readouterr().out.splitlines()[1:]
        assert "ModulusError" in rows[0]
        assert len(rows) == 2

    def test_missing_config(self, tmp_path):
        assert main(["sweep", "--config", str(tmp_path / "missing.env")]) == EXIT_USAGE


class TestParser:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["--version"])
        assert e.value.code == 0
        assert capsys.readouterr().out.strip() == __version__

    @pytest.mark.parametrize(
        "fixture_name,fixture",
        [
            ("no_command", []),
            ("unknown_method", ["verify", "a", "b", "--method", "dgemm"]),
            ("gen_needs_rows", ["gen", "-o", "x.ozmm"]),
        ],
    )
    def test_usage(self, fixture_name, fixture):
        with pytest.raises(SystemExit) as e:
            main(fixture)
        assert e.value.code == EXIT_USAGE
