import sys
import os
import csv
import io
import json
import pytest

# Allow importing from bin/
sys.path.append(os.path.join(os.path.dirname(__file__), '..', 'bin'))
import nbldpc
from ldpc_code import load_code, toy_code

FAST = ["--executor", "thread", "--frames", "5"]

DEGREE_ONE_ROW = "3 2 4\n2 3\n1 1 2\n3 1\n1:1\n1:1\n1:1 2:1\n"


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


class TestGen:
    def test_writes_code_file(self, tmp_path, capsys):
        path = tmp_path / "c1.alist"
        rc = nbldpc.main(["gen", "--n", "16", "--m", "8", "--dc", "4", "--dv", "2",
                          "--q", "4", "--seed", "7", "-o", str(path)])
        assert rc == 0
        pcm = load_code(str(path))
        assert (pcm.n, pcm.m, pcm.field.g) == (16, 8, 16)
        assert pcm.regular_degrees == (4, 2)
        out = capsys.readouterr().out
        assert "N=16 M=8 d_c=4 d_v=2 g=16" in out
        assert "seed=7" in out

    def test_same_seed_same_code(self, tmp_path):
        paths = [tmp_path / "a.alist", tmp_path / "b.alist"]
        for p in paths:
            nbldpc.main(["gen", "--n", "6", "--m", "3", "--q", "2", "--seed", "1", "-o", str(p)])
        assert paths[0].read_text() == paths[1].read_text()

    def test_stdout_and_summary(self, capsys):
        assert nbldpc.main(["gen", "--toy", "--show"]) == 0
        captured = capsys.readouterr()
        assert captured.out.splitlines()[0] == "6 3 4"
        assert "a^2" in captured.err
        assert "d_c=4 d_v=2 g=4" in captured.err

    def test_toy_matches_fixture(self, tmp_path):
        path = tmp_path / "toy.alist"
        nbldpc.main(["gen", "--toy", "-o", str(path)])
        assert load_code(str(path)) == toy_code()

    def test_infeasible_degrees(self, capsys):
        rc = nbldpc.main(["gen", "--n", "16", "--m", "8", "--dc", "4", "--dv", "3"])
        assert rc == 2
        assert "no regular code" in capsys.readouterr().err

    def test_unsupported_field(self, capsys):
        assert nbldpc.main(["gen", "--q", "9"]) == 2
        assert "not supported" in capsys.readouterr().err

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as info:
            nbldpc.main(["--version"])
        assert info.value.code == 0
        assert nbldpc.__version__ in capsys.readouterr().out


class TestSimulate:
    def test_noiseless_sweep(self, capsys):
        rc = nbldpc.main(["simulate", "--noiseless", "--ebn0", "1", "2", "3", *FAST])
        assert rc == 0
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == nbldpc.SIMULATE_HEADER
        assert rows[0][5:7] == ["FER", "BER"]
        assert len(rows) == 4
        for row in rows[1:]:
            assert float(row[5]) == 0.0
            assert float(row[7]) == 1.0

    @pytest.mark.parametrize("algorithm, arithmetic", [("min-max", "i8"), ("fft-spa", "i32")])
    def test_deterministic_under_seed(self, tmp_path, algorithm, arithmetic):
        outputs = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            rc = nbldpc.main(["simulate", "--algorithm", algorithm, "--arithmetic", arithmetic,
                              "--ebn0", "1.5", "--seed", "11", "-o", str(path), *FAST])
            assert rc == 0
            outputs.append(path.read_text())
        assert outputs[0] == outputs[1]

    def test_code_file_and_config(self, tmp_path, capsys):
        code = tmp_path / "toy.alist"
        nbldpc.main(["gen", "--toy", "-o", str(code)])
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"code": str(code), "ebn0": [4.0], "max_iters": 20}))
        capsys.readouterr()
        rc = nbldpc.main(["simulate", "--config", str(config), *FAST])
        assert rc == 0
        rows = read_csv(capsys.readouterr().out)
        assert rows[1][0] == "4.0"
        assert rows[1][1] == "5"

    def test_invalid_config(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"q": 12, "frames": 0}))
        assert nbldpc.main(["simulate", "--config", str(config)]) == 2
        err = capsys.readouterr().err
        assert "q:" in err and "frames:" in err

    def test_several_worker_counts_rejected(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"workers": [1, 2]}))
        assert nbldpc.main(["simulate", "--config", str(config), "--noiseless"]) == 2
        assert "one worker count" in capsys.readouterr().err

    def test_engine_error(self, tmp_path, capsys):
        code = tmp_path / "short.alist"
        code.write_text(DEGREE_ONE_ROW)
        rc = nbldpc.main(["simulate", "--code", str(code), "--algorithm", "min-max",
                          "--noiseless", "--ebn0", "1"] + FAST)
        assert rc == 3
        assert "degree >= 2" in capsys.readouterr().err

    def test_parse_error_position(self, tmp_path, capsys):
        code = tmp_path / "bad.alist"
        code.write_text(DEGREE_ONE_ROW.replace("1:1 2:1", "1:1 2;1"))
        assert nbldpc.main(["simulate", "--code", str(code)] + FAST) == 2
        assert "line 7, column 2" in capsys.readouterr().err


class TestBench:
    def test_rows_per_worker_count(self, capsys):
        rc = nbldpc.main(["bench", "--workers", "1", "2", "--iters", "2", "--frames", "8",
                          "--executor", "thread"])
        assert rc == 0
        rows = read_csv(capsys.readouterr().out)
        assert rows[0] == nbldpc.BENCH_HEADER
        assert [r[0] for r in rows[1:]] == ["1", "2"]
        assert rows[1][4] == "1.000"
        for row in rows[1:]:
            assert int(row[1]) == 8
            assert float(row[3]) == pytest.approx(16 * 4 * 8 / float(row[2]), rel=1e-2)

    def test_baseline_added_when_missing(self, capsys):
        rc = nbldpc.main(["bench", "--workers", "2", "--iters", "1", "--frames", "4",
                          "--executor", "thread", "--algorithm", "min-max"])
        assert rc == 0
        rows = read_csv(capsys.readouterr().out)
        assert [r[0] for r in rows[1:]] == ["2"]


class TestAnalyze:
    def test_report(self, capsys):
        rc = nbldpc.main(["analyze", "--q", "2", "3", "--shape", "C1"])
        assert rc == 0
        captured = capsys.readouterr()
        rows = read_csv(captured.out)
        assert rows[0] == nbldpc.ANALYZE_HEADER
        assert all(len(r) == 5 for r in rows)
        labels = {r[1] for r in rows[1:]}
        assert "fft-spa:fft:additions" in labels
        assert "min-max:fb_remaining:comparisons" in labels
        assert "fft-spa needs fewer operations at every q" in captured.err

    def test_single_algorithm(self, capsys):
        rc = nbldpc.main(["analyze", "--algorithm", "min-max", "--q", "2", "--shape", "C1"])
        assert rc == 0
        captured = capsys.readouterr()
        rows = read_csv(captured.out)[1:]
        assert rows and all(r[1].startswith("min-max:") for r in rows)
        assert captured.err == ""
