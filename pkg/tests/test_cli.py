import json
import subprocess
import sys

import numpy as np
import pytest

from normclust.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main


@pytest.fixture
def files(tmp_path):
    rng = np.random.default_rng(51)
    pts = np.vstack([rng.normal(0, 0.5, (6, 2)), rng.normal(6, 0.5, (6, 2))])
    (tmp_path / "p.csv").write_text("x,y\n" + "\n".join(f"{float(a)!r},{float(b)!r}" for a, b in pts))
    (tmp_path / "lz2.json").write_text(json.dumps({"type": "lz", "z": 2}))
    (tmp_path / "linf.json").write_text(json.dumps({"type": "lz", "z": "inf"}))
    # leaves first, hub last
    ids = [f"l{i}" for i in range(6)] + ["c"]
    M = np.full((7, 7), 2.0)
    M[6, :] = M[:, 6] = 1.0
    np.fill_diagonal(M, 0.0)
    (tmp_path / "star6.json").write_text(json.dumps(
        {"ids": ids, "points": ids, "centers": ids, "matrix": M.tolist()}))
    (tmp_path / "g.txt").write_text("# path\na b 1\nb c 2\nc d 1.5\n")
    (tmp_path / "gp.txt").write_text("a\nc\nd\n")
    (tmp_path / "gf.txt").write_text("b\nd\n")
    (tmp_path / "req.csv").write_text("point_id,radius\n0,1\n2,1\n")
    (tmp_path / "line.csv").write_text("0\n1\n2\n")
    return tmp_path


def run(*argv):
    return main([str(a) for a in argv])


def test_solve_output_schema(files):
    out = files / "r.json"
    assert run("solve", "--points", files / "p.csv", "--norm", files / "lz2.json", "--k", 3,
               "--eps", 0.1, "--seed", 7, "--restarts", 200, "--out", out) == EXIT_OK
    data = json.loads(out.read_text())
    assert set(data) == {"opt_guess", "cost", "centers", "assignment", "iterations",
                         "restarts_used", "seed", "eps"}
    assert len(data["centers"]) == 3 and len(data["assignment"]) == 12
    assert data["seed"] == 7 and data["eps"] == 0.1


def test_solve_rejects_eps_out_of_range(files, capsys):
    code = run("solve", "--points", files / "p.csv", "--norm", files / "lz2.json", "--k", 2,
               "--eps", 1.5, "--out", files / "r.json")
    assert code == EXIT_INPUT
    assert "eps" in capsys.readouterr().err


def test_solve_fail_exit_code(files, capsys):
    code = run("solve", "--points", files / "line.csv", "--norm", files / "linf.json",
               "--k", 1, "--eps", 0.2, "--opt", 0.01, "--restarts", 3,
               "--out", files / "r.json")
    assert code == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().err


def test_solve_continuous_and_graph(files):
    out = files / "c.json"
    assert run("solve", "--points", files / "p.csv", "--continuous", "--norm",
               files / "linf.json", "--k", 2, "--eps", 0.2, "--restarts", 20,
               "--out", out) == EXIT_OK
    assert all(len(c) == 2 for c in json.loads(out.read_text())["centers"])
    assert run("solve", "--graph", files / "g.txt", "--graph-points", files / "gp.txt",
               "--graph-centers", files / "gf.txt", "--norm", files / "lz2.json", "--k", 1,
               "--eps", 0.2, "--out", out) == EXIT_OK


def test_solve_trace(files):
    trace = files / "t.jsonl"
    assert run("solve", "--points", files / "p.csv", "--norm", files / "lz2.json", "--k", 2,
               "--eps", 0.2, "--restarts", 20, "--trace", trace,
               "--out", files / "r.json") == EXIT_OK
    for line in trace.read_text().splitlines():
        rec = json.loads(line)
        assert rec["admissible_ok"] and rec["head_ok"]


def test_scatter_star(files):
    out = files / "s.json"
    assert run("scatter", "--metric", files / "star6.json", "--eps", 0.5, "--seeds", 20,
               "--max-len", 100, "--out", out) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["max_length"] == 2 and len(data["lengths"]) == 20


def test_ballint_command(files, capsys):
    assert run("ballint", "--points", files / "line.csv", "--requests", files / "req.csv",
               "--eta", 0.1) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["center"] == 1
    (files / "bad.csv").write_text("0,0.4\n2,0.4\n")
    assert run("ballint", "--points", files / "line.csv", "--requests", files / "bad.csv",
               "--eta", 0.1) == EXIT_FAIL


def test_oracle_command(files):
    out = files / "o.json"
    assert run("oracle", "--points", files / "line.csv", "--norm", files / "linf.json",
               "--k", 1, "--out", out) == EXIT_OK
    assert json.loads(out.read_text())["cost"] == 1
    assert run("oracle", "--points", files / "line.csv", "--norm", files / "linf.json",
               "--k", 1, "--method", "gonzalez", "--out", out) == EXIT_OK


def test_validate(files, capsys):
    assert run("validate", "--metric", files / "star6.json", "--norm", files / "lz2.json") == 0
    assert capsys.readouterr().out.count("OK") == 2
    bad = files / "bad.json"
    bad.write_text(json.dumps({"matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}))
    assert run("validate", "--metric", bad) == EXIT_INPUT


@pytest.mark.parametrize("content", ["x,y\n1,2\n3\n", "x,y\n1,abc\n", "", "1,nan\n"])
def test_malformed_points(files, content):
    bad = files / "bad.csv"
    bad.write_text(content)
    assert run("solve", "--points", bad, "--norm", files / "lz2.json", "--k", 1,
               "--eps", 0.2, "--out", files / "r.json") == EXIT_INPUT


def test_malformed_inputs(files):
    (files / "bad_norm.json").write_text('{"type": "lz", "z": 0.3}')
    base = ["solve", "--points", files / "p.csv", "--k", 1, "--eps", 0.2,
            "--out", files / "r.json"]
    assert run(*base, "--norm", files / "bad_norm.json") == EXIT_INPUT
    assert run(*base, "--norm", files / "missing.json") == EXIT_INPUT
    assert run("solve", "--points", files / "p.csv", "--norm", files / "lz2.json",
               "--k", 99, "--eps", 0.2, "--out", files / "r.json") == EXIT_INPUT
    (files / "g2.txt").write_text("a b\n")
    assert run("validate", "--graph", files / "g2.txt") == EXIT_INPUT
    assert run("bogus") == EXIT_INPUT


def _twice(files, argv, name):
    outs = []
    for i in range(2):
        out = files / f"{name}{i}.json"
        assert run(*argv, "--out", out) in (EXIT_OK, EXIT_FAIL)
        outs.append(out.read_bytes())
    return outs


@pytest.mark.parametrize("jobs", [1, 4])
def test_solve_byte_identical(files, jobs):
    argv = ["solve", "--points", files / "p.csv", "--norm", files / "lz2.json", "--k", 2,
            "--eps", 0.2, "--seed", 3, "--restarts", 30, "--jobs", jobs]
    a, b = _twice(files, argv, f"solve{jobs}")
    assert a == b


def test_jobs_do_not_change_output(files):
    base = ["solve", "--points", files / "p.csv", "--norm", files / "lz2.json", "--k", 2,
            "--eps", 0.2, "--seed", 3, "--restarts", 30]
    assert _twice(files, base + ["--jobs", 1], "j1")[0] == _twice(files, base + ["--jobs", 4],
                                                                  "j4")[0]


def test_console_script_runs(files):
    proc = subprocess.run([sys.executable, "-m", "normclust.cli", "oracle", "--points",
                           str(files / "line.csv"), "--norm", str(files / "linf.json"),
                           "--k", "1", "--out", str(files / "o.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
