import csv
import io
import json
import subprocess
import sys

import pytest

from chmp.cli import BENCH_COLUMNS, bench_rows, main
from chmp.instances import read_instance
from chmp.lpfeas import gen_lp_instance, write_lp


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_is_idempotent(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(["gen", "--case", "a", "-m", "2", "-n", "4", "--seed", "7", "--out", str(a)], capsys)[0] == 0
    assert run(["gen", "--case", "a", "-m", "2", "-n", "4", "--seed", "7", "--out", str(b)], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_unit_square_round_trip(tmp_path, capsys):
    path = tmp_path / "us.txt"
    run(["gen", "--case", "unit-square-inside", "--out", str(path)], capsys)
    ps, p = read_instance(path)
    assert ps.n == 5 and p.tolist() == [1.0, 0.5]


def test_gen_bad_case(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--case", "zz"])
    assert exc.value.code != 0


def test_solve_exit_codes(tmp_path, capsys):
    out = tmp_path / "out.txt"
    run(["gen", "--case", "unit-square-outside", "--out", str(out)], capsys)
    code, text, _ = run(["solve", str(out), "--solver", "TA", "--json"], capsys)
    rec = json.loads(text)
    assert code == 2 and rec["outcome"] == "witness"
    assert 0.05 - 1e-12 <= rec["delta"] <= 0.1

    a = tmp_path / "a.txt"
    run(["gen", "--case", "a", "-m", "10", "-n", "200", "--out", str(a)], capsys)
    assert run(["solve", str(a), "--solver", "GT"], capsys)[0] == 0

    b = tmp_path / "b.txt"
    run(["gen", "--case", "b", "-m", "10", "-n", "200", "--out", str(b)], capsys)
    assert run(["solve", str(b), "--solver", "TA", "--maxit", "5"], capsys)[0] == 3

    code, _, err = run(["solve", str(tmp_path / "missing.txt")], capsys)
    assert code == 1 and "error" in err


def test_solve_trace_output(tmp_path, capsys):
    path = tmp_path / "d.txt"
    run(["gen", "--case", "d", "-m", "10", "-n", "50", "--out", str(path)], capsys)
    rec = tmp_path / "rec.json"
    run(["solve", str(path), "--solver", "GT", "--trace", "--out", str(rec)], capsys)
    rows = list(csv.reader(open(f"{rec}.trace.csv")))
    assert rows[0][:3] == ["k", "delta", "delta_next"]
    assert len(rows) - 1 == json.loads(rec.read_text())["iterations"]


def test_eps_env_override(tmp_path, capsys, monkeypatch):
    path = tmp_path / "a.txt"
    run(["gen", "--case", "a", "-m", "5", "-n", "50", "--out", str(path)], capsys)
    monkeypatch.setenv("CHMP_DEFAULT_EPS", "0.2")
    rec = json.loads(run(["solve", str(path), "--json"], capsys)[1])
    assert rec["eps"] == 0.2


def test_bench_single_row(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code, _, _ = run(["bench", "--case", "c", "-m", "10", "-n", "100", "--reps", "1",
                      "--solvers", "GT", "--out", str(out)], capsys)
    rows = list(csv.DictReader(open(out)))
    assert code == 0 and len(rows) == 1
    assert list(rows[0]) == BENCH_COLUMNS
    assert rows[0]["iterations"] == "1" and rows[0]["outcome"] == "witness"


def test_bench_deterministic_except_time():
    a = bench_rows("d", 10, [60, 80], 2, ["TA", "ASFW"], 1e-4, seed_base=3)
    b = bench_rows("d", 10, [60, 80], 2, ["TA", "ASFW"], 1e-4, seed_base=3, jobs=2)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "time_s"} for r in rows]  # noqa: E731
    assert strip(a) == strip(b)
    assert sorted({r["seed"] for r in a}) == [3, 4]


def test_bench_row_reproducible_by_solve(tmp_path, capsys):
    row = bench_rows("c", 10, [100], 1, ["TA"], 1e-4, seed_base=5)[0]
    path = tmp_path / "c.txt"
    run(["gen", "--case", "c", "-m", "10", "-n", "100", "--seed", "5", "--out", str(path)], capsys)
    rec = json.loads(run(["solve", str(path), "--solver", "TA", "--seed", "5", "--json"], capsys)[1])
    assert rec["iterations"] == row["iterations"] and rec["outcome"] == row["outcome"]


def test_bench_trace_monotone_column(capsys):
    code, text, _ = run(["bench", "--case", "a", "-m", "10", "-n", "100", "--reps", "2",
                         "--solvers", "TA,GT,FW,SPG", "--trace"], capsys)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert {r["monotone"] for r in rows if r["solver"] != "SPG"} == {"1"}


def test_lpfeas(tmp_path, capsys):
    code, text, _ = run(["lpfeas", "-m", "10", "-n", "30", "--infeasible", "--solver", "GT"], capsys)
    assert code == 2 and json.loads(text)["verdict"] == "infeasible"
    path = tmp_path / "lp.txt"
    write_lp(path, gen_lp_instance(10, 30, seed=1))
    x_out = tmp_path / "x.txt"
    code, text, _ = run(["lpfeas", "--instance", str(path), "--out", str(x_out)], capsys)
    assert code == 0 and json.loads(text)["verdict"] == "feasible"
    assert len(x_out.read_text().split()) == 30


def test_classify_blobs(tmp_path, capsys):
    pred = tmp_path / "p.csv"
    code, text, _ = run(["classify", "--blobs", "--train-per-class", "20", "--test", "10",
                         "--out", str(pred)], capsys)
    assert code == 0 and "accuracy 1.0000" in text
    assert len(list(csv.reader(open(pred)))) == 11


def test_classify_idx(digits_idx, capsys):
    tri, trl, tei, tel, _ = digits_idx
    code, text, _ = run(["classify", "--idx", tri, trl, tei, tel, "--train-per-class", "20",
                         "--test", "20", "--solver", "GT"], capsys)
    assert code == 0 and "accuracy" in text


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "chmp", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "chmp" in res.stdout
