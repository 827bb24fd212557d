import csv
import io
from fractions import Fraction

import pytest

from codedshuffle.cli import main, render, sweep_points


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize(
    "value, text",
    [
        (Fraction(1, 2), "0.500000"),
        (2, "2.000000"),
        (Fraction(1, 3), "0.333333"),
        (Fraction(2, 3), "0.666667"),
        (Fraction(-4, 3), "-1.333333"),
        (Fraction(1, 128), "0.0078125"),
        (0, "0.000000"),
    ],
)
def test_render(value, text):
    assert render(value) == text


def test_sweep_points():
    assert sweep_points(3, 3, 5) == [1, Fraction(3, 2), 2, Fraction(5, 2), 3]
    assert sweep_points(2, 4, 3) == [2, 3, 4]


def test_run_k3_two_thirds(tmp_path):
    out = tmp_path / "run.csv"
    code = main(["run", "--k", "3", "--n", "3", "--d", "2", "--storage", "2", "--iters", "100", "--seed", "7", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert len(rows) == 100
    assert list(rows[0]) == ["iter", "rate_bits", "rate_points"]
    assert all(Fraction(r["rate_points"]) <= Fraction(1, 2) for r in rows)


def test_run_full_storage_is_free(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--k", "2", "--n", "4", "--d", "16", "--storage", "4", "--iters", "20", "--out", str(out)]) == 0
    assert all(r["rate_bits"] == "0" for r in read_csv(out))


def test_run_exact_column_and_memory_share(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--k", "3", "--n", "6", "--d", "12", "--storage", "3", "--iters", "10", "--exact", "--out", str(out)]) == 0
    rows = read_csv(out)
    for r in rows:
        assert Fraction(r["rate_points_exact"]) * 12 == int(r["rate_bits"])


def test_run_output_is_byte_deterministic(tmp_path):
    args = ["run", "--k", "3", "--n", "6", "--d", "4", "--storage", "4", "--iters", "30", "--seed", "3"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--k", "3", "--n", "4", "--d", "2", "--storage", "2"],
        ["run", "--k", "3", "--n", "3", "--d", "3", "--storage", "2"],
        ["run", "--k", "3", "--n", "3", "--d", "2", "--storage", "banana"],
        ["run", "--k", "3", "--n", "3", "--d", "2", "--storage", "5"],
        ["run", "--k", "3", "--n", "3", "--d", "2", "--storage", "2", "--scheme", "k3min"],
        ["worstcase", "--k", "3", "--n", "6", "--d", "2", "--storage", "4", "--max-pairs", "100"],
        ["sweep", "--k", "3", "--n", "3", "--d", "2", "--points", "5"],
        ["run", "--k", "3"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


def test_worstcase_k2(capsys):
    assert main(["worstcase", "--k", "2", "--n", "4", "--d", "8", "--storage", "2"]) == 0
    out = capsys.readouterr().out
    assert "max_rate: 2 (2.000000)" in out
    assert "pairs_checked: 36" in out
    assert "all_decoded: true" in out
    assert "argmax: 0,0,1,1 -> 1,1,0,0" in out


def test_worstcase_k3(capsys):
    assert main(["worstcase", "--k", "3", "--n", "3", "--d", "2", "--storage", "2"]) == 0
    out = capsys.readouterr().out
    assert "max_rate: 1/2 (0.500000)" in out and "pairs_checked: 36" in out
    assert main(["worstcase", "--k", "3", "--n", "3", "--d", "2", "--storage", "1"]) == 0
    assert "max_rate: 2 (2.000000)" in capsys.readouterr().out


def test_worstcase_explicit_memory_share(capsys):
    # sharing between N/3 and N lands above the optimal curve at S = 2N/3
    assert main(["worstcase", "--k", "3", "--n", "3", "--d", "4", "--storage", "2", "--scheme", "k3min+full"]) == 0
    out = capsys.readouterr().out
    assert "max_rate: 1 (1.000000)" in out and "optimal: 1/2" in out


def test_sweep_k3(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--k", "3", "--n", "3", "--d", "12", "--points", "5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["S"] for r in rows] == ["1.000000", "1.500000", "2.000000", "2.500000", "3.000000"]
    for r in rows:
        assert r["measured"] == r["optimal"]
        assert Fraction(r["measured"]) >= Fraction(r["lower_bound"])


def test_sweep_k2_exact(tmp_path):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--k", "2", "--n", "4", "--d", "8", "--points", "3", "--exact", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["measured_exact"] for r in rows] == ["2", "1", "0"]
    assert list(rows[0]) == ["S", "measured", "optimal", "lower_bound", "S_exact", "measured_exact", "optimal_exact", "lower_bound_exact"]


def test_sweep_stdout(capsys):
    assert main(["sweep", "--k", "2", "--n", "4", "--d", "8", "--points", "3"]) == 0
    text = capsys.readouterr().out
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["S", "measured", "optimal", "lower_bound"]
    assert [r[1] for r in rows[1:]] == ["2.000000", "1.000000", "0.000000"]


def test_violation_exits_1(monkeypatch, capsys):
    from codedshuffle import cli
    from codedshuffle.core import InvariantViolation

    def boom(run, nxt):
        raise InvariantViolation("budget", "simulated")

    monkeypatch.setattr(cli, "step", boom)
    assert main(["run", "--k", "3", "--n", "3", "--d", "2", "--storage", "2", "--iters", "1"]) == 1
    assert "budget" in capsys.readouterr().err
