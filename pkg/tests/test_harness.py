import csv
import io
import json
import math
from fractions import Fraction

import pytest

from onlinefair import harness
from onlinefair.cli import _parse_k_range, main
from onlinefair.evaluation import EngineConfig


def test_examples_regression_passes():
    report = harness.run_examples()
    assert report.passed
    pinned = [r for r in report.rows if r["status"] != "INFO"]
    assert len(pinned) == len(harness.PINNED_EXAMPLES)


def test_sweep_rows_follow_schema():
    rows = harness.sweep_advice("upper-triangular", 5, "ES", "ranking", range(6))
    assert [r["k"] for r in rows] == list(range(6))
    assert rows[-1]["ratio"] == 1 and rows[-2]["ratio"] == 1
    assert all(a["ratio"] <= b["ratio"] for a, b in zip(rows, rows[1:]))
    text = harness.write_rows(rows)
    header = next(csv.reader(io.StringIO(text)))
    assert header[: len(harness.CSV_COLUMNS)] == harness.CSV_COLUMNS


def test_sweep_monte_carlo_rows_carry_seed_and_stderr():
    rows = harness.sweep_advice("upper-triangular", 6, "ES", "like", [0, 3],
                                EngineConfig("monte-carlo", samples=500, seed=2))
    assert all(r["seed"] == 2 and r["samples"] == 500 and r["value_exact"] is None for r in rows)


def test_figure1_closed_forms():
    rows = harness.figure1_data(10, measured=False)
    get = {(r["mechanism"], r["convention"].split("-")[1], r["k"]): r["ratio"] for r in rows}
    assert get[("advised:ranking", "offline", 0)] == pytest.approx(1 - 1 / math.e)
    assert get[("advised:maximum-like", "offline", 5)] == Fraction(1, 2)
    for mech in ("advised:ranking", "advised:maximum-like", "advised:balanced-like", "advised:like"):
        assert get[(mech, "offline", 10)] == 1
        assert get[(mech, "online", 10)] == pytest.approx(1)
    assert get[("advised:maximum-like", "online", 0)] == 0


def test_maximum_like_adversary_curve_is_k_over_n():
    rows = harness.figure1_data(6, samples=200)
    measured = [r for r in rows if r["family"] == "maximum-like-adversary"]
    assert [r["ratio"] for r in measured] == [Fraction(max(k, 1), 6) for k in range(7)]


def test_table1_small():
    report = harness.table1_check(sizes=((2, 2), (2, 3)), general_count=5)
    assert report.passed
    statuses = {r["status"] for r in report.rows}
    assert statuses <= {"PASS", "INFO", "SKIP"}


def test_dominance_scan():
    report = harness.dominance_scan(2)
    assert report.passed


def test_write_rows_json():
    data = json.loads(harness.write_rows([{"a": Fraction(1, 3), "b": [Fraction(2)]}], "json"))
    assert data == [{"a": "1/3", "b": ["2/1"]}]


def test_parse_k_range():
    assert _parse_k_range("2:4") == [2, 3, 4]
    assert _parse_k_range("0,5") == [0, 5]


def test_cli_round_trip(tmp_path, capsys):
    inst_path = tmp_path / "inst.json"
    assert main(["gen", "--family", "random", "--n", "3", "--m", "3", "--seed", "1", "--out", str(inst_path)]) == 0
    assert main(["evaluate", "--instance", str(inst_path), "--mechanism", "like", "--objective", "ES"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"es", "uw", "ew", "optimum", "reciprocal_ratio"}
    assert main(["evaluate", "--family", "upper-triangular", "--n", "3", "--mechanism", "advised:ranking",
                 "--tape", "101", "--k", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["es"] == "3/1"


def test_cli_subcommands(tmp_path, capsys):
    assert main(["examples"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["sweep", "--n", "4", "--k-range", "0:4", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 5
    out = tmp_path / "fig.csv"
    assert main(["figure1", "--closed-form-only", "--out", str(out)]) == 0
    assert out.read_text().startswith("mechanism,objective")
    assert main(["axioms", "--mechanism", "like", "--max-n", "2", "--axiom", "strategyproof"]) == 0
    assert "SATISFIED" in capsys.readouterr().out
    assert main(["dominance", "--max-n", "2"]) == 0
    assert main(["table1", "--sizes", "2x2", "--general-count", "3"]) == 0


def test_cli_requires_tape_for_advised():
    with pytest.raises(SystemExit):
        main(["evaluate", "--mechanism", "advised:like"])
