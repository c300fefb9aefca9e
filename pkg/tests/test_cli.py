import csv
import json

import numpy as np
import pytest

from lmsweep.cli import build_solver, main, parse_frequency
from lmsweep.core import SampleSet
from lmsweep.touchstone import document, write_file


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.mark.parametrize("text, hz", [("2e9", 2e9), ("50MHz", 5e7), ("1.5 GHz", 1.5e9), ("10kHz", 1e4)])
def test_parse_frequency(text, hz):
    assert parse_frequency(text) == hz


def test_sweep_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["sweep", "--solver", "qwt", "--out", str(out), "--snp"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["algorithm"] == "semi_lm"
    assert report["converged"] is True
    assert report["max_actual_error_db"] <= -60
    assert report["input_samples"] == report["solver_calls"]
    head, rows = _read_csv(out / "model_response.csv")
    assert head == ["f_hz", "S11_re", "S11_im"]
    assert rows.shape == (200, 3)
    head, err = _read_csv(out / "error_curve.csv")
    assert head == ["f_hz", "error_db"]
    assert np.max(err[:, 1]) == pytest.approx(report["max_actual_error_db"], abs=0)
    _, samples = _read_csv(out / "samples.csv")
    assert len(samples) == report["input_samples"]
    assert (out / "model.s1p").exists()


def test_csv_round_trips_exactly(tmp_path):
    from lmsweep.cli import build_config, build_grid, build_parser, run_algorithm
    args = build_parser().parse_args(["sweep", "--solver", "ckt1", "--algo", "full", "--out", str(tmp_path)])
    assert main(["sweep", "--solver", "ckt1", "--algo", "full", "--out", str(tmp_path)]) == 0
    solver = build_solver("ckt1")
    grid = build_grid(args, solver)
    res = run_algorithm("full", solver, grid, build_config(args, "full", solver))
    _, rows = _read_csv(tmp_path / "model_response.csv")
    np.testing.assert_array_equal(rows[:, 0], grid.frequencies)
    np.testing.assert_array_equal(rows[:, 1] + 1j * rows[:, 2], res.grid_response[:, 0, 0])


def test_repeat_runs_identical(tmp_path):
    for d in ("a", "b"):
        main(["sweep", "--solver", "lpf7", "--algo", "full", "--out", str(tmp_path / d)])
    for name in ("model_response.csv", "error_curve.csv", "samples.csv"):
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
    a = json.loads((tmp_path / "a" / "report.json").read_text())
    b = json.loads((tmp_path / "b" / "report.json").read_text())
    a.pop("wall_time_s"), b.pop("wall_time_s")
    assert a == b


def test_two_port_columns(tmp_path):
    main(["sweep", "--solver", "lpf7", "--algo", "sb", "--out", str(tmp_path)])
    head, _ = _read_csv(tmp_path / "model_response.csv")
    assert head == ["f_hz", "S11_re", "S11_im", "S12_re", "S12_im", "S21_re", "S21_im", "S22_re", "S22_im"]


def test_vacuous_tolerance(tmp_path):
    assert main(["sweep", "--solver", "ckt2", "--algo", "full", "--tol-db", "20", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["solver_calls"] == 2 + 3


@pytest.mark.parametrize("argv", [
    ["sweep", "--solver", "qwt", "--q1", "12", "--q2", "8"],
    ["sweep", "--solver", "qwt", "--fmin", "2GHz", "--fmax", "1GHz"],
    ["sweep", "--solver", "osc7", "--algo", "semi"],
    ["sweep", "--solver", "nonsense"],
    ["sweep", "--solver", "qwt", "--fmin", "abc"],
    ["sweep", "--solver", "touchstone:/does/not/exist.s2p"],
    ["sweep", "--solver", "tl:70.7"],
    ["sweep"],
])
def test_usage_errors_exit_2(argv, tmp_path):
    with pytest.raises(SystemExit) as ex:
        main(argv + ["--out", str(tmp_path)])
    assert ex.value.code == 2


def test_touchstone_strict_off_grid(tmp_path):
    f = np.linspace(1e9, 2e9, 11)
    data = SampleSet(f, (0.3 + 0.1j) / (1 + 1j * f / 1.5e9))
    path = write_file(document(data), tmp_path / "d.s1p")
    ok = tmp_path / "ok"
    assert main(["sweep", "--solver", f"touchstone:{path}", "--algo", "full", "--out", str(ok)]) == 0
    bad = tmp_path / "bad"
    code = main(["sweep", "--solver", f"touchstone:{path}", "--algo", "full",
                 "--grid-step", "33MHz", "--out", str(bad)])
    assert code == 1
    report = json.loads((bad / "report.json").read_text())
    assert report["converged"] is False
    assert "OffGridError" in report["message"]
    lenient = tmp_path / "lenient"
    assert main(["sweep", "--solver", f"touchstone:{path}", "--algo", "full", "--grid-step", "33MHz",
                 "--lenient", "--out", str(lenient)]) == 0


def test_non_convergence_exit_1(tmp_path):
    code = main(["sweep", "--solver", "lpf7", "--algo", "full", "--max-iter", "1", "--out", str(tmp_path)])
    assert code == 1
    assert json.loads((tmp_path / "report.json").read_text())["converged"] is False


def test_tl_solver_matches_qwt():
    tl = build_solver("tl:70.7@0.25;load=100")
    qwt = build_solver("qwt")
    for f in (0.2e9, 0.55e9, 0.9e9):
        np.testing.assert_allclose(tl.query(f), qwt.query(f), rtol=1e-3)


def test_compare_table(tmp_path, capsys):
    assert main(["compare", "--solver", "lpf7", "--out", str(tmp_path)]) == 0
    table = capsys.readouterr().out
    for name in ("semi_lm", "fully_lm", "sb", "pradovera"):
        assert name in table
    with open(tmp_path / "comparison.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["algorithm"] for r in rows] == ["semi_lm", "fully_lm", "sb", "pradovera"]
    calls = {r["algorithm"]: int(r["solver_calls"]) for r in rows}
    assert calls["sb"] >= calls["semi_lm"]


def test_compare_constant(tmp_path):
    f = np.linspace(1e9, 2e9, 101)
    path = write_file(document(SampleSet(f, np.full(101, 0.25 + 0j))), tmp_path / "c.s1p")
    assert main(["compare", "--solver", f"touchstone:{path}", "--length-m", "0.01",
                 "--out", str(tmp_path)]) == 0
    with open(tmp_path / "comparison.csv", newline="") as fh:
        rows = {r["algorithm"]: r for r in csv.DictReader(fh)}
    assert rows["fully_lm"]["solver_calls"] == "5"
    assert rows["semi_lm"]["solver_calls"] == "5"
    assert rows["sb"]["solver_calls"] == "8"
    assert rows["pradovera"]["solver_calls"] == "4"


def test_compare_memoryless_row(tmp_path):
    code = main(["compare", "--solver", "osc7", "--pradovera-memoryless", "--length-m", "0.3",
                 "--out", str(tmp_path)])
    with open(tmp_path / "comparison.csv", newline="") as fh:
        rows = {r["algorithm"]: r for r in csv.DictReader(fh)}
    assert float(rows["pradovera_memoryless"]["max_actual_error_db"]) > -60
    assert code in (0, 1)


def test_compare_records_failures(tmp_path):
    code = main(["compare", "--solver", "osc7", "--out", str(tmp_path)])
    assert code == 1
    with open(tmp_path / "comparison.csv", newline="") as fh:
        rows = {r["algorithm"]: r for r in csv.DictReader(fh)}
    assert rows["semi_lm"]["converged"] == "False"
    assert "length" in rows["semi_lm"]["message"]
    assert rows["fully_lm"]["converged"] == "True"
