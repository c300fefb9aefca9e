"""Command-line front end: ``lmsweep sweep`` and ``lmsweep compare``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import touchstone
from .baselines import pradovera_sweep, sb_sweep
from .core import SPEED_OF_LIGHT, LMSweepError, SampleSet, from_db, relative_errors, to_db_or_sentinel
from .loewner import DELTA_F
from .solvers import (
    F_RESONANCE,
    SolverError,
    SolverOracle,
    Stub,
    TLSegment,
    TabulatedOracle,
    impedance_oracle,
    normalized_oracle,
    oscillatory_system,
    qwt_impedance,
    rational_circuit_1,
    rational_circuit_2,
    stepped_lpf,
    tl_network,
    y_to_s,
    z_to_s,
)
from .sweep import SweepConfig, SweepResult, TestGrid, run_sweep

ALGORITHMS = ("semi", "full", "sb", "pradovera")
_UNITS = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
_DEFAULT_POINTS = 200


class UsageError(LMSweepError):
    pass


@dataclass
class RunReport:
    algorithm: str
    input_samples: int | None
    solver_calls: int
    max_actual_error_db: float | None
    wall_time_s: float
    converged: bool
    message: str = ""
    solver: str = ""


def parse_frequency(text: str) -> float:
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([a-zA-Z]*)\s*", str(text))
    if not m or m.group(2).lower() not in _UNITS:
        raise argparse.ArgumentTypeError(f"bad frequency {text!r} (use e.g. 50MHz, 1.5GHz, 2e9)")
    try:
        value = float(m.group(1)) * _UNITS[m.group(2).lower()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad frequency {text!r}") from None
    if not (value > 0 and math.isfinite(value)):
        raise argparse.ArgumentTypeError(f"frequency must be positive: {text!r}")
    return value


# -- solver presets -----------------------------------------------------------------

def _parse_tl(spec: str, f_res: float) -> SolverOracle:
    """``Z0@LEN[,...][;load=R]``: lines with length in wavelengths at f_res;
    ``open:Z0@LEN`` / ``short:Z0@LEN`` add shunt stubs. With a load the chain
    is a 1-port, otherwise a 2-port."""
    body, _, tail = spec.partition(";")
    load = None
    if tail:
        key, _, val = tail.partition("=")
        if key.strip() != "load" or not val:
            raise UsageError(f"tl: expected ';load=R', got {tail!r}")
        load = float(val)
    elements = []
    for tok in filter(None, (t.strip() for t in body.split(","))):
        kind, _, rest = tok.rpartition(":")
        try:
            z0, length = (float(v) for v in rest.split("@"))
        except ValueError:
            raise UsageError(f"tl: bad element {tok!r}, expected Z0@LENGTH") from None
        seg = TLSegment(z0, length, f_res)
        if kind in ("open", "short"):
            elements.append(Stub(seg, kind))
        elif kind == "":
            elements.append(seg)
        else:
            raise UsageError(f"tl: unknown element kind {kind!r}")
    if not elements:
        raise UsageError("tl: no elements")
    total = sum(e.electrical_length if isinstance(e, TLSegment) else 0.0 for e in elements)
    return tl_network(elements, 1 if load is not None else 2, load=load, name=f"tl:{spec}",
                      trace_length=total * SPEED_OF_LIGHT / f_res)


def _touchstone_oracle(path: str, lenient: bool) -> TabulatedOracle:
    try:
        doc = touchstone.parse_file(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    data = doc.data
    r = doc.option_line.reference_resistance
    if doc.option_line.parameter == "Z":
        data = SampleSet(data.freqs, np.stack([z_to_s(m, r) for m in data.responses]))
    elif doc.option_line.parameter == "Y":
        data = SampleSet(data.freqs, np.stack([y_to_s(m, r) for m in data.responses]))
    return TabulatedOracle(data, strict=not lenient, name=f"touchstone:{path}")


def build_solver(name: str, f_res: float = F_RESONANCE, lenient: bool = False) -> SolverOracle:
    quarter = SPEED_OF_LIGHT / (4 * f_res)
    if name == "qwt":
        return impedance_oracle(qwt_impedance, "S", f_res=f_res, name="qwt", trace_length=quarter)
    if name == "ckt1":
        return impedance_oracle(rational_circuit_1, "S", f_res=f_res, name="ckt1", trace_length=quarter)
    if name == "ckt2":
        return impedance_oracle(rational_circuit_2, "S", f_res=f_res, name="ckt2", trace_length=quarter)
    if name == "osc7":
        return normalized_oracle(oscillatory_system(), 1, f_res, name="osc7")
    if name == "lpf7":
        segs, length = stepped_lpf()
        return tl_network(segs, 2, name="lpf7", trace_length=length)
    if name.startswith("tl:"):
        return _parse_tl(name[3:], f_res)
    if name.startswith("touchstone:"):
        return _touchstone_oracle(name[len("touchstone:"):], lenient)
    raise UsageError(f"unknown solver {name!r}")


def default_band(name: str, f_res: float) -> tuple[float, float]:
    if name == "lpf7":
        return 0.1e9, 10e9
    return 0.05 * f_res, f_res


def build_grid(args, solver: SolverOracle) -> TestGrid:
    if isinstance(solver, TabulatedOracle) and args.fmin is None and args.fmax is None \
            and args.grid_step is None:
        return TestGrid(solver.data.freqs)
    if isinstance(solver, TabulatedOracle):
        lo, hi = solver.band
    else:
        lo, hi = default_band(args.solver, args.f_res)
    f_min = args.fmin if args.fmin is not None else lo
    f_max = args.fmax if args.fmax is not None else hi
    if not f_min < f_max:
        raise UsageError("--fmin must be below --fmax")
    step = args.grid_step if args.grid_step is not None else (f_max - f_min) / (_DEFAULT_POINTS - 1)
    return TestGrid.uniform(f_min, f_max, step)


def build_config(args, algo: str, solver: SolverOracle) -> SweepConfig:
    length = args.length_m if args.length_m is not None else solver.trace_length
    if algo == "semi" and length is None:
        raise UsageError(f"--algo semi needs --length-m for solver {args.solver!r}")
    try:
        return SweepConfig(
            mode="semi_adaptive" if algo == "semi" else "fully_adaptive",
            tol=from_db(args.tol_db),
            memory_target=args.memory,
            q1=args.q1,
            q2=args.q2,
            delta_f=args.delta_f,
            max_iterations=args.max_iter,
            trace_length_l=length,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def run_algorithm(algo: str, solver: SolverOracle, grid: TestGrid, config: SweepConfig,
                  memoryless: bool = False) -> SweepResult:
    if algo in ("semi", "full"):
        return run_sweep(solver, grid, config)
    if algo == "sb":
        return sb_sweep(solver, grid, config)
    if algo == "pradovera":
        return pradovera_sweep(solver, grid, config, with_memory=not memoryless)
    raise UsageError(f"unknown algorithm {algo!r}")


def max_error_db(result: SweepResult, reference: np.ndarray) -> tuple[np.ndarray, float]:
    """Per-point relative spectral error in dB and its maximum."""
    err = relative_errors(result.grid_response, reference)
    err = np.where(np.isfinite(err), err, np.inf)
    db = np.array([to_db_or_sentinel(e) if np.isfinite(e) else np.inf for e in err])
    return db, float(np.max(db))


def _json_number(x):
    return x if x is None or math.isfinite(x) else None


# -- output -----------------------------------------------------------------------

def _matrix_columns(p: int) -> list[str]:
    cols = []
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            cols += [f"S{i}{j}_re", f"S{i}{j}_im"]
    return cols


def _matrix_row(m: np.ndarray) -> list[str]:
    out = []
    for v in m.reshape(-1):
        out += [repr(float(v.real)), repr(float(v.imag))]
    return out


def write_matrix_csv(path: Path, freqs, mats) -> None:
    mats = np.asarray(mats)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_hz"] + _matrix_columns(mats.shape[1]))
        for f, m in zip(freqs, mats):
            w.writerow([repr(float(f))] + _matrix_row(m))


def write_error_csv(path: Path, freqs, err_db) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_hz", "error_db"])
        for f, e in zip(freqs, err_db):
            w.writerow([repr(float(f)), repr(float(e))])


def write_report(path: Path, report: RunReport) -> None:
    d = asdict(report)
    d["max_actual_error_db"] = _json_number(d["max_actual_error_db"])
    path.write_text(json.dumps(d, indent=2, allow_nan=False) + "\n")


# -- commands ---------------------------------------------------------------------

def _execute(algo: str, args, grid: TestGrid, memoryless: bool):
    """Run one algorithm on a fresh oracle. Returns (report, result | None, reference | None)."""
    solver = build_solver(args.solver, args.f_res, args.lenient)
    config = build_config(args, algo, solver)
    label = {"semi": "semi_lm", "full": "fully_lm", "sb": "sb", "pradovera": "pradovera"}[algo]
    t0 = time.perf_counter()
    try:
        result = run_algorithm(algo, solver, grid, config, memoryless)
    except (SolverError, ArithmeticError, LMSweepError) as exc:
        wall = time.perf_counter() - t0
        return RunReport(label, None, solver.call_count, None, wall, False,
                         f"{type(exc).__name__}: {exc}", solver.name), None, None
    wall = time.perf_counter() - t0
    reference = solver.responses(grid.frequencies)
    _, worst = max_error_db(result, reference)
    report = RunReport(result.algorithm if algo != "pradovera" else label, result.input_samples,
                       result.solver_calls, worst, wall, result.converged, result.message, solver.name)
    return report, result, reference


def cmd_sweep(args) -> int:
    solver = build_solver(args.solver, args.f_res, args.lenient)
    grid = build_grid(args, solver)
    build_config(args, args.algo, solver)  # usage errors before any work
    report, result, reference = _execute(args.algo, args, grid, args.pradovera_memoryless)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if result is not None:
        err_db, _ = max_error_db(result, reference)
        write_matrix_csv(out / "model_response.csv", grid.frequencies, result.grid_response)
        write_error_csv(out / "error_curve.csv", grid.frequencies, err_db)
        write_matrix_csv(out / "samples.csv", result.chosen_samples.freqs,
                         result.chosen_samples.responses)
        if args.snp:
            data = SampleSet(grid.frequencies, result.grid_response)
            doc = touchstone.document(data, comments=[f" {report.algorithm} model of {solver.name}"])
            touchstone.write_file(doc, out / f"model.s{data.ports}p")
    write_report(out / "report.json", report)
    err = "n/a" if report.max_actual_error_db is None else f"{report.max_actual_error_db:.1f} dB"
    n = "-" if report.input_samples is None else report.input_samples
    print(f"{report.algorithm}: {n} samples, {report.solver_calls} calls, "
          f"max error {err}, converged={report.converged}")
    if report.message:
        print(report.message, file=sys.stderr)
    return 0 if report.converged else 1


def format_table(reports: list[RunReport]) -> str:
    head = f"{'algorithm':<22}{'samples':>8}{'calls':>7}{'max err (dB)':>14}{'time (s)':>10}  converged"
    lines = [head, "-" * len(head)]
    for r in reports:
        n = "-" if r.input_samples is None else str(r.input_samples)
        e = "-" if r.max_actual_error_db is None else f"{r.max_actual_error_db:.1f}"
        lines.append(f"{r.algorithm:<22}{n:>8}{r.solver_calls:>7}{e:>14}{r.wall_time_s:>10.3f}  {r.converged}")
    return "\n".join(lines)


def cmd_compare(args) -> int:
    solver = build_solver(args.solver, args.f_res, args.lenient)
    grid = build_grid(args, solver)
    reports = []
    for algo in ALGORITHMS:
        memoryless = algo == "pradovera" and args.pradovera_memoryless
        try:
            report, _, _ = _execute(algo, args, grid, memoryless)
        except UsageError as exc:
            label = {"semi": "semi_lm", "full": "fully_lm"}.get(algo, algo)
            report = RunReport(label, None, 0, None, 0.0, False, str(exc), solver.name)
        if memoryless:
            report.algorithm = "pradovera_memoryless"
        reports.append(report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fields = list(RunReport.__dataclass_fields__)
    with (out / "comparison.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in reports:
            w.writerow({k: ("" if v is None else v) for k, v in asdict(r).items()})
    print(format_table(reports))
    return 0 if all(r.converged for r in reports) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--solver", required=True,
                        help="qwt | ckt1 | ckt2 | lpf7 | osc7 | tl:<Z0@LEN,...[;load=R]> | touchstone:<path>")
    common.add_argument("--fmin", type=parse_frequency)
    common.add_argument("--fmax", type=parse_frequency)
    common.add_argument("--grid-step", type=parse_frequency)
    common.add_argument("--tol-db", type=float, default=-60.0)
    common.add_argument("--memory", type=int, default=3)
    common.add_argument("--q1", type=int, default=8)
    common.add_argument("--q2", type=int, default=12)
    common.add_argument("--delta-f", type=float, default=DELTA_F)
    common.add_argument("--max-iter", type=int, default=500)
    common.add_argument("--length-m", type=float,
                        help="trace length for the semi-adaptive initial count (default: solver's own)")
    common.add_argument("--f-res", type=parse_frequency, default=F_RESONANCE,
                        help="physical frequency mapped to 1 Hz for qwt/ckt1/ckt2/osc7 (default 1GHz)")
    common.add_argument("--lenient", action="store_true",
                        help="touchstone solver: interpolate between tabulated points")
    common.add_argument("--pradovera-memoryless", action="store_true")
    common.add_argument("--out", default="lmsweep_out")

    parser = argparse.ArgumentParser(prog="lmsweep", description="Adaptive frequency sweeps with Loewner models")
    sub = parser.add_subparsers(dest="command", required=True)
    sw = sub.add_parser("sweep", parents=[common], help="run one adaptive sweep")
    sw.add_argument("--algo", choices=ALGORITHMS, default="semi")
    sw.add_argument("--snp", action="store_true", help="also write the model as Touchstone")
    sw.set_defaults(func=cmd_sweep)
    cp = sub.add_parser("compare", parents=[common], help="run all four algorithms")
    cp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, touchstone.TouchstoneError) as exc:
        parser.error(str(exc))  # exits 2
    except LMSweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
