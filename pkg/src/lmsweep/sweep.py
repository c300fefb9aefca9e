"""Fully- and semi-adaptive frequency sweeps driven by two reduced Loewner models.

Each iteration builds one MFTI pencil from all samples so far, reduces it at
two tolerances (q1 < q2), and compares the q2 model evaluated at f + delta_f
against the q1 model at f. The grid point where they disagree most is sent
to the solver next. The sweep stops once ``memory_target`` consecutive new
samples are predicted by the q1 model to within ``tol``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core import (
    SPEED_OF_LIGHT,
    ErrorTracePoint,
    GridExhaustedError,
    InvalidInputError,
    SampleSet,
    relative_errors,
    relative_matrix_error,
)
from .loewner import (
    DELTA_F,
    ReducedModel,
    build_mfti,
    partition_even_odd,
    pencil_svd,
    reduce,
)

log = logging.getLogger(__name__)

MODES = ("fully_adaptive", "semi_adaptive")


@dataclass
class SweepConfig:
    mode: str = "fully_adaptive"
    tol: float = 1e-3
    memory_target: int = 3
    q1: int = 8
    q2: int = 12
    delta_f: float = DELTA_F
    max_iterations: int = 500
    trace_length_l: float | None = None
    # None -> all-ones p x p; a scalar or matrix is used as given
    D_shift: Any = None
    # move initial samples onto the nearest test-grid frequency
    snap_to_grid: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}")
        if not 6 <= self.q1 < self.q2 <= 12:
            raise InvalidInputError("need 6 <= q1 < q2 <= 12")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")
        if self.memory_target < 1:
            raise InvalidInputError("memory_target must be >= 1")
        if not self.delta_f > 0:
            raise InvalidInputError("delta_f must be positive")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")

    def shift(self, p: int) -> np.ndarray:
        if self.D_shift is None:
            return np.ones((p, p), dtype=complex)
        d = np.asarray(self.D_shift, dtype=complex)
        if d.ndim == 0:
            return np.full((p, p), complex(d))
        if d.shape != (p, p):
            raise InvalidInputError(f"D_shift must be {p}x{p}")
        return d


@dataclass(frozen=True)
class TestGrid:
    frequencies: np.ndarray

    __test__ = False  # not a pytest class

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=float).reshape(-1)
        if f.size == 0 or np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise InvalidInputError("grid must be non-empty, positive and strictly increasing")
        f.setflags(write=False)
        object.__setattr__(self, "frequencies", f)

    @classmethod
    def uniform(cls, f_min: float, f_max: float, step: float) -> "TestGrid":
        if not (0 < f_min < f_max) or not step > 0:
            raise InvalidInputError("need 0 < f_min < f_max and step > 0")
        n = int(math.floor((f_max - f_min) / step + 1e-9)) + 1
        f = f_min + step * np.arange(n)
        if f_max - f[-1] > 1e-9 * step:
            f = np.append(f, f_max)
        else:
            f[-1] = f_max
        return cls(f)

    @property
    def f_min(self) -> float:
        return float(self.frequencies[0])

    @property
    def f_max(self) -> float:
        return float(self.frequencies[-1])

    @property
    def step(self) -> float:
        if self.frequencies.size < 2:
            return 0.0
        return float(np.min(np.diff(self.frequencies)))

    def __len__(self):
        return self.frequencies.size

    def nearest(self, f: float) -> float:
        k = int(np.argmin(np.abs(self.frequencies - f)))
        return float(self.frequencies[k])


@dataclass
class SweepResult:
    algorithm: str
    chosen_samples: SampleSet
    final_model: Any
    trace: list[ErrorTracePoint]
    grid: TestGrid
    grid_response: np.ndarray
    solver_calls: int
    converged: bool
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def input_samples(self) -> int:
        return len(self.chosen_samples)


def initial_count(l: float, f_max: float, p: int) -> int:
    """Electrical-size rule: one third-order section per 0.2 wavelength of trace."""
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    raw = 15.0 * max(l, 0.0) * f_max / (p * SPEED_OF_LIGHT)
    # round first so 3.0000000000000004 does not become 4
    return max(2, math.ceil(round(raw, 9)))


def log_grid(f_min: float, f_max: float, n0: int) -> np.ndarray:
    """Initial points crowding towards f_max, endpoints exactly f_min and f_max."""
    if n0 < 2:
        raise InvalidInputError("n0 must be >= 2")
    if not 0 < f_min < f_max:
        raise InvalidInputError("need 0 < f_min < f_max")
    t = np.linspace(np.log10(2 * f_max), np.log10(f_max + f_min), n0)
    f = 2 * f_max + f_min - 10.0 ** t
    f[0], f[-1] = f_min, f_max
    return f


def excluded_mask(grid: TestGrid, existing) -> np.ndarray:
    """Grid points closer than one grid step to an existing sample."""
    g = grid.frequencies
    ex = np.asarray(existing, dtype=float).reshape(-1)
    if ex.size == 0:
        return np.zeros(g.shape, dtype=bool)
    radius = grid.step * (1 - 1e-9)
    k = np.searchsorted(ex, g)
    lo = np.abs(g - ex[np.clip(k - 1, 0, ex.size - 1)])
    hi = np.abs(g - ex[np.clip(k, 0, ex.size - 1)])
    d = np.minimum(lo, hi)
    return (d < radius) | (d == 0)


def pick_max(curve, grid: TestGrid, existing) -> float:
    """Argmax over non-excluded grid points, ties to the lowest frequency."""
    c = np.asarray(curve, dtype=float).copy()
    if c.shape != grid.frequencies.shape:
        raise InvalidInputError("curve and grid lengths differ")
    c[np.isnan(c)] = np.inf
    mask = excluded_mask(grid, existing)
    if np.all(mask):
        raise GridExhaustedError("every grid point is already sampled")
    c[mask] = -np.inf
    return float(grid.frequencies[int(np.argmax(c))])


def next_frequency(curve, grid: TestGrid, existing: SampleSet | None) -> float:
    freqs = existing.freqs if existing is not None else ()
    return pick_max(curve, grid, freqs)


def _curve(m1: ReducedModel, m2: ReducedModel, freqs: np.ndarray, delta_f: float):
    h1 = m1.evaluate_many(freqs, delta_f, strict=False)
    h2 = m2.evaluate_many(freqs + delta_f, delta_f, strict=False)
    # D is shared by both models: the difference is taken in the shifted frame
    e = relative_errors(h2 - m1.D, h1 - m1.D)
    e[~np.isfinite(e)] = np.inf
    return e, h1


def pseudo_error_curve(m1: ReducedModel, m2: ReducedModel, grid: TestGrid,
                       delta_f: float = DELTA_F) -> np.ndarray:
    return _curve(m1, m2, grid.frequencies, delta_f)[0]


def initial_frequencies(grid: TestGrid, config: SweepConfig, p: int) -> np.ndarray:
    if config.mode == "fully_adaptive":
        f0 = np.array([grid.f_min, grid.f_max])
    else:
        if config.trace_length_l is None:
            raise InvalidInputError("semi-adaptive sweep needs trace_length_l")
        n0 = initial_count(config.trace_length_l, grid.f_max, p)
        f0 = log_grid(grid.f_min, grid.f_max, n0)
    if config.snap_to_grid:
        f0 = np.unique([grid.nearest(f) for f in f0])
    return f0


def fit_state(data: SampleSet, D, q1: int, q2: int | None = None):
    model = build_mfti(partition_even_odd(data), D)
    svd = pencil_svd(model)
    m1 = reduce(model, q1, svd=svd)
    m2 = reduce(model, q2, svd=svd) if q2 is not None else None
    return m1, m2


def run_sweep(solver, grid: TestGrid, config: SweepConfig) -> SweepResult:
    p = solver.ports
    D = config.shift(p)
    f0 = initial_frequencies(grid, config, p)
    data = solver.sample(f0)
    calls = len(data)
    trace: list[ErrorTracePoint] = []
    memory = 0
    message = ""
    for it in range(1, config.max_iterations + 1):
        m1, m2 = fit_state(data, D, config.q1, config.q2)
        curve, h1 = _curve(m1, m2, grid.frequencies, config.delta_f)
        try:
            f_new = next_frequency(curve, grid, data)
        except GridExhaustedError as exc:
            message = str(exc)
            break
        k = int(np.searchsorted(grid.frequencies, f_new))
        h_new = solver.query(f_new)
        calls += 1
        e_act = relative_matrix_error(h1[k] - D, h_new - D)
        memory = memory + 1 if e_act <= config.tol else 0
        data = data.insert(f_new, h_new)
        trace.append(ErrorTracePoint(it, f_new, float(curve[k]), e_act, (m1.r, m2.r), memory))
        log.debug("iter %d f=%.6g pseudo=%.3e actual=%.3e r=(%d,%d) memory=%d",
                  it, f_new, curve[k], e_act, m1.r, m2.r, memory)
        if memory >= config.memory_target:
            break
    else:
        message = f"max_iterations={config.max_iterations} reached"
    final, _ = fit_state(data, D, config.q1)
    response = final.evaluate_many(grid.frequencies, config.delta_f, strict=False)
    return SweepResult(
        algorithm="semi_lm" if config.mode == "semi_adaptive" else "fully_lm",
        chosen_samples=data,
        final_model=final,
        trace=trace,
        grid=grid,
        grid_response=response,
        solver_calls=calls,
        converged=memory >= config.memory_target,
        message=message,
    )


def grid_errors(result: SweepResult, reference: np.ndarray, D=None) -> np.ndarray:
    """Per-grid-point relative spectral error of a sweep against reference data,
    measured in the D-shifted frame used by the stopping test."""
    ref = np.asarray(reference, dtype=complex)
    d = np.zeros(ref.shape[1:]) if D is None else np.asarray(D)
    return relative_errors(result.grid_response - d, ref - d)
