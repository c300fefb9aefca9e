"""Comparison sweeps: barycentric minimal sampling (weights from the null space
of a conjugate-partitioned Loewner matrix) and Stoer-Bulirsch path-II
continued-fraction interpolation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ErrorTracePoint,
    EvaluationSingularityError,
    GridExhaustedError,
    InvalidInputError,
    SampleSet,
    complex_frequency,
    relative_errors,
    relative_matrix_error,
    spectral_norms,
)
from .sweep import SweepConfig, SweepResult, TestGrid, pick_max


# -- barycentric ----------------------------------------------------------------

_NULL_RTOL = 1e-13


@dataclass(frozen=True)
class BarycentricModel:
    nodes: np.ndarray  # s_j = j 2 pi f_j
    node_values: np.ndarray  # (m, p, p)
    weights: np.ndarray  # (m,), unit norm

    @classmethod
    def fit(cls, data: SampleSet) -> "BarycentricModel":
        return cls(data.s, data.responses, pradovera_weights(data))

    def _terms(self, s: np.ndarray):
        diff = s[:, None] - self.nodes[None, :]
        hit = diff == 0
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.weights[None, :] / diff
        return c, hit

    def evaluate_many(self, freqs) -> np.ndarray:
        s = complex_frequency(np.atleast_1d(freqs))
        c, hit = self._terms(s)
        c[hit] = 0.0
        den = c.sum(axis=1)
        num = np.einsum("gm,mpq->gpq", c, self.node_values)
        out = np.empty_like(num)
        on_node = hit.any(axis=1)
        good = ~on_node & (den != 0)
        out[good] = num[good] / den[good, None, None]
        if on_node.any():
            out[on_node] = self.node_values[np.argmax(hit[on_node], axis=1)]
        if np.any(~on_node & (den == 0)):
            bad = np.flatnonzero(~on_node & (den == 0))[0]
            raise EvaluationSingularityError(float(np.atleast_1d(freqs)[bad]))
        return out

    def evaluate(self, f: float) -> np.ndarray:
        return self.evaluate_many([f])[0]

    def pseudo_error(self, freqs) -> np.ndarray:
        """|1 / sum_j w_j / (s - s_j)|; zero at the nodes."""
        s = complex_frequency(np.atleast_1d(freqs))
        c, hit = self._terms(s)
        c[hit] = 0.0
        den = c.sum(axis=1)
        with np.errstate(divide="ignore"):
            e = 1.0 / np.abs(den)
        e[hit.any(axis=1)] = 0.0
        return e


def pradovera_loewner(data: SampleSet) -> np.ndarray:
    """Loewner matrix of shape (m p^2, m) matching conjugate points against the
    samples, responses vectorised column by column."""
    s = data.s
    m, p = len(data), data.ports
    vec = data.responses.transpose(0, 2, 1).reshape(m, p * p)  # column-major vec
    num = np.conj(vec)[:, None, :] - vec[None, :, :]  # (i, j, p^2)
    den = np.conj(s)[:, None] - s[None, :]
    blocks = num / den[:, :, None]
    return blocks.transpose(0, 2, 1).reshape(m * p * p, m)


def pradovera_weights(data: SampleSet) -> np.ndarray:
    if len(data) == 0:
        raise InvalidInputError("need at least one sample")
    L = pradovera_loewner(data)
    try:
        _, sv, vh = np.linalg.svd(L)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"SVD failed: {exc}") from exc
    w = vh[-1].conj()
    null = vh[sv <= _NULL_RTOL * sv[0]].conj() if sv[0] > 0 else vh.conj()
    if null.shape[0] > 1:
        # several null directions: the last singular vector may zero out nodes,
        # so take the projection of the all-ones vector instead
        proj = null.T @ (null.conj() @ np.ones(L.shape[1]))
        if np.linalg.norm(proj) > 1e-8:
            w = proj
    # fix the arbitrary phase: first non-negligible component real positive
    k = int(np.argmax(np.abs(w) > 1e-14 * np.max(np.abs(w))))
    w = w * (np.abs(w[k]) / w[k])
    return w / np.linalg.norm(w)


def pradovera_evaluate(model: BarycentricModel, f: float) -> np.ndarray:
    return model.evaluate(f)


def pradovera_pseudo_error(model: BarycentricModel, f: float) -> float:
    return float(model.pseudo_error([f])[0])


def pradovera_sweep(solver, grid: TestGrid, config: SweepConfig, with_memory: bool = True,
                    f_start: float | None = None) -> SweepResult:
    """Greedy barycentric sweep starting from one sample (f_min by default).

    Memoryless stops at the first new sample predicted within tol; the memory
    variant needs ``config.memory_target`` consecutive successes.
    """
    target = config.memory_target if with_memory else 1
    f0 = grid.f_min if f_start is None else grid.nearest(f_start)
    data = solver.sample([f0])
    calls = 1
    trace: list[ErrorTracePoint] = []
    memory = 0
    message = ""
    for it in range(1, config.max_iterations + 1):
        model = BarycentricModel.fit(data)
        curve = model.pseudo_error(grid.frequencies)
        try:
            f_new = pick_max(curve, grid, data.freqs)
        except GridExhaustedError as exc:
            message = str(exc)
            break
        h_new = solver.query(f_new)
        calls += 1
        e_act = relative_matrix_error(model.evaluate(f_new), h_new)
        memory = memory + 1 if e_act <= config.tol else 0
        data = data.insert(f_new, h_new)
        k = int(np.searchsorted(grid.frequencies, f_new))
        trace.append(ErrorTracePoint(it, f_new, float(curve[k]), e_act, (len(data) - 1, len(data) - 1), memory))
        if memory >= target:
            break
    else:
        message = f"max_iterations={config.max_iterations} reached"
    final = BarycentricModel.fit(data)
    return SweepResult(
        algorithm="pradovera" if with_memory else "pradovera_memoryless",
        chosen_samples=data,
        final_model=final,
        trace=trace,
        grid=grid,
        grid_response=final.evaluate_many(grid.frequencies),
        solver_calls=calls,
        converged=memory >= target,
        message=message,
    )


# -- Stoer-Bulirsch path II -------------------------------------------------------

@dataclass(frozen=True)
class SBTable:
    """Interpolation nodes; the triangular table is rebuilt per query."""

    freqs: np.ndarray
    values: np.ndarray  # (n, p, p)

    def __post_init__(self):
        if np.any(np.diff(self.freqs) <= 0):
            raise InvalidInputError("nodes must be sorted and distinct")

    @classmethod
    def from_samples(cls, data: SampleSet) -> "SBTable":
        return cls(data.freqs, data.responses)

    def columns(self, freqs) -> tuple[np.ndarray, np.ndarray]:
        """Top entries of the last two table columns at every query frequency.

        Column k holds H_{k,i}, the continued fraction through nodes i..i+k,
        so the last column interpolates all n nodes and the one before omits
        the highest node. Returns (H_last, H_previous), each (G, p, p).
        """
        x = np.atleast_1d(np.asarray(freqs, dtype=float))
        fn = self.freqs
        n = fn.shape[0]
        # rows: node index i, then query, then matrix entry
        vals = np.broadcast_to(self.values[:, None], (n, x.size) + self.values.shape[1:])
        prev2 = np.zeros_like(vals)  # column k-2 (starts as H_{-1} = 0)
        prev1 = vals.copy()  # column k-1 (starts as data)
        older = prev1  # column returned as "previous" when n == 1
        xx = x[None, :, None, None]
        for k in range(1, n):
            i_count = n - k
            A = prev1[1:i_count + 1]  # H_{k-1, i+1}
            B = prev1[:i_count]  # H_{k-1, i}
            C = prev2[1:i_count + 1]  # H_{k-2, i+1}
            lo = fn[:i_count][:, None, None, None]
            hi = fn[k:k + i_count][:, None, None, None]
            d1 = A - C
            d2 = B - C
            n1 = xx - lo
            n2 = hi - xx
            num = (hi - lo) * d1 * d2
            den = n1 * d2 + n2 * d1
            with np.errstate(divide="ignore", invalid="ignore"):
                nxt = C + num / den
            bad = (den == 0) | ~np.isfinite(nxt)
            nxt = np.where(bad, C, nxt)
            older = prev1
            prev2, prev1 = prev1[:i_count + 1], nxt
        return prev1[0], older[0]

    def evaluate_many(self, freqs) -> np.ndarray:
        return self.columns(freqs)[0]

    def evaluate(self, f: float) -> np.ndarray:
        return self.evaluate_many([f])[0]


def sb_evaluate(table: SBTable, f: float) -> np.ndarray:
    return table.evaluate(f)


def sb_pseudo_error(table: SBTable, freqs) -> np.ndarray:
    top, prev = table.columns(freqs)
    e = relative_errors(prev, top) if top.size else np.zeros(0)
    e[~np.isfinite(e)] = np.inf
    return e


def sb_sweep(solver, grid: TestGrid, config: SweepConfig, n_initial: int = 5) -> SweepResult:
    if len(grid) < n_initial:
        raise InvalidInputError(f"grid needs at least {n_initial} points")
    f0 = np.linspace(grid.f_min, grid.f_max, n_initial)
    if config.snap_to_grid:
        f0 = np.unique([grid.nearest(f) for f in f0])
    data = solver.sample(f0)
    calls = len(data)
    trace: list[ErrorTracePoint] = []
    memory = 0
    message = ""
    for it in range(1, config.max_iterations + 1):
        table = SBTable.from_samples(data)
        top, prev = table.columns(grid.frequencies)
        curve = relative_errors(prev, top)
        curve[~np.isfinite(curve)] = np.inf
        try:
            f_new = pick_max(curve, grid, data.freqs)
        except GridExhaustedError as exc:
            message = str(exc)
            break
        k = int(np.searchsorted(grid.frequencies, f_new))
        h_new = solver.query(f_new)
        calls += 1
        e_act = relative_matrix_error(top[k], h_new)
        memory = memory + 1 if e_act <= config.tol else 0
        data = data.insert(f_new, h_new)
        trace.append(ErrorTracePoint(it, f_new, float(curve[k]), e_act, (len(data) - 2, len(data) - 1), memory))
        if memory >= config.memory_target:
            break
    else:
        message = f"max_iterations={config.max_iterations} reached"
    final = SBTable.from_samples(data)
    return SweepResult(
        algorithm="sb",
        chosen_samples=data,
        final_model=final,
        trace=trace,
        grid=grid,
        grid_response=final.evaluate_many(grid.frequencies),
        solver_calls=calls,
        converged=memory >= config.memory_target,
        message=message,
    )


__all__ = [
    "BarycentricModel",
    "SBTable",
    "pradovera_evaluate",
    "pradovera_loewner",
    "pradovera_pseudo_error",
    "pradovera_sweep",
    "pradovera_weights",
    "sb_evaluate",
    "sb_pseudo_error",
    "sb_sweep",
    "spectral_norms",
]
