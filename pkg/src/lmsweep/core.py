"""Shared types, norms and error metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 3e8


class LMSweepError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(LMSweepError, ValueError):
    pass


class InsufficientDataError(LMSweepError, ValueError):
    pass


class SingularDenominatorError(LMSweepError, ZeroDivisionError):
    def __init__(self, i: int, j: int, value: complex):
        self.i, self.j, self.value = i, j, value
        super().__init__(f"s_a[{j}] == s_b[{i}] == {value}: Loewner denominator vanishes")


class EvaluationSingularityError(LMSweepError, ArithmeticError):
    def __init__(self, f: float):
        self.f = f
        super().__init__(f"model is singular at f = {f!r} Hz")


class GridExhaustedError(LMSweepError):
    pass


def complex_frequency(f):
    """s = j*2*pi*f for scalar or array frequencies in hertz."""
    return 2j * np.pi * np.asarray(f, dtype=float)


def as_response(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"response must be a square matrix, got shape {a.shape}")
    return a


def spectral_norm(m) -> float:
    """Largest singular value of a complex matrix."""
    a = np.asarray(m, dtype=complex)
    if a.ndim < 2:
        a = np.atleast_2d(a)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def spectral_norms(stack) -> np.ndarray:
    """Spectral norms of a stack of matrices with shape (..., p, p)."""
    a = np.asarray(stack, dtype=complex)
    return np.linalg.svd(a, compute_uv=False)[..., 0]


def relative_matrix_error(approx, truth) -> float:
    """||approx - truth||_2 / ||truth||_2, +inf if truth is the zero matrix."""
    a = np.asarray(approx, dtype=complex)
    t = np.asarray(truth, dtype=complex)
    if a.shape != t.shape:
        raise InvalidInputError(f"shape mismatch {a.shape} vs {t.shape}")
    den = spectral_norm(t)
    num = spectral_norm(a - t)
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def relative_errors(approx, truth) -> np.ndarray:
    """Vectorised relative_matrix_error over stacks of shape (n, p, p)."""
    num = spectral_norms(np.asarray(approx) - np.asarray(truth))
    den = spectral_norms(truth)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out[(den == 0) & (num == 0)] = 0.0
    out[(den == 0) & (num != 0)] = np.inf
    return out


def to_db(e: float) -> float:
    """20*log10(e). Raises for e <= 0; see to_db_or_sentinel for reporting."""
    if not e > 0:
        raise InvalidInputError(f"dB of non-positive value {e}")
    return 20.0 * math.log10(e)


def to_db_or_sentinel(e: float) -> float:
    return -math.inf if e <= 0 else to_db(e)


def from_db(db: float) -> float:
    return 10.0 ** (db / 20.0)


@dataclass(frozen=True)
class SampleSet:
    """Ordered frequency samples (hertz) with p x p complex responses.

    ``freqs`` has shape (n,), ``responses`` has shape (n, p, p).
    """

    freqs: np.ndarray
    responses: np.ndarray
    ports: int = field(init=False)

    def __post_init__(self):
        f = np.array(self.freqs, dtype=float).reshape(-1)
        h = np.array(self.responses, dtype=complex)
        if h.ndim == 1:
            h = h.reshape(-1, 1, 1)
        if h.ndim != 3 or h.shape[1] != h.shape[2]:
            raise InvalidInputError(f"responses must have shape (n, p, p), got {h.shape}")
        if h.shape[0] != f.shape[0]:
            raise InvalidInputError("frequency and response counts differ")
        if np.any(~np.isfinite(f)) or np.any(f <= 0):
            raise InvalidInputError("frequencies must be finite and strictly positive")
        if np.any(np.diff(f) <= 0):
            raise InvalidInputError("frequencies must be strictly increasing without duplicates")
        f.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "responses", h)
        object.__setattr__(self, "ports", h.shape[1])

    def __len__(self) -> int:
        return self.freqs.shape[0]

    @property
    def s(self) -> np.ndarray:
        return complex_frequency(self.freqs)

    def insert(self, f: float, h) -> "SampleSet":
        """Return a new set with (f, h) placed in ascending position."""
        h = as_response(h)
        if h.shape[0] != self.ports:
            raise InvalidInputError("port count mismatch")
        k = int(np.searchsorted(self.freqs, f))
        if k < len(self) and self.freqs[k] == f:
            raise InvalidInputError(f"frequency {f} already sampled")
        return SampleSet(np.insert(self.freqs, k, f), np.insert(self.responses, k, h, axis=0))

    def shifted(self, d) -> "SampleSet":
        return SampleSet(self.freqs, self.responses - np.asarray(d, dtype=complex))

    @classmethod
    def from_pairs(cls, pairs) -> "SampleSet":
        pairs = list(pairs)
        return cls([f for f, _ in pairs], np.stack([as_response(h) for _, h in pairs]))


@dataclass(frozen=True)
class ErrorTracePoint:
    iteration: int
    f_new: float
    pseudo_error: float
    actual_error: float
    model_order: tuple[int, int]
    memory_counter: int
