"""Loewner-pencil state models: partitioning, MFTI/VFTI construction, SVD
reduction and evaluation.

Realisations have the descriptor form ``H(s) = C (sE - A)^{-1} B + D`` with
``E = -L`` and ``A = -sL`` where ``L``/``sL`` are the Loewner and shifted
Loewner matrices of the (D-shifted) data.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .core import (
    EvaluationSingularityError,
    InsufficientDataError,
    InvalidInputError,
    LMSweepError,
    SampleSet,
    SingularDenominatorError,
    as_response,
    complex_frequency,
)

DELTA_F = 1e-5
NOISE_FLOOR = 1e-14
EXPANSION_COND_LIMIT = 1e15
_RANK_RTOL = 1e-13


class NoValidExpansionPointError(LMSweepError):
    pass


@dataclass(frozen=True)
class PartitionedData:
    """Right (a) and left (b) interpolation sets after conjugate expansion."""

    s_a: np.ndarray
    H_a: np.ndarray
    s_b: np.ndarray
    H_b: np.ndarray

    def __post_init__(self):
        if len(self.s_a) != len(self.H_a) or len(self.s_b) != len(self.H_b):
            raise InvalidInputError("frequency/response length mismatch in partition")
        _check_disjoint(self.s_a, self.s_b)

    @property
    def ports(self) -> int:
        return self.H_a.shape[1]


def _check_disjoint(s_a, s_b):
    hits = np.argwhere(s_a[None, :] == s_b[:, None])
    if hits.size:
        i, j = hits[0]
        raise SingularDenominatorError(int(i), int(j), complex(s_a[j]))


def _require(data: SampleSet, n_min: int):
    if len(data) < n_min:
        raise InsufficientDataError(f"need at least {n_min} samples, got {len(data)}")


def partition_even_odd(data: SampleSet) -> PartitionedData:
    """Even-odd split: odd-numbered samples and their conjugates go to the
    b-set, even-numbered ones to the a-set. For odd n the last sample is split
    across the sets (s_n in b, conj(s_n) in a) so the sets stay disjoint."""
    _require(data, 2)
    s, H = data.s, data.responses
    n = len(data)
    s_a, H_a, s_b, H_b = [], [], [], []
    paired = n if n % 2 == 0 else n - 1
    for k in range(paired):
        ss, hs = (s_b, H_b) if k % 2 == 0 else (s_a, H_a)
        ss += [s[k], np.conj(s[k])]
        hs += [H[k], np.conj(H[k])]
    if n % 2:
        s_b.append(s[-1])
        H_b.append(H[-1])
        s_a.append(np.conj(s[-1]))
        H_a.append(np.conj(H[-1]))
    return PartitionedData(np.array(s_a), np.array(H_a), np.array(s_b), np.array(H_b))


def partition_positive_negative(data: SampleSet) -> PartitionedData:
    _require(data, 1)
    s, H = data.s, data.responses
    return PartitionedData(np.conj(s), np.conj(H), s.copy(), H.copy())


class _Realization:
    """Shared evaluation for full and reduced descriptor realisations."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def order(self) -> int:
        return self.E.shape[0]

    @property
    def ports(self) -> int:
        return self.D.shape[0]

    def _solve(self, s: complex) -> np.ndarray | None:
        try:
            x = np.linalg.solve(s * self.E - self.A, self.B)
        except np.linalg.LinAlgError:
            return None
        return x if np.all(np.isfinite(x)) else None

    def evaluate(self, f: float, delta_f: float = DELTA_F) -> np.ndarray:
        """Response at a single frequency f (Hz), D included."""
        if self.order == 0:
            return self.D.copy()
        s = complex_frequency(f)
        x = self._solve(s)
        if x is None:
            x = self._solve(complex_frequency(f + delta_f))
        if x is None:
            raise EvaluationSingularityError(float(f))
        return self.C @ x + self.D

    @cached_property
    def _qz(self):
        AA, BB, Q, Z = scipy.linalg.qz(self.A, self.E, output="complex")
        return AA, BB, self.C @ Z, Q.conj().T @ self.B

    def _triangular_eval(self, s: np.ndarray):
        AA, BB, Ct, Bt = self._qz
        r, p = Bt.shape
        y = np.empty((s.shape[0], r, p), dtype=complex)
        ok = np.ones(s.shape[0], dtype=bool)
        scale = np.abs(s) * np.max(np.abs(BB)) + np.max(np.abs(AA))
        for i in range(r - 1, -1, -1):
            diag = s * BB[i, i] - AA[i, i]
            rhs = np.broadcast_to(Bt[i], (s.shape[0], p)).copy()
            if i + 1 < r:
                row = s[:, None] * BB[i, i + 1:] - AA[i, i + 1:]
                rhs -= np.einsum("gk,gkp->gp", row, y[:, i + 1:, :])
            bad = np.abs(diag) <= 1e-14 * scale
            ok &= ~bad
            diag = np.where(bad, 1.0, diag)
            y[:, i, :] = rhs / diag[:, None]
        h = np.einsum("pk,gkq->gpq", Ct, y)
        ok &= np.all(np.isfinite(h), axis=(1, 2))
        return h, ok

    def evaluate_many(self, freqs, delta_f: float = DELTA_F, strict: bool = True) -> np.ndarray:
        """Responses on an array of frequencies, shape (G, p, p), D included.

        Uses a complex QZ factorisation of (A, E) so each frequency costs one
        triangular solve. Singular points are retried at f + delta_f; points
        still singular raise (strict) or come back as NaN.
        """
        f = np.atleast_1d(np.asarray(freqs, dtype=float))
        out = np.broadcast_to(self.D, (f.shape[0],) + self.D.shape).copy()
        if self.order == 0 or f.shape[0] == 0:
            return out
        h, ok = self._triangular_eval(complex_frequency(f))
        if not np.all(ok):
            bad = np.flatnonzero(~ok)
            h2, ok2 = self._triangular_eval(complex_frequency(f[bad] + delta_f))
            h[bad] = h2
            if not np.all(ok2):
                if strict:
                    raise EvaluationSingularityError(float(f[bad[~ok2][0]]))
                h[bad[~ok2]] = np.nan
        return out + h

    def __call__(self, f):
        if np.ndim(f) == 0:
            return self.evaluate(float(f))
        return self.evaluate_many(f)


@dataclass(frozen=True, eq=False)
class StateModel(_Realization):
    """Unreduced Loewner realisation (E, A, B, C, D) with its source points."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    s_a: np.ndarray
    s_b: np.ndarray

    @property
    def L(self) -> np.ndarray:
        return -self.E

    @property
    def sL(self) -> np.ndarray:
        return -self.A


def _shift(D, p) -> np.ndarray:
    if D is None:
        return np.zeros((p, p), dtype=complex)
    D = as_response(D)
    if D.shape != (p, p):
        raise InvalidInputError(f"D must be {p}x{p}")
    return D


def build_mfti(part: PartitionedData, D=None) -> StateModel:
    """Matrix-format Loewner pencil of order n*p; D is subtracted from the data."""
    n, p = len(part.s_a), part.ports
    D = _shift(D, p)
    Ha, Hb = part.H_a - D, part.H_b - D
    den = part.s_a[None, :] - part.s_b[:, None]
    L = (Ha[None, :] - Hb[:, None]) / den[:, :, None, None]
    sL = (part.s_a[None, :, None, None] * Ha[None, :]
          - part.s_b[:, None, None, None] * Hb[:, None]) / den[:, :, None, None]
    N = n * p
    L = L.transpose(0, 2, 1, 3).reshape(N, N)
    sL = sL.transpose(0, 2, 1, 3).reshape(N, N)
    B = Hb.reshape(N, p)
    C = Ha.transpose(1, 0, 2).reshape(p, N)
    return StateModel(-L, -sL, B, C, D, part.s_a.copy(), part.s_b.copy())


def tangential_directions(n: int, p: int) -> np.ndarray:
    """Index m_i = (i mod p) of the unit direction used for the i-th point."""
    return np.arange(n) % p


def build_vfti(part: PartitionedData, D=None) -> StateModel:
    """Vector-format tangential Loewner pencil of order n with unit directions."""
    n, p = len(part.s_a), part.ports
    D = _shift(D, p)
    Ha, Hb = part.H_a - D, part.H_b - D
    m = tangential_directions(n, p)
    den = part.s_a[None, :] - part.s_b[:, None]
    # l_i H r_j for every (i, j): entry (m_i, m_j)
    la = Ha[np.arange(n)[None, :], m[:, None], m[None, :]]
    lb = Hb[np.arange(n)[:, None], m[:, None], m[None, :]]
    L = (la - lb) / den
    sL = (part.s_a[None, :] * la - part.s_b[:, None] * lb) / den
    B = Hb[np.arange(n), m, :]
    C = Ha[np.arange(n), :, m].T
    return StateModel(-L, -sL, B, C, D, part.s_a.copy(), part.s_b.copy())


@dataclass(frozen=True)
class PencilSVD:
    x: complex
    U: np.ndarray
    sv: np.ndarray
    Vh: np.ndarray


def _numerical_rank(sv: np.ndarray) -> int:
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.count_nonzero(sv > _RANK_RTOL * sv[0]))


def pencil_svd(model: StateModel, x: complex | None = None) -> PencilSVD:
    """SVD of x*L - sL at a data point x that is not a pencil eigenvalue.

    Candidates are tried in the order s_a, s_b. A candidate whose pencil is
    numerically singular is only accepted if its rank matches rank([L, sL]),
    i.e. the deficiency comes from the data rather than from x being a pole.
    """
    L, sL = model.L, model.sL
    candidates = [x] if x is not None else list(model.s_a) + list(model.s_b)
    target = None
    best = None
    for cand in candidates:
        M = cand * L - sL
        if not np.all(np.isfinite(M)):
            continue
        U, sv, Vh = np.linalg.svd(M)
        res = PencilSVD(complex(cand), U, sv, Vh)
        if sv.size == 0 or sv[-1] > sv[0] / EXPANSION_COND_LIMIT or x is not None:
            return res
        if target is None:
            target = _numerical_rank(np.linalg.svd(np.hstack([L, sL]), compute_uv=False))
        rank = _numerical_rank(sv)
        if rank >= target:
            return res
        if best is None or rank > _numerical_rank(best.sv):
            best = res
    if best is None:
        raise NoValidExpansionPointError("no finite expansion point for the pencil")
    return best


def select_order(sv: np.ndarray, q: int) -> int:
    """Smallest r whose cumulative singular-value share exceeds 1 - 10^-q."""
    if sv.size == 0 or sv[0] == 0:
        return 0
    clean = np.where(sv > NOISE_FLOOR * sv[0], sv, 0.0)
    cum = np.cumsum(clean)
    share = cum / cum[-1]
    return int(np.argmax(share > 1.0 - 10.0 ** (-q)) + 1)


@dataclass(frozen=True, eq=False)
class ReducedModel(_Realization):
    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    r: int
    q: int
    singular_values: np.ndarray
    x: complex


def reduce(model: StateModel, q: int, x: complex | None = None,
           svd: PencilSVD | None = None) -> ReducedModel:
    """Project the pencil onto its leading r singular directions.

    ``svd`` may be passed in to share one factorisation between several q.
    """
    if not 6 <= q <= 12:
        raise InvalidInputError(f"q must lie in [6, 12], got {q}")
    if svd is None:
        svd = pencil_svd(model, x)
    r = select_order(svd.sv, q)
    Y = svd.U[:, :r]
    X = svd.Vh[:r].conj().T
    Yh = Y.conj().T
    return ReducedModel(
        E=Yh @ model.E @ X,
        A=Yh @ model.A @ X,
        B=Yh @ model.B,
        C=model.C @ X,
        D=model.D,
        r=r,
        q=q,
        singular_values=svd.sv.copy(),
        x=svd.x,
    )


def evaluate(model: _Realization, f: float, delta_f: float = DELTA_F) -> np.ndarray:
    return model.evaluate(f, delta_f)


def _cond(m: np.ndarray) -> float:
    sv = np.linalg.svd(m, compute_uv=False)
    if sv.size == 0 or sv[-1] == 0:
        return float("inf")
    return float(sv[0] / sv[-1])


def condition_diagnostics(model: StateModel) -> tuple[float, float]:
    """2-norm condition numbers of L and sL (inf when exactly singular)."""
    return _cond(model.L), _cond(model.sL)


def fit(data: SampleSet, q: int | None = 12, D=None, partition=partition_even_odd,
        builder=build_mfti):
    """Convenience: partition, build and (optionally) reduce in one call."""
    model = builder(partition(data), D)
    return model if q is None else reduce(model, q)
