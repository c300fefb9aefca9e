"""Frequency-response oracles standing in for a full-wave solver.

Every oracle maps a frequency in hertz to a p x p complex matrix and counts
how often it was queried. ``response`` is the uncounted reference path used
for scoring a finished sweep; ``query`` is what sweep algorithms call.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    SPEED_OF_LIGHT,
    InvalidInputError,
    LMSweepError,
    SampleSet,
    as_response,
)

Z_REF = 50.0
F_RESONANCE = 1e9  # 1 GHz maps to 1 Hz in the normalised frame


class SolverError(LMSweepError):
    def __init__(self, f: float, message: str):
        self.f = f
        super().__init__(f"solver failed at f = {f!r} Hz: {message}")


class OffGridError(SolverError):
    def __init__(self, f: float, nearest: Sequence[float]):
        self.nearest = list(nearest)
        super().__init__(f, f"not a tabulated frequency (nearest: {self.nearest})")


class SolverOracle:
    """Deterministic frequency -> response map with call accounting."""

    reentrant = True

    def __init__(self, func: Callable[[float], np.ndarray], ports: int,
                 band: tuple[float, float] = (0.0, np.inf), name: str = "oracle",
                 trace_length: float | None = None):
        self._func = func
        self.ports = ports
        self.band = (float(band[0]), float(band[1]))
        self.name = name
        self.trace_length = trace_length
        self.call_count = 0
        self._lock = threading.Lock()

    def response(self, f: float) -> np.ndarray:
        h = as_response(self._func(float(f)))
        if h.shape != (self.ports, self.ports):
            raise SolverError(f, f"expected {self.ports}x{self.ports} response, got {h.shape}")
        return h

    def responses(self, freqs) -> np.ndarray:
        return np.stack([self.response(f) for f in np.atleast_1d(freqs)])

    def query(self, f: float) -> np.ndarray:
        with self._lock:
            self.call_count += 1
        try:
            return self.response(f)
        except SolverError:
            raise
        except (ArithmeticError, ValueError) as exc:
            raise SolverError(float(f), str(exc)) from exc

    __call__ = query

    def sample(self, freqs) -> SampleSet:
        freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
        return SampleSet(freqs, np.stack([self.query(f) for f in freqs]))

    def reset(self):
        with self._lock:
            self.call_count = 0

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r}, ports={self.ports}, calls={self.call_count})"


# -- analytic circuits (normalised frame: quarter-wave resonance at 1 Hz) ----------

def qwt_impedance(f, normalized: bool = True, f_res: float = F_RESONANCE):
    """Input impedance of a 70.7 ohm quarter-wave line loaded with 100 ohm."""
    fn = np.asarray(f, dtype=float) if normalized else np.asarray(f, dtype=float) / f_res
    sk = 2j * np.pi * fn * 0.25
    ep, em = np.exp(sk), np.exp(-sk)
    den = 170.7 * ep - 29.3 * em
    if np.any(den == 0):
        raise ZeroDivisionError("quarter-wave impedance denominator vanishes")
    return 70.7 * (170.7 * ep + 29.3 * em) / den


# third-order equivalents of the quarter-wave transformer, highest power first
CKT1_NUM = (2512.0, 1.866e4, 1.305e5)
CKT1_DEN = (1.0, 17.42, 417.3, 1305.0)
CKT2_NUM = (2486.0, 1.82e4, 1.267e5)
CKT2_DEN = (1.0, 17.77, 405.8, 1267.0)


def _ratio(num, den, f, normalized, f_res):
    fn = np.asarray(f, dtype=float) if normalized else np.asarray(f, dtype=float) / f_res
    s = 2j * np.pi * fn
    return np.polyval(num, s) / np.polyval(den, s)


def rational_circuit_1(f, normalized: bool = True, f_res: float = F_RESONANCE):
    return _ratio(CKT1_NUM, CKT1_DEN, f, normalized, f_res)


def rational_circuit_2(f, normalized: bool = True, f_res: float = F_RESONANCE):
    return _ratio(CKT2_NUM, CKT2_DEN, f, normalized, f_res)


def z_to_s(z, z0: float = Z_REF) -> np.ndarray:
    """Impedance matrix (or scalar) to scattering matrix at a real reference."""
    z = as_response(z)
    eye = np.eye(z.shape[0])
    return np.linalg.solve((z + z0 * eye).T, (z - z0 * eye).T).T


def y_to_s(y, z0: float = Z_REF) -> np.ndarray:
    y = as_response(y)
    eye = np.eye(y.shape[0])
    return np.linalg.solve((eye + z0 * y).T, (eye - z0 * y).T).T


def impedance_oracle(zfunc, parameter: str = "S", z0: float = Z_REF,
                     f_res: float = F_RESONANCE, band=(0.0, np.inf), name: str = "",
                     trace_length: float | None = None) -> SolverOracle:
    """1-port oracle over physical frequencies from a normalised-frame impedance.

    ``f_res`` is the physical frequency mapped onto 1 Hz.
    """
    parameter = parameter.upper()
    if parameter not in ("S", "Z"):
        raise InvalidInputError("parameter must be 'S' or 'Z'")

    def func(f):
        z = complex(zfunc(f / f_res))
        return z_to_s(z, z0) if parameter == "S" else np.array([[z]])

    return SolverOracle(func, 1, band, name, trace_length)


# -- transmission-line networks -------------------------------------------------

@dataclass(frozen=True)
class TLSegment:
    """Uniform line: z0 ohms, length as a fraction of a wavelength at f_ref,
    frequency-independent total attenuation ``loss`` in nepers."""

    z0: float
    electrical_length: float
    f_ref: float
    loss: float = 0.0

    def __post_init__(self):
        if not self.z0 > 0 or not self.f_ref > 0:
            raise InvalidInputError("TLSegment needs z0 > 0 and f_ref > 0")
        if self.electrical_length < 0 or self.loss < 0:
            raise InvalidInputError("length and loss must be non-negative")

    def gamma_l(self, f: float) -> complex:
        return self.loss + 2j * np.pi * self.electrical_length * f / self.f_ref

    def abcd(self, f: float) -> np.ndarray:
        gl = self.gamma_l(f)
        ch, sh = np.cosh(gl), np.sinh(gl)
        return np.array([[ch, self.z0 * sh], [sh / self.z0, ch]])

    def y_matrix(self, f: float) -> np.ndarray:
        gl = self.gamma_l(f)
        if gl == 0:
            raise InvalidInputError("zero-length line has no admittance form")
        sh = np.sinh(gl)
        y11 = np.cosh(gl) / (self.z0 * sh)
        y12 = -1.0 / (self.z0 * sh)
        return np.array([[y11, y12], [y12, y11]])


@dataclass(frozen=True)
class Lumped:
    """Series R + L + 1/C impedance. Placed in series in a chain, or as a
    shunt when ``shunt`` is set (or when wired to ground in a topology)."""

    r: float = 0.0
    l: float = 0.0
    c: float | None = None
    shunt: bool = False

    def impedance(self, f: float) -> complex:
        s = 2j * np.pi * f
        z = self.r + s * self.l
        if self.c is not None:
            z += 1.0 / (s * self.c)
        return z

    def abcd(self, f: float) -> np.ndarray:
        z = self.impedance(f)
        if self.shunt:
            return np.array([[1.0, 0.0], [1.0 / z, 1.0]])
        return np.array([[1.0, z], [0.0, 1.0]])


@dataclass(frozen=True)
class Stub:
    """Open- or short-circuited line used as a shunt element."""

    segment: TLSegment
    termination: str = "open"

    def admittance(self, f: float) -> complex:
        gl = self.segment.gamma_l(f)
        t = np.tanh(gl)
        return t / self.segment.z0 if self.termination == "open" else 1.0 / (self.segment.z0 * t)

    def abcd(self, f: float) -> np.ndarray:
        return np.array([[1.0, 0.0], [self.admittance(f), 1.0]])


@dataclass(frozen=True)
class Branch:
    """Element between two nodes; node 0 is ground, nodes 1..p are ports."""

    a: int
    b: int
    element: object


def _chain_abcd(elements, f: float) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for el in elements:
        m = m @ el.abcd(f)
    return m


def abcd_to_s(m: np.ndarray, z0: float = Z_REF) -> np.ndarray:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    den = a + b / z0 + c * z0 + d
    return np.array([
        [(a + b / z0 - c * z0 - d) / den, 2 * (a * d - b * c) / den],
        [2 / den, (-a + b / z0 - c * z0 + d) / den],
    ])


def _topology_y(branches: Sequence[Branch], p: int, f: float) -> np.ndarray:
    nodes = max(max(br.a, br.b) for br in branches)
    Y = np.zeros((nodes + 1, nodes + 1), dtype=complex)
    for br in branches:
        el = br.element
        if isinstance(el, TLSegment):
            y = el.y_matrix(f)
            idx = [br.a, br.b]
            for i in range(2):
                for j in range(2):
                    Y[idx[i], idx[j]] += y[i, j]
        else:
            y = el.admittance(f) if isinstance(el, Stub) else 1.0 / el.impedance(f)
            Y[br.a, br.a] += y
            Y[br.b, br.b] += y
            Y[br.a, br.b] -= y
            Y[br.b, br.a] -= y
    Y = Y[1:, 1:]  # drop ground
    ports, internal = slice(0, p), slice(p, nodes)
    if nodes > p:
        Y = Y[ports, ports] - Y[ports, internal] @ np.linalg.solve(Y[internal, internal], Y[internal, ports])
    return Y


def _validate_topology(branches: Sequence[Branch], p: int):
    if not branches:
        raise InvalidInputError("empty topology")
    used = set()
    for br in branches:
        if br.a < 0 or br.b < 0 or br.a == br.b:
            raise InvalidInputError(f"bad branch nodes ({br.a}, {br.b})")
        if isinstance(br.element, TLSegment):
            if 0 in (br.a, br.b):
                raise InvalidInputError("a line must connect two non-ground nodes")
            if br.element.electrical_length == 0:
                raise InvalidInputError("zero-length line inside a topology; merge the nodes instead")
        elif isinstance(br.element, Stub):
            if 0 not in (br.a, br.b):
                raise InvalidInputError("a stub must be wired to ground (node 0)")
        elif not isinstance(br.element, Lumped):
            raise InvalidInputError(f"unknown element {br.element!r}")
        used.update((br.a, br.b))
    missing = set(range(1, p + 1)) - used
    if missing:
        raise InvalidInputError(f"port nodes {sorted(missing)} are not connected")
    nodes = max(used)
    if set(range(1, nodes + 1)) - used:
        raise InvalidInputError("node numbering has gaps")


def tl_network(topology, p: int, load: float | complex | None = None, z0: float = Z_REF,
               band=(0.0, np.inf), name: str = "tl", trace_length: float | None = None) -> SolverOracle:
    """S-parameter oracle for a network of lines and lumped elements.

    ``topology`` is either a plain sequence of chain elements (cascaded by
    ABCD; p = 2, or p = 1 with ``load`` terminating the far end) or a sequence
    of :class:`Branch` objects for arbitrary p-port topologies.
    """
    topology = list(topology)
    if topology and all(isinstance(t, Branch) for t in topology):
        _validate_topology(topology, p)

        def func(f):
            return y_to_s(_topology_y(topology, p, f), z0)

    elif all(isinstance(t, (TLSegment, Lumped, Stub)) for t in topology):
        if load is None and p != 2:
            raise InvalidInputError("a chain is a 2-port unless a load is given")
        if load is not None and p != 1:
            raise InvalidInputError("a loaded chain is a 1-port")

        def func(f):
            m = _chain_abcd(topology, f)
            if load is None:
                return abcd_to_s(m, z0)
            zin = (m[0, 0] * load + m[0, 1]) / (m[1, 0] * load + m[1, 1])
            return np.array([[(zin - z0) / (zin + z0)]])

    else:
        raise InvalidInputError("topology must be all chain elements or all Branch objects")
    return SolverOracle(func, p, band, name, trace_length)


def chain_input_impedance(elements, load, f: float) -> complex:
    m = _chain_abcd(elements, f)
    return (m[0, 0] * load + m[0, 1]) / (m[1, 0] * load + m[1, 1])


# Butterworth prototype for the 7-section stepped-impedance low-pass filter
_BUTTER7 = (0.445, 1.247, 1.802, 2.0, 1.802, 1.247, 0.445)


def stepped_lpf(order_g=_BUTTER7, fc: float = 5e9, z_low: float = 20.0, z_high: float = 120.0,
                z0: float = Z_REF, loss: float = 0.005, eps_eff: float = 3.3) -> tuple[list, float]:
    """Stepped-impedance low-pass chain; returns (segments, physical length in m)."""
    segs = []
    for k, g in enumerate(order_g):
        if k % 2 == 0:
            zi, beta_l = z_low, g * z_low / z0
        else:
            zi, beta_l = z_high, g * z0 / z_high
        segs.append(TLSegment(zi, beta_l / (2 * np.pi), fc, loss))
    wavelength = SPEED_OF_LIGHT / (fc * np.sqrt(eps_eff))
    return segs, sum(s.electrical_length for s in segs) * wavelength


# -- rational state-space systems -----------------------------------------------

@dataclass(frozen=True)
class StateSpaceSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __call__(self, f):
        s = 2j * np.pi * float(f)
        return self.C @ np.linalg.solve(s * np.eye(self.A.shape[0]) - self.A, self.B) + self.D

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)


def random_stable_system(rng: np.random.Generator, order: int, ports: int,
                         f_lo: float = 0.1, f_hi: float = 1.0, damping=(0.02, 0.3),
                         with_d: bool = True) -> StateSpaceSystem:
    """Real, stable, lightly damped system with resonances inside [f_lo, f_hi].

    Complex pole pairs are laid out as 2x2 rotation blocks; an odd order adds
    one real pole.
    """
    blocks = []
    for _ in range(order // 2):
        w = 2 * np.pi * rng.uniform(f_lo, f_hi)
        a = w * rng.uniform(*damping)
        blocks.append(np.array([[-a, w], [-w, -a]]))
    if order % 2:
        blocks.append(np.array([[-2 * np.pi * rng.uniform(f_lo, f_hi)]]))
    A = np.zeros((order, order))
    k = 0
    for blk in blocks:
        m = blk.shape[0]
        A[k:k + m, k:k + m] = blk
        k += m
    scale = 2 * np.pi * f_hi
    B = rng.normal(size=(order, ports)) * np.sqrt(scale)
    C = rng.normal(size=(ports, order)) * np.sqrt(scale) / order
    D = rng.normal(size=(ports, ports)) if with_d else np.zeros((ports, ports))
    return StateSpaceSystem(A, B, C, D)


def state_space_oracle(system: StateSpaceSystem, band=(0.0, np.inf), name: str = "rational",
                       trace_length: float | None = None) -> SolverOracle:
    return SolverOracle(system, system.B.shape[1], band, name, trace_length)


def constant_oracle(value, band=(0.0, np.inf)) -> SolverOracle:
    h = as_response(value)
    return SolverOracle(lambda f: h.copy(), h.shape[0], band, "constant")


# -- tabulated data --------------------------------------------------------------

class TabulatedOracle(SolverOracle):
    """Replays a SampleSet. Strict mode answers only at tabulated frequencies;
    lenient mode interpolates linearly and records the inexact queries."""

    def __init__(self, data: SampleSet, strict: bool = True, name: str = "tabulated",
                 rtol: float = 1e-12, trace_length: float | None = None):
        if len(data) == 0:
            raise InvalidInputError("empty data")
        self.data = data
        self.strict = strict
        self.rtol = rtol
        self.inexact: list[float] = []
        super().__init__(self._lookup, data.ports, (data.freqs[0], data.freqs[-1]), name, trace_length)

    def _lookup(self, f: float) -> np.ndarray:
        fr = self.data.freqs
        k = int(np.searchsorted(fr, f))
        for j in (k - 1, k):
            if 0 <= j < len(fr) and abs(fr[j] - f) <= self.rtol * abs(f):
                return self.data.responses[j].copy()
        if self.strict or f < fr[0] or f > fr[-1]:
            near = fr[max(k - 1, 0):k + 1]
            raise OffGridError(f, near.tolist())
        t = (f - fr[k - 1]) / (fr[k] - fr[k - 1])
        with self._lock:
            self.inexact.append(f)
        return (1 - t) * self.data.responses[k - 1] + t * self.data.responses[k]


def tabulated_oracle(data: SampleSet, strict: bool = True, **kw) -> TabulatedOracle:
    return TabulatedOracle(data, strict, **kw)


# -- scaled and preset oracles ----------------------------------------------------

def normalized_oracle(func, ports: int, f_res: float = F_RESONANCE, band=(0.0, np.inf),
                      name: str = "", trace_length: float | None = None) -> SolverOracle:
    """Oracle over physical hertz for a response defined in a frame where
    ``f_res`` maps to 1 Hz."""
    if not f_res > 0:
        raise InvalidInputError("f_res must be positive")
    return SolverOracle(lambda f: func(f / f_res), ports, band, name, trace_length)


def oscillatory_system() -> StateSpaceSystem:
    """Order-7 1-port: three resonances packed into the upper band (0.64, 0.66
    and 0.82 Hz) over one real pole at 0.3 Hz, flat below about 0.5 Hz."""
    A = np.zeros((7, 7))
    C = np.zeros((1, 7))
    for k, (f, zeta, c) in enumerate(((0.64, 0.06, 1.0), (0.66, 0.02, -1.0), (0.82, 0.025, 1.0))):
        w = 2 * np.pi * f
        A[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[-zeta * w, w], [-w, -zeta * w]]
        C[0, 2 * k:2 * k + 2] = (c, 0.5 * c)
    A[6, 6] = -2 * np.pi * 0.3
    C[0, 6] = 1.0
    return StateSpaceSystem(A, np.ones((7, 1)), C, np.array([[0.5]]))
