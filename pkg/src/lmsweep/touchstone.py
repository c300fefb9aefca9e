"""Touchstone v1 (.sNp) reader and writer."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from pathlib import Path

import numpy as np

from .core import LMSweepError, SampleSet

FREQ_UNITS = {"HZ": 1, "KHZ": 10**3, "MHZ": 10**6, "GHZ": 10**9}
PARAMETERS = ("S", "Y", "Z")
FORMATS = ("RI", "MA", "DB")


class TouchstoneError(LMSweepError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class OptionLine:
    frequency_unit: str = "GHz"
    parameter: str = "S"
    format: str = "MA"
    reference_resistance: float = 50.0

    def __str__(self):
        r = self.reference_resistance
        r_txt = repr(int(r)) if float(r).is_integer() else repr(r)
        return f"# {self.frequency_unit} {self.parameter} {self.format} R {r_txt}"


@dataclass
class TouchstoneDocument:
    ports: int
    option_line: OptionLine
    data: SampleSet
    comments: list[str] = field(default_factory=list)


_CANON_UNIT = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}


def parse_option_line(text: str, line: int | None = None) -> OptionLine:
    toks = text.lstrip("#").split()
    unit, param, fmt, r = "GHZ", "S", "MA", 50.0
    k = 0
    while k < len(toks):
        t = toks[k].upper()
        if t in FREQ_UNITS:
            unit = t
        elif t in PARAMETERS:
            param = t
        elif t in FORMATS:
            fmt = t
        elif t == "R":
            if k + 1 >= len(toks):
                raise TouchstoneError("option line: R without a value", line)
            try:
                r = float(toks[k + 1])
            except ValueError:
                raise TouchstoneError(f"option line: bad resistance {toks[k + 1]!r}", line) from None
            k += 1
        elif t in ("G", "H"):
            raise TouchstoneError(f"option line: parameter {t} is not supported", line)
        else:
            raise TouchstoneError(f"option line: unknown token {toks[k]!r}", line)
        k += 1
    return OptionLine(_CANON_UNIT[unit], param, fmt, r)


def _decode(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def _encode(z: np.ndarray, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    if fmt == "RI":
        return z.real, z.imag
    mag = np.abs(z)
    ang = np.rad2deg(np.angle(z))
    if fmt == "MA":
        return mag, ang
    return 20.0 * np.log10(np.maximum(mag, 1e-300)), ang


def ports_from_name(name: str | Path) -> int | None:
    m = re.search(r"\.s(\d+)p$", str(name), re.IGNORECASE)
    return int(m.group(1)) if m else None


def _freq_to_hz(token: str, unit: str, line: int) -> float:
    try:
        with localcontext() as ctx:
            ctx.prec = 60
            return float(Decimal(token) * FREQ_UNITS[unit.upper()])
    except ArithmeticError:
        raise TouchstoneError(f"bad frequency {token!r}", line) from None


def parse(text: str | bytes, ports_hint: int | None = None) -> TouchstoneDocument:
    """Decode a Touchstone v1 file into linear complex (RI) matrices."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if ports_hint is None or ports_hint < 1:
        raise TouchstoneError("port count unknown: pass ports_hint or use parse_file")
    p = ports_hint
    per_record = 1 + 2 * p * p
    option = None
    comments: list[str] = []
    records: list[list[str]] = []
    record_lines: list[int] = []
    current: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, _, comment = raw.partition("!")
        if _:
            comments.append(comment.rstrip())
        body = body.strip()
        if not body:
            continue
        if body.startswith("["):
            raise TouchstoneError(f"Touchstone v2 keyword {body.split()[0]!r} not supported", lineno)
        if body.startswith("#"):
            if records or current:
                raise TouchstoneError("option line after data", lineno)
            if option is not None:
                continue  # v1: only the first option line counts
            option = parse_option_line(body, lineno)
            continue
        toks = body.split()
        if not current:
            record_lines.append(lineno)
        if len(current) + len(toks) > per_record:
            raise TouchstoneError(
                f"expected {per_record} values per frequency for a {p}-port, record overflows", lineno)
        current.extend(toks)
        if len(current) == per_record:
            records.append(current)
            current = []
    if current:
        raise TouchstoneError(
            f"incomplete record: {len(current)} of {per_record} values", record_lines[-1])
    if option is None:
        option = OptionLine()
    if not records:
        raise TouchstoneError("no data")
    freqs = []
    vals = np.empty((len(records), 2 * p * p))
    for r, (rec, lineno) in enumerate(zip(records, record_lines)):
        f = _freq_to_hz(rec[0], option.frequency_unit, lineno)
        if freqs and f <= freqs[-1]:
            raise TouchstoneError("frequencies must be strictly ascending", lineno)
        freqs.append(f)
        try:
            vals[r] = [float(t) for t in rec[1:]]
        except ValueError as exc:
            raise TouchstoneError(str(exc), lineno) from None
    z = _decode(vals[:, 0::2], vals[:, 1::2], option.format)
    if p == 2:
        # v1 two-port order: 11 21 12 22
        mats = z.reshape(-1, 2, 2).transpose(0, 2, 1)
    else:
        mats = z.reshape(-1, p, p)
    if option.parameter == "Z":
        mats = mats * option.reference_resistance
    elif option.parameter == "Y":
        mats = mats / option.reference_resistance
    return TouchstoneDocument(p, option, SampleSet(freqs, mats), comments)


def parse_file(path: str | Path, ports_hint: int | None = None) -> TouchstoneDocument:
    path = Path(path)
    p = ports_from_name(path) or ports_hint
    return parse(path.read_text(), p)


def _fmt_freq(f: float, unit: str) -> str:
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(f) / FREQ_UNITS[unit.upper()]
    txt = format(d.normalize(), "f")
    return txt


def write(doc: TouchstoneDocument, digits: int = 9) -> str:
    """Encode a document. RI uses ``digits`` significant digits; MA/DB carry
    three extra so the angle keeps the same relative accuracy."""
    opt = doc.option_line
    p = doc.data.ports
    mats = doc.data.responses
    if opt.parameter == "Z":
        mats = mats / opt.reference_resistance
    elif opt.parameter == "Y":
        mats = mats * opt.reference_resistance
    if p == 2:
        mats = mats.transpose(0, 2, 1)
    a, b = _encode(mats.reshape(len(doc.data), -1), opt.format)
    prec = digits if opt.format == "RI" else digits + 3
    out = [f"!{c}" for c in doc.comments]
    out.append(str(opt))
    for k, f in enumerate(doc.data.freqs):
        pairs = [f"{a[k, j]:.{prec}g} {b[k, j]:.{prec}g}" for j in range(a.shape[1])]
        ftxt = _fmt_freq(f, opt.frequency_unit)
        if p <= 2:
            out.append(" ".join([ftxt] + pairs))
            continue
        # one matrix row per line group, at most four pairs per line
        for row in range(p):
            chunk = pairs[row * p:(row + 1) * p]
            for start in range(0, p, 4):
                lead = ftxt if row == 0 and start == 0 else " " * len(ftxt)
                out.append(" ".join([lead] + chunk[start:start + 4]))
    return "\n".join(out) + "\n"


def write_file(doc: TouchstoneDocument, path: str | Path, digits: int = 9) -> Path:
    path = Path(path)
    path.write_text(write(doc, digits))
    return path


def document(data: SampleSet, fmt: str = "RI", unit: str = "GHz", parameter: str = "S",
             r: float = 50.0, comments=()) -> TouchstoneDocument:
    return TouchstoneDocument(data.ports, OptionLine(unit, parameter, fmt, r), data, list(comments))
