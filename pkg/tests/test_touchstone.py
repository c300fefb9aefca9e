import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmsweep.core import SampleSet
from lmsweep.touchstone import (
    OptionLine,
    TouchstoneError,
    document,
    parse,
    parse_file,
    ports_from_name,
    write,
    write_file,
)

from conftest import random_complex


def test_one_port_ri():
    doc = parse("# GHz S RI R 50\n1.0 0.5 0.0\n", 1)
    assert doc.data.freqs[0] == 1e9
    assert doc.data.responses[0, 0, 0] == 0.5 + 0j
    assert doc.option_line == OptionLine("GHz", "S", "RI", 50.0)


def test_ma_format():
    doc = parse("# GHz S MA R 50\n1.0 1.0 90.0\n", 1)
    np.testing.assert_allclose(doc.data.responses[0, 0, 0], 1j, atol=1e-15)


def test_db_format():
    doc = parse("# GHz S DB R 50\n1.0 -6.0206 0.0\n", 1)
    assert abs(doc.data.responses[0, 0, 0] - 0.5) < 1e-4


def test_default_option_line():
    doc = parse("1.0 1.0 0.0\n", 1)
    assert doc.option_line == OptionLine()
    assert doc.data.freqs[0] == 1e9


def test_units_and_case():
    doc = parse("# mhz s ri r 75\n1500 0.1 0.2\n", 1)
    assert doc.data.freqs[0] == 1.5e9
    assert doc.option_line.reference_resistance == 75.0
    assert doc.option_line.frequency_unit == "MHz"


def test_two_port_column_order():
    text = "# Hz S RI R 50\n1 11 0 21 0 12 0 22 0\n"
    m = parse(text, 2).data.responses[0].real
    np.testing.assert_array_equal(m, [[11, 12], [21, 22]])
    again = parse(write(parse(text, 2)), 2).data.responses[0].real
    np.testing.assert_array_equal(again, m)
    line = write(document(parse(text, 2).data)).splitlines()[-1].split()
    assert [float(v) for v in line[1::2]] == [11, 21, 12, 22]


def test_ten_port_wrap():
    rng = np.random.default_rng(5)
    data = SampleSet([1e9, 2e9], random_complex(rng, 2, 10, 10))
    text = write(document(data))
    body = [ln for ln in text.splitlines() if not ln.startswith(("!", "#"))]
    assert len(body) == 2 * 10 * 3  # each matrix row: 4 + 4 + 2 pairs
    assert all(len(ln.split()) <= 9 for ln in body)
    back = parse(text, 10).data
    np.testing.assert_allclose(back.responses, data.responses, rtol=1e-8)


def test_comments_preserved():
    doc = parse("! made by hand\n# GHz S RI R 50\n1.0 0.5 0.0 ! trailing\n", 1)
    assert doc.comments == [" made by hand", " trailing"]
    again = parse(write(doc), 1)
    assert again.comments == doc.comments


def test_z_parameters_denormalised():
    doc = parse("# GHz Z RI R 50\n1.0 2.0 0.0\n", 1)
    assert doc.data.responses[0, 0, 0] == 100.0
    assert parse(write(doc), 1).data.responses[0, 0, 0] == pytest.approx(100.0)


@pytest.mark.parametrize("text, needle, line", [
    ("# GHz S RI R 50\n2.0 0.5 0\n1.0 0.5 0\n", "ascending", 3),
    ("# GHz S RI R 50\n1.0 0.5 0\n1.0 0.5 0\n", "ascending", 3),
    ("# GHz S XX R 50\n1.0 0.5 0\n", "option line", 1),
    ("# GHz S RI R\n1.0 0.5 0\n", "option line", 1),
    ("# GHz S RI R 50\n1.0 0.5 0 7\n", "values", 2),
    ("# GHz S RI R 50\n1.0 0.5\n", "incomplete", 2),
    ("# GHz S RI R 50\n1.0 0.5 abc\n", "abc", 2),
    ("[Version] 2.0\n# GHz S RI R 50\n", "v2", 1),
    ("# GHz S RI R 50\n1.0 0.5 0\n# GHz S RI R 50\n2.0 0.5 0\n", "after data", 3),
])
def test_parse_errors_carry_line(text, needle, line):
    with pytest.raises(TouchstoneError) as err:
        parse(text, 1)
    assert needle in str(err.value)
    assert err.value.line == line


def test_port_count_from_name(tmp_path):
    assert ports_from_name("a/b/x.S4P") == 4
    assert ports_from_name("x.txt") is None
    data = SampleSet([1e9], random_complex(np.random.default_rng(0), 1, 3, 3))
    path = write_file(document(data, "MA"), tmp_path / "net.s3p")
    np.testing.assert_allclose(parse_file(path).data.responses, data.responses, rtol=1e-9)
    with pytest.raises(TouchstoneError):
        parse(path.read_text())


@given(st.integers(0, 10_000), st.sampled_from([1, 2, 3, 10]), st.sampled_from(["RI", "MA", "DB"]),
       st.sampled_from(["Hz", "kHz", "MHz", "GHz"]))
def test_round_trip_property(seed, p, fmt, unit):
    r = np.random.default_rng(seed)
    n = int(r.integers(1, 5))
    f = np.sort(r.choice(np.arange(1, 10_000), n, replace=False)) * r.uniform(1e3, 1e6)
    h = random_complex(r, n, p, p) * 10.0 ** r.uniform(-3, 1, (n, p, p))
    data = SampleSet(f, h)
    back = parse(write(document(data, fmt, unit)), p).data
    np.testing.assert_array_equal(back.freqs, data.freqs)
    err = np.abs(back.responses - data.responses) / np.abs(data.responses)
    assert np.max(err) <= 1e-8
