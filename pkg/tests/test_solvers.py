import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmsweep.core import InvalidInputError, SampleSet
from lmsweep.solvers import (
    CKT1_DEN,
    CKT2_DEN,
    Branch,
    Lumped,
    OffGridError,
    SolverError,
    SolverOracle,
    Stub,
    TLSegment,
    abcd_to_s,
    chain_input_impedance,
    constant_oracle,
    impedance_oracle,
    normalized_oracle,
    qwt_impedance,
    random_stable_system,
    rational_circuit_1,
    rational_circuit_2,
    stepped_lpf,
    tabulated_oracle,
    tl_network,
    y_to_s,
    z_to_s,
)


class TestQuarterWave:
    def test_dc_is_load(self):
        assert qwt_impedance(1e-9) == pytest.approx(100.0)

    def test_quarter_wave_transform(self):
        assert qwt_impedance(1.0) == pytest.approx(70.7 ** 2 / 100, rel=1e-12)

    def test_half_wave_repeats_load(self):
        assert qwt_impedance(2.0) == pytest.approx(100.0, rel=1e-12)

    def test_physical_frame(self):
        assert qwt_impedance(1e9, normalized=False) == qwt_impedance(1.0)

    def test_equals_line_model(self, rng):
        line = [TLSegment(70.7, 0.25, 1.0)]
        for f in rng.uniform(0.05, 1.0, 50):
            z = chain_input_impedance(line, 100.0, f)
            assert abs(qwt_impedance(f) - z) <= 1e-9 * abs(z)


class TestRationalCircuits:
    def test_dc_values(self):
        assert rational_circuit_1(0.0) == pytest.approx(100.0, rel=1e-3)
        assert rational_circuit_2(0.0) == pytest.approx(100.0, rel=1e-3)

    def test_stable(self):
        for den in (CKT1_DEN, CKT2_DEN):
            assert np.all(np.roots(den).real < 0)

    def test_conjugate_symmetry(self):
        f = np.linspace(0.05, 1.0, 9)
        for fn in (rational_circuit_1, rational_circuit_2):
            np.testing.assert_allclose(fn(-f), np.conj(fn(f)), rtol=1e-14)

    def test_close_to_quarter_wave_in_band(self):
        f = np.linspace(0.05, 0.8, 100)
        s_ckt = (rational_circuit_1(f) - 50) / (rational_circuit_1(f) + 50)
        s_qwt = (qwt_impedance(f) - 50) / (qwt_impedance(f) + 50)
        assert np.max(np.abs(s_ckt - s_qwt)) < 10 ** (-50 / 20)


class TestOracle:
    def test_counts_queries_not_responses(self):
        o = impedance_oracle(qwt_impedance)
        o.response(1e9)
        o.query(1e9)
        o(5e8)
        o.sample([1e8, 2e8])
        assert o.call_count == 4
        o.reset()
        assert o.call_count == 0

    def test_deterministic(self):
        o = impedance_oracle(rational_circuit_1)
        np.testing.assert_array_equal(o.query(3e8), o.query(3e8))

    def test_thread_safe_counting(self):
        o = constant_oracle([[1.0]])
        threads = [threading.Thread(target=lambda: [o.query(1.0) for _ in range(200)]) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert o.call_count == 800

    def test_wrong_shape(self):
        o = SolverOracle(lambda f: np.eye(2), 1)
        with pytest.raises(SolverError):
            o.query(1.0)

    def test_arithmetic_failure_wrapped(self):
        o = SolverOracle(lambda f: 1 / 0, 1)
        with pytest.raises(SolverError):
            o.query(1.0)

    def test_z_parameter_oracle(self):
        o = impedance_oracle(qwt_impedance, "Z")
        assert o.query(1e9)[0, 0] == pytest.approx(49.9849)

    def test_normalized_wrapper(self):
        o = normalized_oracle(lambda f: np.array([[f]]), 1, f_res=2e9)
        assert o.query(1e9)[0, 0] == 0.5


class TestConversions:
    def test_matched_load(self):
        assert z_to_s(50.0)[0, 0] == 0
        assert y_to_s(1 / 50.0)[0, 0] == 0

    def test_z_and_y_agree(self, rng):
        z = rng.normal(size=(3, 3)) * 20 + 50 * np.eye(3)
        np.testing.assert_allclose(z_to_s(z), y_to_s(np.linalg.inv(z)), atol=1e-12)


class TestNetworks:
    def test_empty_chain_is_a_through(self):
        np.testing.assert_allclose(tl_network([], 2).query(1e9), [[0, 1], [1, 0]], atol=1e-15)

    def test_through_connection(self):
        s = abcd_to_s(np.eye(2))
        np.testing.assert_allclose(s, [[0, 1], [1, 0]], atol=1e-15)
        o = tl_network([TLSegment(50.0, 0.0, 1e9)], 2)
        np.testing.assert_allclose(o.query(3e9), [[0, 1], [1, 0]], atol=1e-15)

    def test_loaded_line_matches_quarter_wave(self):
        o = tl_network([TLSegment(70.7, 0.25, 1e9)], 1, load=100.0)
        z = qwt_impedance(0.37)
        np.testing.assert_allclose(o.query(0.37e9)[0, 0], (z - 50) / (z + 50), rtol=1e-12)

    def test_chain_and_topology_agree(self):
        seg = TLSegment(35.0, 0.1, 1e9, loss=0.01)
        stub = Stub(TLSegment(80.0, 0.125, 1e9), "open")
        chain = tl_network([seg, stub, seg], 2)
        topo = tl_network([Branch(1, 3, seg), Branch(3, 0, stub), Branch(3, 2, seg)], 2)
        for f in (0.3e9, 1.1e9, 2.7e9):
            np.testing.assert_allclose(chain.query(f), topo.query(f), rtol=1e-10, atol=1e-12)

    @given(st.integers(0, 1000))
    def test_reciprocity(self, seed):
        r = np.random.default_rng(seed)
        segs = [TLSegment(r.uniform(20, 120), r.uniform(0.01, 0.4), 1e9, r.uniform(0, 0.05)) for _ in range(3)]
        branches = [Branch(1, 4, segs[0]), Branch(2, 4, segs[1]), Branch(3, 4, segs[2]),
                    Branch(4, 0, Lumped(r=5.0, l=1e-9, c=1e-12))]
        o = tl_network(branches, 3)
        for f in r.uniform(0.1e9, 3e9, 20):
            s = o.query(f)
            np.testing.assert_allclose(s, s.T, atol=1e-12)

    def test_passive_lossless_chain(self):
        segs, _ = stepped_lpf(loss=0.0)
        s = tl_network(segs, 2).query(3e9)
        np.testing.assert_allclose(s.conj().T @ s, np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("topo", [
        [Branch(1, 1, Lumped(r=1))],
        [Branch(1, 0, TLSegment(50, 0.1, 1e9))],
        [Branch(1, 3, Lumped(r=1)), Branch(3, 0, Lumped(r=1))],  # port 2 unconnected
        [Branch(1, 2, Stub(TLSegment(50, 0.1, 1e9)))],
    ])
    def test_bad_topologies(self, topo):
        with pytest.raises(InvalidInputError):
            tl_network(topo, 2)

    def test_lpf_length(self):
        segs, length = stepped_lpf()
        assert len(segs) == 7
        assert 0.01 < length < 0.05


class TestStateSpace:
    def test_random_system_is_stable_and_real(self, rng):
        sysm = random_stable_system(rng, 7, 3)
        assert sysm.order == 7
        assert np.all(sysm.poles.real < 0)
        np.testing.assert_allclose(sysm(-0.3), np.conj(sysm(0.3)), rtol=1e-12)


class TestTabulated:
    data = SampleSet([1.0, 2.0, 3.0], np.array([0.0, 1.0, 1.0]))

    def test_exact_hit(self):
        o = tabulated_oracle(self.data)
        assert o.query(2.0)[0, 0] == 1.0

    def test_strict_off_grid(self):
        o = tabulated_oracle(self.data)
        with pytest.raises(OffGridError) as err:
            o.query(1.5)
        assert err.value.nearest == [1.0, 2.0]

    def test_lenient_interpolates(self):
        o = tabulated_oracle(self.data, strict=False)
        assert o.query(1.5)[0, 0] == 0.5
        assert o.query(2.5)[0, 0] == 1.0
        assert o.inexact == [1.5, 2.5]
        with pytest.raises(OffGridError):
            o.query(4.0)
