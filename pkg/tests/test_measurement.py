import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from pointer_sim.hilbert import ValidationError, fix_global_phase, ket
from pointer_sim.measurement import (
    DeltaParams,
    PremeasurementConfig,
    XYBasisParams,
    build_delta,
    build_h_sa,
    express_in_xy,
    free_evolve,
    from_xy,
    premeasure,
    premeasurement_unitary,
    premeasurement_unitary_numeric,
    xy_eigenbasis,
    xy_operator,
)

SWAP_LOWER = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def random_delta(rng):
    r = math.sqrt(rng.uniform())
    return DeltaParams(r * cmath.exp(1j * rng.uniform(0, 2 * math.pi)),
                       rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi))


def random_ab(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return complex(v[0]), complex(v[1])


class TestDelta:
    def test_permutation_member(self):
        assert_allclose(build_delta(DeltaParams(1, math.pi, 0)), SWAP_LOWER, atol=1e-15)

    def test_maps_premeasurement(self):
        d = build_delta(DeltaParams(0, 0, 0))
        a, b = 0.3 + 0.4j, math.sqrt(0.75)
        assert_allclose(d @ [a, 0, b, 0], [a, 0, 0, b])

    def test_random_family(self, rng):
        for _ in range(100):
            d = build_delta(random_delta(rng))
            assert np.max(np.abs(d @ d.conj().T - np.eye(4))) < 1e-12
            for _ in range(100):
                a, b = random_ab(rng)
                assert np.max(np.abs(d @ [a, 0, b, 0] - [a, 0, 0, b])) < 1e-10

    def test_unitarity_equations(self, rng):
        # The five conditions the free entries must satisfy (1-based indices).
        for _ in range(20):
            d = build_delta(random_delta(rng))
            D = lambda i, j: d[i - 1, j - 1]  # noqa: E731
            assert abs(abs(D(1, 2)) ** 2 + abs(D(1, 4)) ** 2) < 1e-14
            assert abs(abs(D(4, 2)) ** 2 + abs(D(4, 4)) ** 2) < 1e-14
            assert abs(abs(D(2, 2)) ** 2 + abs(D(2, 4)) ** 2 - 1) < 1e-14
            assert abs(abs(D(3, 2)) ** 2 + abs(D(3, 4)) ** 2 - 1) < 1e-14
            assert abs(D(2, 2) * np.conj(D(3, 2)) + D(2, 4) * np.conj(D(3, 4))) < 1e-14

    def test_rejects_large_delta22(self):
        with pytest.raises(ValidationError):
            DeltaParams(1.01, 0, 0)


class TestCoupling:
    def test_matrix(self):
        h = build_h_sa(2.0)
        expected = np.zeros((4, 4))
        expected[2:, 2:] = [[1, -1], [-1, 1]]
        assert_allclose(h, expected, atol=1e-15)

    def test_spectrum(self):
        g = 1.7
        w, v = np.linalg.eigh(build_h_sa(g))
        assert_allclose(w, [0, 0, 0, g], atol=1e-14)
        top = fix_global_phase(v[:, 3])
        assert_allclose(top, (ket(-1, 1) - ket(-1, -1)) / math.sqrt(2), atol=1e-14)

    def test_rejects_zero(self):
        with pytest.raises(ValidationError):
            build_h_sa(0)


class TestPremeasurementUnitary:
    def test_identity_at_zero(self):
        assert_allclose(premeasurement_unitary(1.3, 0.0), np.eye(4))

    @pytest.mark.parametrize("g,n", [(1.0, 1), (2.5, 1), (0.7, 3), (-1.2, 5)])
    def test_swap_at_tau(self, g, n):
        cfg = PremeasurementConfig(g=g, n_odd=n)
        assert np.max(np.abs(premeasurement_unitary(g, cfg.tau_pm) - SWAP_LOWER)) < 1e-12

    def test_matches_eigendecomposition(self):
        g = 1.3
        for t in np.linspace(0, 10, 50):
            assert np.max(np.abs(premeasurement_unitary(g, t) - premeasurement_unitary_numeric(g, t))) < 1e-10

    def test_periodic(self, rng):
        g = 0.9
        for t in rng.uniform(0, 20, 10):
            diff = premeasurement_unitary(g, t + 2 * math.pi / g) - premeasurement_unitary(g, t)
            assert np.max(np.abs(diff)) < 1e-10

    def test_even_n_rejected(self):
        with pytest.raises(ValidationError):
            PremeasurementConfig(n_odd=2)


class TestFreeEvolve:
    def test_ground(self):
        a, b = free_evolve(1, 0, 2.3, 0.8)
        assert a == pytest.approx(cmath.exp(-1j * 0.8 * 2.3))
        assert b == 0

    def test_zero_dt(self):
        assert free_evolve(0.6, 0.8j, 0, 5.0) == (0.6, 0.8j)

    def test_quarter_period(self):
        w0 = 1.9
        s = 1 / math.sqrt(2)
        a, b = free_evolve(s, s, math.pi / (2 * w0), w0)
        assert a == pytest.approx(-1j * s, abs=1e-15)
        assert b == pytest.approx(1j * s, abs=1e-15)

    def test_unnormalized(self):
        with pytest.raises(ValidationError):
            free_evolve(1, 1, 0.1, 1)


class TestPremeasure:
    def test_plus(self):
        assert_allclose(premeasure(1, 0).amplitudes, [1, 0, 0, 0])

    def test_bell(self):
        s = 1 / math.sqrt(2)
        assert_allclose(premeasure(s, s).amplitudes, [s, 0, 0, s], atol=1e-15)

    def test_complex(self):
        psi = premeasure(0.6, 0.8j, PremeasurementConfig(g=2.2))
        assert np.max(np.abs(psi.amplitudes - [0.6, 0, 0, 0.8j])) < 1e-12

    def test_no_crossed_amplitudes(self, rng):
        for _ in range(50):
            a, b = random_ab(rng)
            psi = premeasure(a, b, PremeasurementConfig(g=rng.uniform(0.2, 3), n_odd=int(rng.choice([1, 3, 7]))))
            assert np.max(np.abs(psi.amplitudes[1:3])) < 1e-12

    def test_unnormalized(self):
        with pytest.raises(ValidationError):
            premeasure(1, 0.5)


class TestXYBasis:
    def test_sigma_x(self):
        plus, minus = xy_eigenbasis(XYBasisParams(1, 0))
        s = 1 / math.sqrt(2)
        assert_allclose(plus, [s, s])
        assert_allclose(minus, [s, -s])

    def test_sigma_y(self):
        plus, minus = xy_eigenbasis(XYBasisParams(0, 1))
        s = 1 / math.sqrt(2)
        assert_allclose(fix_global_phase(plus), [s, 1j * s], atol=1e-15)
        assert_allclose(fix_global_phase(minus), [s, -1j * s], atol=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_eigen_residual(self, x, y):
        if math.hypot(x, y) < 1e-6:
            return
        p = XYBasisParams(x, y)
        r = math.hypot(x, y)
        plus, minus = xy_eigenbasis(p)
        op = xy_operator(p)
        assert np.linalg.norm(op @ plus - r * plus) < 1e-12 * max(1, r)
        assert np.linalg.norm(op @ minus + r * minus) < 1e-12 * max(1, r)
        assert abs(np.vdot(plus, minus)) < 1e-14
        # Moduli follow the printed coefficients: 1/sqrt(2) on both components.
        assert_allclose(np.abs(plus), [1 / math.sqrt(2)] * 2)

    def test_zero_rejected(self):
        with pytest.raises(ValidationError):
            XYBasisParams(0, 0)


def psixy_formula(a, b, x, y):
    """Coefficients written out from the closed-form re-expansion of a|++> + b|-->."""
    r = complex(x, y) / complex(x, -y)
    same = (a * r + b) / 2
    cross = (a * r - b) / 2
    return np.array([same, cross, cross, same])


class TestExpressInXY:
    def test_matches_closed_form(self, rng):
        for _ in range(50):
            a, b = random_ab(rng)
            x, y = rng.normal(size=2)
            got = express_in_xy(np.array([a, 0, 0, b]), XYBasisParams(x, y))
            assert_allclose(got, psixy_formula(a, b, x, y), atol=1e-12)

    def test_alternative_premeasurement(self, rng):
        for _ in range(20):
            x, y = rng.normal(size=2)
            p = XYBasisParams(x, y)
            a = 1 / math.sqrt(2) * cmath.exp(1j * rng.uniform(0, 6))
            b = a * p.ratio
            c = express_in_xy(premeasure(a, b), p)
            assert max(abs(c[1]), abs(c[2])) < 1e-12

    def test_bell_at_sigma_x(self):
        s = 1 / math.sqrt(2)
        assert_allclose(express_in_xy(premeasure(s, s), XYBasisParams(1, 0)), [s, 0, 0, s], atol=1e-15)

    def test_norm_and_roundtrip(self, rng):
        for _ in range(30):
            v = rng.normal(size=4) + 1j * rng.normal(size=4)
            v /= np.linalg.norm(v)
            p = XYBasisParams(*rng.normal(size=2))
            c = express_in_xy(v, p)
            assert abs(np.linalg.norm(c) - 1) < 1e-12
            assert np.max(np.abs(from_xy(c, p) - v)) < 1e-12
