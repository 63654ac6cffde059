import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hitchin_lab import special_functions as sf
from hitchin_lab.errors import InvalidModulus, NonConvergent, PoleAtLattice

coords = st.floats(-2, 2, allow_nan=False)
taus = st.builds(complex, st.floats(-0.5, 0.5), st.floats(0.5, 1.5))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def near_zero_set(z, tau, offset, radius=1e-2):
    """Within ``radius`` of ``offset + Z + tau Z``; relative error of a shifted argument is ill-conditioned there."""
    x, _, _ = sf.reduce_argument(z - offset, tau)
    return abs(x) < radius


class TestModularParameter:
    def test_nome(self):
        m = sf.ModularParameter(1j)
        assert m.q == pytest.approx(math.exp(-2 * math.pi))

    @pytest.mark.parametrize("tau", [0.3, -1j, 0.2 - 0.1j])
    def test_rejects_lower_half_plane(self, tau):
        with pytest.raises(InvalidModulus):
            sf.ModularParameter(tau)

    def test_series_config_validation(self):
        with pytest.raises(ValueError):
            sf.SeriesConfig(tol=0)
        with pytest.raises(ValueError):
            sf.SeriesConfig(max_terms=0)

    def test_non_convergent(self):
        with pytest.raises(NonConvergent):
            sf.theta1(0.3, 1j, sf.SeriesConfig(tol=1e-14, max_terms=1))


class TestThetaPaper:
    def test_value_at_origin(self):
        ref = oracles.theta3_direct(0, 1j, terms=64)
        assert sf.theta_paper(0, 1j) == pytest.approx(ref, abs=1e-14)
        assert abs(sf.theta_paper(0, 1j) - 1.0864348) < 1e-7

    @given(coords, coords, taus)
    def test_symmetries(self, a, b, tau):
        z = complex(a, b)
        if near_zero_set(z, tau, (1 + tau) / 2):
            return
        val = sf.theta_paper(z, tau)
        assert rel(sf.theta_paper(z + 1, tau), val) < 1e-12
        assert rel(sf.theta_paper(-z, tau), val) < 1e-12
        shifted = cmath.exp(-1j * math.pi * tau - 2j * math.pi * z) * val
        assert rel(sf.theta_paper(z + tau, tau), shifted) < 1e-12

    @pytest.mark.parametrize("z", [0.3 + 0.2j, -0.7 + 1.1j, 1.4 - 0.6j])
    def test_matches_mpmath(self, z, tau):
        assert rel(sf.theta_paper(z, tau), oracles.theta3_mp(z, tau)) < 1e-13


class TestTheta1:
    @pytest.mark.parametrize("tau", [1j, 0.5 + 0.8j, -0.3 + 2j])
    def test_odd_zero(self, tau):
        assert sf.theta1(0, tau) == 0

    def test_half_period_real_positive(self):
        val = sf.theta1(0.5, 1j)
        ref = oracles.theta1_direct(0.5, 1j, terms=64)
        assert abs(val.imag) < 1e-15 and val.real > 0
        assert val == pytest.approx(ref, rel=1e-14)

    @pytest.mark.parametrize("z", [0.3 + 0.2j, -0.7 + 1.1j, 1.4 - 0.6j, 0.05 - 1.9j])
    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_matches_mpmath(self, z, order, tau):
        val = sf.theta1(z, tau) if order == 0 else sf.theta1_deriv(z, tau, order)
        ref = oracles.theta1_mp(z, tau, order)
        assert abs(val - ref) <= 1e-12 * max(1.0, abs(ref))

    @given(coords, coords, taus)
    def test_quasi_periodicity(self, a, b, tau):
        z = complex(a, b)
        if near_zero_set(z, tau, 0):
            return
        val = sf.theta1(z, tau)
        assert rel(sf.theta1(z + 1, tau), -val) < 1e-12
        shifted = -cmath.exp(-1j * math.pi * tau - 2j * math.pi * z) * val
        assert rel(sf.theta1(z + tau, tau), shifted) < 1e-12

    def test_derivative_parities_at_origin(self):
        assert sf.theta1_deriv(0, 1j, 2) == pytest.approx(0, abs=1e-15)
        d1 = sf.theta1_deriv(0, 1j, 1)
        assert abs(d1.imag) < 1e-15 and d1.real > 0

    def test_prime_zero_is_dedekind_cube(self, tau):
        ref = 2 * math.pi * oracles.dedekind_eta(tau) ** 3
        assert rel(sf.theta1_prime_zero(tau), ref) < 1e-13

    @given(coords, coords)
    @settings(max_examples=30)
    def test_finite_difference(self, a, b):
        z, h, tau = complex(a, b), 1e-5, 0.5 + 0.8j
        fd = (sf.theta1(z + h, tau) - sf.theta1(z - h, tau)) / (2 * h)
        d1 = sf.theta1_deriv(z, tau, 1)
        # central-difference truncation h^2/6 |theta'''| plus cancellation eps |theta| / h
        bound = h * h / 6 * abs(sf.theta1_deriv(z, tau, 3)) + 1e-16 * abs(sf.theta1(z, tau)) / h
        assert abs(fd - d1) <= 2 * bound + 1e-12 * max(1.0, abs(d1))

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            sf.theta1_deriv(0.1, 1j, 4)


class TestEisenstein:
    def test_tau_i(self):
        assert sf.eisenstein_e2(1j) == pytest.approx(3 / math.pi, abs=1e-14)
        assert sf.eisenstein_e2(1j) == pytest.approx(oracles.e2_series(1j), abs=1e-14)

    def test_tau_2i(self):
        assert sf.eisenstein_e2(2j) == pytest.approx(oracles.e2_series(2j), abs=1e-14)

    def test_cusp_limit(self):
        assert sf.eisenstein_e2(8j) == pytest.approx(1, abs=1e-14)

    @pytest.mark.parametrize("tau", [1j, 0.3 + 1.1j, -0.2 + 0.9j])
    def test_modular_anomaly(self, tau):
        lhs = sf.eisenstein_e2(-1 / tau)
        rhs = tau ** 2 * sf.eisenstein_e2(tau) + 12 * tau / (2j * math.pi)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestWeierstrass:
    def test_lattice_sum_oracle(self):
        u, tau = 0.31 + 0.17j, 0.5 + 0.8j
        ref = oracles.wp_lattice(u, tau)
        assert rel(sf.wp(u, tau), ref) < 1e-8

    @pytest.mark.parametrize("u", [0.12 + 0.4j, -0.45 + 0.05j])
    def test_lattice_sum_square_lattice(self, u):
        assert rel(sf.wp(u, 1j), oracles.wp_lattice(u, 1j, R=500)) < 1e-8

    @given(coords, coords, taus)
    def test_even_and_periodic(self, a, b, tau):
        u = complex(a, b)
        x, _, _ = sf.reduce_argument(u, tau)
        if abs(x) < 1e-2:
            return
        val = sf.wp(u, tau)
        # wp has zeros, so measure against max(1, |wp|) rather than |wp|
        scale = max(1.0, abs(val))
        for other in (sf.wp(-u, tau), sf.wp(u + 1, tau), sf.wp(u + tau, tau)):
            assert abs(other - val) < 1e-10 * scale
        d = sf.wp_deriv(u, tau)
        assert abs(sf.wp_deriv(-u, tau) + d) <= 1e-10 * max(1.0, abs(d))

    @pytest.mark.parametrize("tau", [1j, 0.5 + 0.8j])
    def test_differential_equation(self, tau, rng):
        g2, g3 = oracles.g2_g3_lattice(tau)
        for _ in range(10):
            u = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5) * tau.imag)
            if abs(u) < 0.05:
                continue
            P, D = sf.wp_and_deriv(u, tau)
            lhs, rhs = D * D, 4 * P ** 3 - g2 * P - g3
            assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(4 * P ** 3))

    def test_laurent_leading_term(self, rng):
        assert rel(sf.wp(1e-3, 1j), 1e6) < 1e-3
        for _ in range(5):
            ray = cmath.exp(2j * math.pi * rng.uniform())
            for r in (1e-2, 1e-3):
                u = r * ray
                assert abs(u * u * sf.wp(u, 0.5 + 0.8j) - 1) < 10 * r * r

    def test_half_period_critical(self):
        assert abs(sf.wp_deriv(0.5, 1j)) < 1e-12

    @given(coords, coords)
    @settings(max_examples=30)
    def test_derivative_finite_difference(self, a, b):
        tau, h = 0.5 + 0.8j, 1e-5
        u = complex(a, b)
        x, _, _ = sf.reduce_argument(u, tau)
        if abs(x) < 0.05:
            return
        fd = (sf.wp(u + h, tau) - sf.wp(u - h, tau)) / (2 * h)
        d = sf.wp_deriv(u, tau)
        assert abs(fd - d) <= 1e-7 * max(1.0, abs(d))

    @pytest.mark.parametrize("u", [0, 1, 1j, 2 + 3j, 1e-10])
    def test_pole_guard(self, u):
        with pytest.raises(PoleAtLattice):
            sf.wp(u, 1j)
        with pytest.raises(PoleAtLattice):
            sf.wp_deriv(u, 1j)


def test_reduce_argument_bounds(rng):
    tau = 0.5 + 0.8j
    for _ in range(50):
        z = complex(*rng.uniform(-20, 20, 2))
        x, a, b = sf.reduce_argument(z, tau)
        assert abs(x.real) <= 0.5 + 1e-12 and abs(x.imag) <= tau.imag / 2 + 1e-12
        assert abs(x + a + b * tau - z) < 1e-12


def test_large_imaginary_argument_no_overflow():
    z = 0.2 + 10.3j
    val = sf.theta1(z, 1j)
    assert np.isfinite(val)
    assert rel(val, oracles.theta1_mp(z, 1j)) < 1e-11
