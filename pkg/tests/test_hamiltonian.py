import math

import numpy as np
import pytest
import scipy.linalg

from rabi.errors import (ConfigValidationError, NonPositiveFrequency,
                         TruncationTooSmall, UnboundedSpectrum)
from rabi.hamiltonian import (bandwidth, build_hamiltonian, derived_scales,
                              estimate_truncation, matvec, parity_operator,
                              quote_value, resolve_params, to_dense, to_sparse,
                              validate_params, with_axis_value)
from rabi.models import ModelParams, ParamSpec, Quantity


class TestDerivedScales:
    """Тесты для производных масштабов"""

    def test_scales(self):
        """g_s = sqrt(omega Omega)/2, g_t = omega/2, x_c = sqrt(2) g_s / omega"""
        s = derived_scales(ModelParams(omega=0.1, g1=0.2, g2=0.01, chi=0.5))
        assert s.g_s == pytest.approx(0.158113883, rel=1e-9)
        assert s.g_t == pytest.approx(0.05)
        assert s.x_c == pytest.approx(math.sqrt(5.0), rel=1e-12)
        assert s.g2_tilde == pytest.approx(0.015)
        assert s.g1_prime == pytest.approx(math.sqrt(2) * 2.0)
        assert s.g2_tilde_prime == pytest.approx(0.3)


class TestValidateParams:
    """Тесты для проверки параметров"""

    def test_valid(self):
        """A bounded point passes and returns its scales"""
        assert validate_params(ModelParams(omega=0.1, g1=0.2, g2=0.02)).g_t == pytest.approx(0.05)

    def test_non_positive_frequency(self):
        """omega <= 0 or Omega <= 0 is rejected"""
        with pytest.raises(NonPositiveFrequency):
            validate_params(ModelParams(omega=0.0))
        with pytest.raises(NonPositiveFrequency):
            validate_params(ModelParams(omega=0.1, Omega=-1.0))

    def test_two_photon_limit(self):
        """|g2_tilde| >= g_t leaves the spectrum unbounded"""
        with pytest.raises(UnboundedSpectrum):
            validate_params(ModelParams(omega=0.1, g2=0.05))
        with pytest.raises(UnboundedSpectrum):
            validate_params(ModelParams(omega=0.1, g2=0.03, chi=1.0))

    def test_negative_effective_mass(self):
        """A non-positive effective mass is rejected even below g_t"""
        p = ModelParams(omega=0.1, g2=0.03, chi=-0.9)
        assert abs(derived_scales(p).g2_tilde) < derived_scales(p).g_t
        with pytest.raises(UnboundedSpectrum):
            validate_params(p)


class TestUnits:
    """Тесты для разрешения единиц"""

    def test_resolve(self):
        """Units are resolved against the point's own scales"""
        spec = ParamSpec(omega=Quantity(value=0.01, unit="Omega"),
                         g1=Quantity(value=1.2, unit="gs"),
                         g2=Quantity(value=0.5, unit="gt"),
                         eps=Quantity(value=0.3, unit="Omega"))
        p = resolve_params(spec)
        assert p.omega == pytest.approx(0.01)
        assert p.g1 == pytest.approx(0.06)
        assert p.g2 == pytest.approx(0.0025)
        assert p.eps == pytest.approx(0.3)

    def test_quote_inverts_resolve(self):
        """quote_value returns the quoted number"""
        p = resolve_params(ParamSpec(omega=Quantity(value=0.1), g1=Quantity(value=1.5, unit="gs")))
        assert quote_value(p, "g1", "gs") == pytest.approx(1.5)
        assert quote_value(p, "omega", "Omega") == pytest.approx(0.1)

    def test_omega_in_gs_rejected(self):
        """omega cannot be quoted against g_s"""
        with pytest.raises(ConfigValidationError):
            resolve_params(ParamSpec(omega=Quantity(value=1.0, unit="gs")))

    def test_big_omega_must_be_absolute(self):
        """Omega is the reference unit"""
        with pytest.raises(ConfigValidationError):
            resolve_params(ParamSpec(omega=Quantity(value=0.1), Omega=Quantity(value=1.0, unit="Omega")))

    def test_with_axis_value_unknown(self):
        """Axis values only for known parameters"""
        with pytest.raises(ConfigValidationError):
            with_axis_value(ParamSpec(omega=Quantity(value=0.1)), "delta", 1.0, "abs")


class TestBuildHamiltonian:
    """Тесты для построения гамильтониана"""

    def test_too_small(self):
        """N < 2 is rejected"""
        with pytest.raises(TruncationTooSmall):
            build_hamiltonian(ModelParams(omega=1.0), 1)

    def test_dimension_and_bands(self):
        """Interleaved basis of size 2(N+1) with bands 0, 1, 2, 4"""
        H = build_hamiltonian(ModelParams(omega=1.0, g1=0.3, g2=0.1, chi=0.2, eps=0.05), 10)
        assert H.dimension == 22
        assert sorted(H.bands) == [0, 1, 2, 4]
        assert bandwidth(H) == 4
        assert bandwidth(build_hamiltonian(ModelParams(omega=1.0, g1=0.3), 10)) == 2

    def test_representations_agree(self):
        """Dense, sparse and banded matvec are the same operator"""
        H = build_hamiltonian(ModelParams(omega=0.7, g1=0.3, g2=0.1, chi=0.4, eps=-0.05), 20)
        dense = to_dense(H)
        np.testing.assert_array_equal(dense, dense.T)
        np.testing.assert_allclose(to_sparse(H).toarray(), dense)
        v = np.random.default_rng(1).normal(size=H.dimension)
        np.testing.assert_allclose(matvec(H, v), dense @ v, atol=1e-12)

    def test_decoupled_spectrum(self):
        """g1 = g2 = 0: levels n*omega -/+ sqrt(eps^2 + Omega^2/4)"""
        H = build_hamiltonian(ModelParams(omega=1.0, eps=0.3), 4)
        w = scipy.linalg.eigvalsh(to_dense(H))
        r = math.sqrt(0.34)
        expected = sorted([n + s * r for n in range(5) for s in (-1, 1)])
        np.testing.assert_allclose(w, expected, atol=1e-12)

    def test_squeezed_oscillator(self):
        """Omega = 0, g2 = 0.15 omega: E0 = (sqrt(omega^2 - 4 g2^2) - omega)/2"""
        H = build_hamiltonian(ModelParams(omega=1.0, Omega=0.0, g2=0.15), 60)
        e0 = scipy.linalg.eigvalsh(to_dense(H))[0]
        assert e0 == pytest.approx((math.sqrt(0.91) - 1) / 2, rel=1e-8)
        assert e0 == pytest.approx(-0.02303, abs=1e-5)


class TestParity:
    """Тесты для оператора четности"""

    def test_commutes_on_symmetric_line(self):
        """Parity commutes with H at eps = g2 = 0"""
        N = 30
        H = to_sparse(build_hamiltonian(ModelParams(omega=0.5, g1=0.4), N))
        P = parity_operator(N)
        assert abs(P @ H - H @ P).max() < 1e-12

    def test_broken_by_two_photon_term(self):
        """The g2 term anticommutes with parity"""
        N = 30
        H = to_sparse(build_hamiltonian(ModelParams(omega=0.5, g1=0.4, g2=0.1), N))
        P = parity_operator(N)
        assert abs(P @ H - H @ P).max() > 1e-3

    def test_involution(self):
        """P^2 = 1"""
        P = parity_operator(8)
        np.testing.assert_allclose((P @ P).toarray(), np.eye(18))


class TestTruncationEstimate:
    """Тесты для начального усечения"""

    def test_minimum(self):
        """Never below 32"""
        assert estimate_truncation(ModelParams(omega=1.0)) == 32

    def test_scales_with_displacement(self):
        """N0 = ceil(8 x0^2)"""
        g_s = math.sqrt(0.1) / 2
        assert estimate_truncation(ModelParams(omega=0.1, g1=2 * g_s)) == 160
