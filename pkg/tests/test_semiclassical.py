import math

import numpy as np
import pytest
from scipy.optimize import brentq, minimize_scalar

from rabi.boundaries import arc_end_closed_form
from rabi.eigensolve import converged_ground
from rabi.errors import NoCompetition, NotFound, RangeTooNarrow, UnboundedSpectrum
from rabi.hamiltonian import derived_scales
from rabi.models import ModelParams
from rabi.semiclassical import (default_window, degeneracy_boundary, energy_derivatives, landscape,
                                plot_offset, potential_components,
                                saddle_flattening_point, spin_potentials,
                                variational_energy)

OMEGA = 0.01
G_S = math.sqrt(OMEGA) / 2
G_T = OMEGA / 2
X_C = math.sqrt(2) * G_S / OMEGA


def _point(b=0.0, a=0.0, e=0.0):
    """Low-frequency point from g1/g_s, g2/g_t and eps/Omega"""
    return ModelParams(omega=OMEGA, g1=b * G_S, g2=a * G_T, eps=e)


def _scaled_energy(u, a, b, e):
    s = a * u * u / 4 + b * u / 2 - e
    return u * u / 4 - np.sqrt(s * s + 0.25)


def _scaled_gap(a, b, e):
    """Right minus left minimum of the scaled energy, None with fewer than two minima"""
    u = np.linspace(-4, 4, 80001)
    f = _scaled_energy(u, a, b, e)
    idx = np.nonzero((f[1:-1] < f[:-2]) & (f[1:-1] < f[2:]))[0] + 1
    if len(idx) < 2:
        return None
    vals = [minimize_scalar(lambda t: _scaled_energy(t, a, b, e), bounds=(u[i - 1], u[i + 1]),
                            method="bounded", options={"xatol": 1e-12}).fun for i in (idx[0], idx[-1])]
    return vals[1] - vals[0]


class TestPotentials:
    """Тесты для спиновых потенциалов"""

    def test_components_without_two_photon_term(self):
        """g2 = 0: unit masses and frequencies, x0 = -/+ g1'"""
        p = ModelParams(omega=0.1, g1=0.2)
        c = potential_components(p)
        g1p = derived_scales(p).g1_prime
        assert c.m_plus == c.m_minus == pytest.approx(1.0)
        assert c.varpi_plus == c.varpi_minus == pytest.approx(1.0)
        assert c.x0_plus == pytest.approx(-g1p)
        assert c.x0_minus == pytest.approx(g1p)
        assert c.b0 == pytest.approx(-g1p ** 2 / 2)
        assert c.e0 == pytest.approx(-0.05)

    def test_stiffness_depends_on_g2_tilde(self):
        """m * varpi^2 = 1 +/- g2_tilde'"""
        p = ModelParams(omega=0.1, g1=0.2, g2=0.01, chi=0.5)
        c = potential_components(p)
        t = derived_scales(p).g2_tilde_prime
        assert c.m_plus * c.varpi_plus ** 2 == pytest.approx(1 + t)
        assert c.m_minus * c.varpi_minus ** 2 == pytest.approx(1 - t)

    def test_stark_folding(self):
        """(g2, chi) pairs with the same g2_tilde give the same potentials"""
        x = np.linspace(-6, 6, 241)
        a = spin_potentials(ModelParams(omega=0.5, g1=0.3, g2=0.4 * 0.25, eps=0.02), x)
        b = spin_potentials(ModelParams(omega=0.5, g1=0.3, g2=0.2 * 0.25, chi=1.0, eps=0.02), x)
        np.testing.assert_allclose(a[0], b[0], atol=1e-12)
        np.testing.assert_allclose(a[1], b[1], atol=1e-12)

    def test_unbounded_rejected(self):
        """Potentials need a bounded spectrum"""
        with pytest.raises(UnboundedSpectrum):
            potential_components(ModelParams(omega=0.1, g2=0.06))


class TestVariationalEnergy:
    """Тесты для вариационной энергии"""

    def test_origin_is_plot_offset(self):
        """eps(0) = -(omega + Omega)/2 on the symmetric line"""
        p = _point(b=1.3)
        assert variational_energy(p, 0.0) == pytest.approx(plot_offset(p), abs=1e-14)
        assert plot_offset(p) == pytest.approx(-0.505)

    def test_scaled_form(self):
        """eps(u x_c) = Omega f(u) - omega/2"""
        p = _point(b=1.1, a=-0.4, e=0.03)
        u = np.linspace(-2, 2, 41)
        expected = _scaled_energy(u, -0.4, 1.1, 0.03) - OMEGA / 2
        np.testing.assert_allclose(variational_energy(p, u * X_C), expected, atol=1e-12)

    def test_derivatives_match_finite_differences(self):
        """Analytic eps', eps'', eps''' against central differences"""
        p = ModelParams(omega=0.3, g1=0.35, g2=0.05, chi=0.2, eps=0.04)
        x, h = np.array([-1.3, 0.2, 2.1]), 1e-4
        e, e1, e2, e3 = energy_derivatives(p, x)
        _, p1, p2, _ = energy_derivatives(p, x + h)
        _, m1, m2, _ = energy_derivatives(p, x - h)
        np.testing.assert_allclose(e1, (variational_energy(p, x + h) - variational_energy(p, x - h)) / (2 * h),
                                   rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(e2, (p1 - m1) / (2 * h), rtol=1e-6, atol=1e-9)
        np.testing.assert_allclose(e3, (p2 - m2) / (2 * h), rtol=1e-5, atol=1e-8)

    def test_joint_sign_symmetry(self):
        """(eps, g2) -> (-eps, -g2) mirrors x"""
        p = _point(b=1.2, a=0.3, e=0.02)
        q = _point(b=1.2, a=-0.3, e=-0.02)
        x = np.linspace(-3 * X_C, 3 * X_C, 61)
        np.testing.assert_allclose(variational_energy(p, x), variational_energy(q, -x), atol=1e-13)


class TestLandscape:
    """Тесты для стационарных точек"""

    def test_single_minimum_below_g_s(self):
        """g1 < g_s: one minimum at the origin"""
        land = landscape(_point(b=0.9))
        assert [sp.kind for sp in land.stationary_points] == ["minimum"]
        assert land.stationary_points[0].x == pytest.approx(0.0, abs=1e-12)
        assert land.x_L is None and land.x_S is None

    def test_double_well_above_g_s(self):
        """g1 > g_s: symmetric minima at u^2 = (b^4 - 1)/b^2, saddle at 0"""
        b = 1.2
        land = landscape(_point(b=b))
        assert [sp.kind for sp in land.stationary_points] == ["minimum", "saddle", "minimum"]
        u = math.sqrt(b ** 4 - 1) / b
        assert land.x_R == pytest.approx(u * X_C, rel=1e-8)
        assert land.x_L == pytest.approx(-u * X_C, rel=1e-8)
        assert land.x_S == pytest.approx(0.0, abs=1e-12)
        left, _, right = land.stationary_points
        assert left.energy == pytest.approx(right.energy, abs=1e-13)
        assert left.curvature > 0

    def test_range_too_narrow(self):
        """Window must contain both displacements"""
        with pytest.raises(RangeTooNarrow):
            landscape(_point(b=1.2), xmin=-0.1, xmax=0.1)

    def test_shoulder_on_spinodal(self):
        """A stationary inflection is reported as a shoulder"""
        a, c = 0.5, 0.3
        B = 0.25 * (1 - c * c) ** -1.5 * (1 + a * c) ** 3
        b = 2 * math.sqrt(B)
        e = 0.5 * c / math.sqrt(1 - c * c) - B * (1 - (1 + a * c) ** -2) / a
        u = -c * b / (1 + a * c)
        assert b == pytest.approx(1.32362, abs=1e-5)
        assert e == pytest.approx(-0.05637, abs=1e-5)

        p = _point(b=b, a=a, e=e)
        _, e1, e2, _ = energy_derivatives(p, u * X_C)
        assert abs(e1 * X_C) < 1e-12
        assert abs(e2 * X_C ** 2) < 1e-12

        land = landscape(p)
        shoulders = [sp for sp in land.stationary_points if sp.kind == "inflection"]
        assert len(shoulders) == 1
        assert shoulders[0].x == pytest.approx(u * X_C, rel=1e-6)
        assert len(land.minima) == 1


class TestDegeneracyBoundary:
    """Тесты для границы вырождения минимумов"""

    def test_symmetric_line_gives_g_s(self):
        """eps = g2 = 0: the boundary is g_s"""
        g = degeneracy_boundary(_point(), "g1", (0.5 * G_S, 1.5 * G_S))
        assert g == pytest.approx(G_S, rel=1e-9)

    def test_round_boundary(self):
        """eps = 0, g2 = 0.6 g_t: degenerate minima at g1 = 0.8 g_s"""
        g = degeneracy_boundary(_point(a=0.6), "g1", (0.6 * G_S, 1.0 * G_S))
        assert g == pytest.approx(0.8 * G_S, rel=1e-6)

    def test_tilted_boundary_in_eps(self):
        """Bias boundary agrees with a direct minimization of the scaled energy"""
        a, b = 0.5, 1.2
        eps_c = degeneracy_boundary(_point(b=b, a=a), "eps", (0.05, 0.3))
        oracle = brentq(lambda e: _scaled_gap(a, b, e), eps_c - 0.005, eps_c + 0.005, xtol=1e-12)
        assert eps_c == pytest.approx(oracle, abs=1e-6)

    def test_no_competition(self):
        """Below the spinodal only one minimum exists"""
        with pytest.raises(NoCompetition):
            degeneracy_boundary(_point(a=0.6), "g1", (0.1 * G_S, 0.3 * G_S), samples=8)

    def test_unsupported_parameter(self):
        """Only g1, eps and g2 can be free"""
        with pytest.raises(ValueError):
            degeneracy_boundary(_point(), "chi", (0.0, 1.0))


class TestSaddleFlattening:
    """Тесты для конца дуги первого рода"""

    def test_matches_closed_form(self):
        """x_L, x_S and x_R merge where the closed form puts the arc end"""
        fp = saddle_flattening_point(_point(e=0.005))
        a, b = arc_end_closed_form(0.005)
        assert fp.g2_tilde / G_T == pytest.approx(a, rel=1e-6)
        assert fp.g1 / G_S == pytest.approx(b, rel=1e-6)
        assert fp.g2 == pytest.approx(fp.g2_tilde)
        assert fp.eps == 0.005

    def test_requires_positive_bias(self):
        """eps <= 0 has no arc end on this branch"""
        with pytest.raises(NotFound):
            saddle_flattening_point(_point(e=0.0))


@pytest.mark.slow
class TestExactAgreement:
    """Тесты для согласия с точной диагонализацией"""

    @pytest.mark.parametrize("b", [0.0, 0.5, 1.0, 1.5])
    @pytest.mark.parametrize("a, e", [(0.0, 0.0), (0.2, 0.005)])
    def test_minimum_tracks_ground_energy(self, b, a, e):
        """omega = 0.001: the lowest minimum of eps(x) lies within 3 omega of the exact ground energy"""
        omega = 0.001
        p = ModelParams(omega=omega, g1=b * math.sqrt(omega) / 2, g2=a * omega / 2, eps=e)
        lowest = float(np.min(variational_energy(p, np.linspace(*default_window(p), 20001))))
        assert abs(lowest - converged_ground(p).energy) <= 3 * omega
