"""
Closed-form boundaries and auxiliary analytic quantities.
Values are returned with their validity domain and never clamped; every coupling
ratio uses the Stark-folded g2_tilde, so g2_bar = g2_tilde / g_t.
"""
import math
from typing import Dict, Tuple

import numpy as np
from scipy.optimize import brentq

from rabi.errors import DivisionByZeroG2, DomainError
from rabi.hamiltonian import derived_scales
from rabi.models import BoundaryValue, ModelParams, PolaronParameters

DELTA_C = math.exp(-1)


def _ratios(p: ModelParams) -> Tuple[float, float]:
    s = derived_scales(p)
    return abs(p.g1) / s.g_s, s.g2_tilde / s.g_t


def _bare_g2(p: ModelParams, g2_bar: float) -> float:
    return g2_bar * derived_scales(p).g_t / (1 + p.chi)


def g1c_round(p: ModelParams) -> float:
    """Round boundary g_s * sqrt(1 - g2_bar^2) of the symmetric low-frequency diagram"""
    _, a = _ratios(p)
    if abs(a) >= 1:
        raise DomainError(f"|g2_bar|={abs(a):.6g} outside the bounded regime")
    return derived_scales(p).g_s * math.sqrt(1 - a * a)


def _tilted_eps(a: float, b: float) -> float:
    return a * (b / math.sqrt(1 - a * a) - 1)


def boundary_low_freq(p: ModelParams, solve_for: str = "g1") -> BoundaryValue:
    """
    Leading-order tilted boundary of the low-frequency limit, solved for g1, eps or g2.
    Returns:
        BoundaryValue in absolute units; g2 results are the bare coupling.
    """
    s = derived_scales(p)
    b, a = _ratios(p)
    if abs(a) >= 1:
        raise DomainError(f"|g2_bar|={abs(a):.6g} outside the bounded regime")

    if solve_for == "g1":
        if a == 0:
            raise DivisionByZeroG2("g1 form of the tilted boundary needs g2_tilde != 0")
        shift = s.g_t * p.eps / (s.g2_tilde * p.Omega)
        validity = "low frequency, leading order"
        if shift < 0:
            validity = "opposite-sign branch: valid only for |g2| < g2E"
        value = s.g_s * (1 + shift) * math.sqrt(1 - a * a)
        return BoundaryValue(kind="tilted_g1c", value=value, validity=validity)

    if solve_for == "eps":
        return BoundaryValue(kind="tilted_epsc", value=_tilted_eps(a, b) * p.Omega,
                             validity="low frequency, leading order")

    if solve_for == "g2":
        e = p.eps / p.Omega
        grid = np.linspace(-1 + 1e-9, 1 - 1e-9, 4001)
        f = np.array([_tilted_eps(v, b) - e for v in grid])
        roots = []
        for i in np.nonzero(f[:-1] * f[1:] <= 0)[0]:
            if f[i] == 0:
                roots.append(float(grid[i]))
            else:
                roots.append(brentq(lambda v: _tilted_eps(v, b) - e, grid[i], grid[i + 1], xtol=1e-15))
        if not roots:
            raise DomainError(f"no tilted boundary crossing at g1_bar={b:.6g}, eps={p.eps:.6g}")
        root = min(roots, key=abs)
        return BoundaryValue(kind="tilted_g2c", value=_bare_g2(p, root),
                             validity="low frequency, leading order; root nearest g2 = 0")

    raise ValueError(f"unsupported solve_for '{solve_for}'")


def g2E_series(eps: float, Omega: float = 1.0) -> float:
    """Weak-bias series for the arc end, in units of g_t"""
    if eps < 0:
        raise DomainError("series is written for eps >= 0; use the sign symmetry")
    r = eps / (5 * Omega)
    return 3 * r ** (1 / 3) + 226 * eps / (75 * Omega) - 362011 / 27000 * r ** (5 / 3)


def arc_end_closed_form(eps: float, Omega: float = 1.0) -> Tuple[float, float]:
    """
    Exact arc end of the variational energy: eps/Omega = -a^3 / (4 sqrt(1 - a^2)),
    g1_bar = (1 - a^2)^(3/4).
    Returns:
        (g2_bar, g1_bar) with g2_bar < 0 for eps > 0.
    """
    if not eps > 0:
        raise DomainError("arc end requires a positive bias")
    e = eps / Omega
    a = brentq(lambda v: -v ** 3 / (4 * math.sqrt(1 - v * v)) - e, -1 + 1e-15, 0.0, xtol=1e-15)
    return a, (1 - a * a) ** 0.75


def g2E_exact(eps: float, Omega: float = 1.0) -> BoundaryValue:
    a, _ = arc_end_closed_form(eps, Omega)
    return BoundaryValue(kind="g2E_exact", value=abs(a), unit="gt", validity="low frequency")


def polaron_params(p: ModelParams) -> PolaronParameters:
    """
    Two-packet (left/right polaron) quantities above g_s.
    Raises:
        DomainError: g1 < g_s, where zeta is imaginary.
    """
    b, a = _ratios(p)
    if b < 1:
        raise DomainError(f"g1_bar={b:.6g} below 1; displacement renormalization undefined")
    zeta = math.sqrt(1 - b ** -4)
    t = (1 - zeta) ** 2 / 2 + p.omega / (b * b * p.Omega)
    alpha = math.sqrt((1 + zeta) / 2)
    beta = math.sqrt((1 - zeta) / 2)
    S = math.exp(-zeta ** 2 * b ** 2 * p.Omega / (2 * p.omega))
    return PolaronParameters(
        zeta=zeta, t=t, alpha=alpha, beta=beta, S=S, delta_c=DELTA_C, g1_bar=b, g2_bar=a,
        tunneling=-0.5 * p.Omega * S,
        overlap=alpha * beta * (p.omega + (1 - zeta) ** 2 * b * b * p.Omega / 2) * S,
    )


def energy_imbalance(p: ModelParams) -> float:
    """Leading-order eps_L - eps_R = zeta * [g2_bar g1_bar^2 zeta^2 Omega / 2 - 2 eps]"""
    pp = polaron_params(p)
    return pp.zeta * (pp.g2_bar * pp.g1_bar ** 2 * pp.zeta ** 2 * p.Omega / 2 - 2 * p.eps)


def _finite_freq_terms(p: ModelParams) -> Tuple[float, float]:
    # tunneling split and the slope of boundary IV in g2_bar
    pp = polaron_params(p)
    split = (1 - pp.t) * p.Omega / (4 * pp.delta_c * pp.zeta) * pp.S if pp.zeta > 0 else math.inf
    slope = 0.25 * pp.zeta ** 2 * pp.g1_bar ** 2 * p.Omega
    return split, slope


def boundaries_finite_freq(p: ModelParams, solve_for: str = "eps") -> Dict[str, BoundaryValue]:
    """
    Boundaries II, III (tunneling-split pair) and IV (left/right degeneracy) at finite frequency.
    Returns:
        {"II": ..., "III": ..., "IV": ...}; eps results in absolute units, g2 results bare.
    """
    split, slope = _finite_freq_terms(p)
    validity = "g1 > g_s, weak eps and g2, leading order"
    if solve_for == "eps":
        a = _ratios(p)[1]
        iv = slope * a
        return {
            "II": BoundaryValue(kind="II", value=iv + split, validity=validity),
            "III": BoundaryValue(kind="III", value=iv - split, validity=validity),
            "IV": BoundaryValue(kind="IV", value=iv, validity=validity),
        }
    if solve_for == "g2":
        if slope == 0:
            raise DomainError("boundaries in g2 need g1 > g_s")
        return {
            "II": BoundaryValue(kind="II", value=_bare_g2(p, (p.eps - split) / slope), validity=validity),
            "III": BoundaryValue(kind="III", value=_bare_g2(p, (p.eps + split) / slope), validity=validity),
            "IV": BoundaryValue(kind="IV", value=_bare_g2(p, p.eps / slope), validity=validity),
        }
    raise ValueError(f"unsupported solve_for '{solve_for}'")


def g1c_IV(p: ModelParams) -> float:
    """Frequency-induced tricritical boundary IV solved for g1"""
    s = derived_scales(p)
    a = s.g2_tilde / s.g_t
    if not a > 0:
        raise DomainError("g1c_IV needs g2_bar > 0")
    root = math.sqrt(4 * p.eps ** 2 + a * a * p.Omega ** 2)
    return s.g_s * math.sqrt((2 * p.eps + root) / (p.Omega * a))


def g1c_I(p: ModelParams) -> float:
    """Finite-frequency shift of the g_s transition"""
    g_s = derived_scales(p).g_s
    return math.sqrt(p.omega ** 2 + math.sqrt(p.omega ** 4 + g_s ** 4))


def sensitivity_ratio(p: ModelParams) -> float:
    """eps-to-g2 sensitivity of boundary II, zeta^2 g1_bar^2 Omega / (4 g_t)"""
    b, _ = _ratios(p)
    if not b > 1:
        raise DomainError("sensitivity ratio needs g1 > g_s")
    zeta_sq = 1 - b ** -4
    return zeta_sq * b * b * p.Omega / (4 * derived_scales(p).g_t)
