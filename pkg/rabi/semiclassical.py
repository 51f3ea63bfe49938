"""
Low-frequency variational machinery: spin-dependent effective potentials, the 2x2
variational energy eps(x), stationary points, degeneracy boundaries and the
flattening point where a first-order arc ends.
"""
import logging
import math
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, root

from rabi.errors import NoCompetition, NotFound, RangeTooNarrow
from rabi.hamiltonian import derived_scales, validate_params
from rabi.models import (FlatteningPoint, ModelParams, PotentialComponents,
                         SemiclassicalLandscape, StationaryPoint)

logger = logging.getLogger(__name__)

STATIONARY_TOL = 1e-10   # |d eps/dx| in units of omega / x_c
FLAT_TOL = 1e-8          # |d2 eps/dx2| in units of omega
SHOULDER_TOL = 1e-6      # |d eps/dx| in units of Omega / x_c at an inflection
DEFAULT_SAMPLES = 1201


def _components(p: ModelParams) -> PotentialComponents:
    s = derived_scales(p)
    g1p, g2p, g2tp, chi = s.g1_prime, s.g2_prime, s.g2_tilde_prime, p.chi
    denom = 2 * (1 - g2tp ** 2)
    return PotentialComponents(
        m_plus=1 / (1 - g2p + chi * g2p),
        m_minus=1 / (1 + g2p - chi * g2p),
        varpi_plus=math.sqrt((1 + chi * g2p) ** 2 - g2p ** 2),
        varpi_minus=math.sqrt((1 - chi * g2p) ** 2 - g2p ** 2),
        x0_plus=-g1p / (1 + g2tp),
        x0_minus=g1p / (1 - g2tp),
        b_plus=g2tp * g1p ** 2 / denom,
        b_minus=-g2tp * g1p ** 2 / denom,
        b0=-g1p ** 2 / denom,
        e0=-p.omega / 2,
    )


def potential_components(p: ModelParams) -> PotentialComponents:
    """
    Effective masses, frequencies, displacements and vertical shifts of the two spin
    potentials. Raises UnboundedSpectrum through validation.
    """
    validate_params(p)
    return _components(p)


def plot_offset(p: ModelParams) -> float:
    """Figure offset -(omega + Omega)/2; distinct from e0 = -omega/2"""
    return -(p.omega + p.Omega) / 2


def spin_potentials(p: ModelParams, x) -> Tuple[np.ndarray, np.ndarray]:
    """Dimensionless v_up(x), v_down(x) including the bias term -/+ eps/omega"""
    c = potential_components(p)
    x = np.asarray(x, dtype=float)
    v_plus = 0.5 * c.m_plus * c.varpi_plus ** 2 * (x - c.x0_plus) ** 2 + c.b_plus + c.b0 - p.eps / p.omega
    v_minus = 0.5 * c.m_minus * c.varpi_minus ** 2 * (x - c.x0_minus) ** 2 + c.b_minus + c.b0 + p.eps / p.omega
    return v_plus, v_minus


def _derivatives(p: ModelParams, c: PotentialComponents, x, order: int = 3):
    x = np.asarray(x, dtype=float)
    k_plus = c.m_plus * c.varpi_plus ** 2
    k_minus = c.m_minus * c.varpi_minus ** 2
    w = p.omega
    # bias enters in energy units exactly once
    A = w * (0.5 * k_plus * (x - c.x0_plus) ** 2 + c.b_plus + c.b0) - p.eps + c.e0
    B = w * (0.5 * k_minus * (x - c.x0_minus) ** 2 + c.b_minus + c.b0) + p.eps + c.e0
    A1, B1 = w * k_plus * (x - c.x0_plus), w * k_minus * (x - c.x0_minus)
    A2, B2 = w * k_plus, w * k_minus
    D, D1, D2 = A - B, A1 - B1, A2 - B2
    O2 = p.Omega ** 2
    R = np.sqrt(D * D + O2)
    e = 0.5 * ((A + B) - R)
    if order == 0:
        return e
    e1 = 0.5 * ((A1 + B1) - D * D1 / R)
    e2 = 0.5 * ((A2 + B2) - D1 * D1 * O2 / R ** 3 - D * D2 / R)
    e3 = -0.5 * (3 * D1 * D2 * O2 / R ** 3 - 3 * D * D1 ** 3 * O2 / R ** 5)
    return e, e1, e2, e3


def variational_energy(p: ModelParams, x):
    """eps(x) = 1/2[(eps_up + eps_down) - sqrt((eps_up - eps_down)^2 + Omega^2)]"""
    c = potential_components(p)
    e = _derivatives(p, c, x, order=0)
    return float(e) if np.ndim(e) == 0 else e


def energy_derivatives(p: ModelParams, x):
    """eps(x) and its first three analytic x-derivatives"""
    return _derivatives(p, potential_components(p), x)


def default_window(p: ModelParams, margin: float = 1.5) -> Tuple[float, float]:
    """Symmetric x-range covering every displacement and x_c"""
    c = potential_components(p)
    reach = margin * max(abs(c.x0_plus), abs(c.x0_minus), derived_scales(p).x_c, 1.0)
    return -reach, reach


def _safe_newton(f: Callable, df: Callable, a: float, b: float, ftol: float,
                 maxiter: int = 200) -> float:
    """Newton inside a sign-change bracket, bisecting whenever a step leaves it"""
    fa = f(a)
    x = 0.5 * (a + b)
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) <= ftol:
            return x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b = x
        lo, hi = min(a, b), max(a, b)
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return x
        dfx = df(x)
        x_new = x - fx / dfx if dfx != 0 else None
        if x_new is None or not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x


def landscape(p: ModelParams, xmin: Optional[float] = None, xmax: Optional[float] = None,
              n: int = DEFAULT_SAMPLES, shoulder_tol: float = SHOULDER_TOL) -> SemiclassicalLandscape:
    """
    Samples eps(x), brackets sign changes of the analytic derivative and refines each
    root; stationary inflections (shoulders) come from sign changes of the curvature.
    Raises:
        RangeTooNarrow: a displacement x0 lies outside [xmin, xmax].
    """
    c = potential_components(p)
    if xmin is None or xmax is None:
        lo, hi = default_window(p)
        xmin = lo if xmin is None else xmin
        xmax = hi if xmax is None else xmax
    for x0 in (c.x0_plus, c.x0_minus):
        if not xmin <= x0 <= xmax:
            raise RangeTooNarrow(f"displacement {x0:.6g} outside [{xmin:.6g}, {xmax:.6g}]")

    x_c = derived_scales(p).x_c
    x = np.linspace(xmin, xmax, n)
    e, d1, d2, _ = _derivatives(p, c, x)

    def f1(t):
        return float(_derivatives(p, c, t)[1])

    def f2(t):
        return float(_derivatives(p, c, t)[2])

    def f3(t):
        return float(_derivatives(p, c, t)[3])

    ftol = STATIONARY_TOL * p.omega / x_c
    roots: List[float] = [float(x[i]) for i in np.nonzero(d1 == 0)[0]]
    for i in np.nonzero(d1[:-1] * d1[1:] < 0)[0]:
        roots.append(_safe_newton(f1, f2, float(x[i]), float(x[i + 1]), ftol))

    spacing = (xmax - xmin) / (n - 1)
    points: List[StationaryPoint] = []
    for r in roots:
        curv = f2(r)
        if abs(curv) <= FLAT_TOL * p.omega:
            kind = "inflection"
        else:
            kind = "minimum" if curv > 0 else "saddle"
        points.append(StationaryPoint(x=r, energy=float(_derivatives(p, c, r, 0)), kind=kind, curvature=curv))

    # stationary inflections: eps'' changes sign where eps' touches zero without crossing
    slope_tol = shoulder_tol * p.Omega / x_c
    for i in np.nonzero(d2[:-1] * d2[1:] < 0)[0]:
        xi = brentq(f2, float(x[i]), float(x[i + 1]), xtol=1e-14 * max(1.0, x_c))
        if abs(f1(xi)) > slope_tol:
            continue
        if any(abs(sp.x - xi) <= 2 * spacing for sp in points):
            continue
        points.append(StationaryPoint(x=xi, energy=float(_derivatives(p, c, xi, 0)),
                                      kind="inflection", curvature=f2(xi)))

    points.sort(key=lambda sp: sp.x)
    land = SemiclassicalLandscape(x=x, energy=e, stationary_points=points)
    minima = land.minima
    if len(minima) >= 2:
        left, right = minima[0], minima[-1]
        saddles = [sp for sp in points if sp.kind == "saddle" and left.x < sp.x < right.x]
        land.x_L, land.x_R = left.x, right.x
        if saddles:
            land.x_S = max(saddles, key=lambda sp: sp.energy).x
    return land


def _competition_gap(q: ModelParams, samples: int) -> Optional[float]:
    """eps(x_R) - eps(x_L) when two minima compete, else None"""
    minima = landscape(q, n=samples).minima
    if len(minima) < 2:
        return None
    return minima[-1].energy - minima[0].energy


def degeneracy_boundary(p: ModelParams, free: str, bracket: Tuple[float, float],
                        samples: int = 64, landscape_points: int = DEFAULT_SAMPLES,
                        rtol: float = 1e-10) -> float:
    """
    Critical value of the free parameter (g1, eps or g2) where the two competing minima
    are degenerate, by bisection on eps(x_R) - eps(x_L).
    On the parity-symmetric line (eps = 0, g2_tilde = 0) the degeneracy is exact on
    one side and the boundary is where the curvature at the origin vanishes.
    Raises:
        NoCompetition: no bracketed sign change between two-minimum points.
    """
    if free not in ("g1", "eps", "g2"):
        raise ValueError(f"unsupported free parameter '{free}'")
    lo, hi = float(bracket[0]), float(bracket[1])

    def at(v: float) -> ModelParams:
        q = p.replace(**{free: v})
        validate_params(q)
        return q

    symmetric = free == "g1" and p.eps == 0 and (1 + p.chi) * p.g2 == 0
    if symmetric:
        def curvature(v: float) -> float:
            q = at(v)
            return float(_derivatives(q, _components(q), 0.0)[2])
        c_lo, c_hi = curvature(lo), curvature(hi)
        if c_lo * c_hi > 0:
            raise NoCompetition("curvature at the origin keeps its sign across the bracket")
        return brentq(curvature, lo, hi, xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps))

    values = np.linspace(lo, hi, samples)
    gaps = [_competition_gap(at(float(v)), landscape_points) for v in values]
    if all(g is None for g in gaps):
        raise NoCompetition(f"only one minimum across {free} in [{lo:.6g}, {hi:.6g}]")

    for i in range(samples - 1):
        g_a, g_b = gaps[i], gaps[i + 1]
        if g_a is None or g_b is None:
            continue
        if g_a == 0.0:
            return float(values[i])
        if g_a * g_b > 0:
            continue
        a, b, ga = float(values[i]), float(values[i + 1]), g_a
        while abs(b - a) > rtol * max(abs(a), abs(b), 1e-300):
            mid = 0.5 * (a + b)
            gm = _competition_gap(at(mid), landscape_points)
            if gm is None:
                raise NoCompetition(f"competition lost inside bisection at {free}={mid:.12g}")
            if gm == 0.0:
                return mid
            if (gm > 0) == (ga > 0):
                a, ga = mid, gm
            else:
                b = mid
        return 0.5 * (a + b)

    raise NoCompetition(f"minima never exchange order across {free} in [{lo:.6g}, {hi:.6g}]")


def _scaled_conditions(p: ModelParams, unknowns) -> np.ndarray:
    u, b, a = unknowns
    s = derived_scales(p)
    q = p.replace(g1=b * s.g_s, g2=a * s.g_t / (1 + p.chi))
    c = _components(q)
    x_c = s.x_c
    _, e1, e2, e3 = _derivatives(q, c, u * x_c)
    return np.array([e1 * x_c, e2 * x_c ** 2, e3 * x_c ** 3]) / p.Omega


def saddle_flattening_point(p: ModelParams, adjacent_factor: float = 1.5) -> FlatteningPoint:
    """
    End of the first-order arc on the g2 < 0 side for a fixed bias eps > 0.
    At the end x_L, x_S and x_R merge, so the degeneracy condition is taken in its
    limiting form and eps' = eps'' = eps''' = 0 is solved over (x, g1, g2).
    The result is accepted only when two minima still compete further along the arc.
    Raises:
        NotFound: no solution, or the solution is an inflection that ends no arc.
    """
    if not p.eps > 0:
        raise NotFound("arc end requires a positive bias")
    s = derived_scales(p)
    e = p.eps / p.Omega
    a0 = max(-(4 * e) ** (1 / 3), -0.95)
    b0 = 1 - 0.75 * a0 * a0
    u0 = a0 * b0 / (1 - a0 * a0)

    sol = root(lambda z: _scaled_conditions(p, z), np.array([u0, b0, a0]), method="hybr", tol=1e-14)
    u, b, a = (float(v) for v in sol.x)
    residual = float(np.max(np.abs(_scaled_conditions(p, sol.x)))) if np.all(np.isfinite(sol.x)) else math.inf
    if not sol.success and residual > 1e-9:
        raise NotFound(f"flattening conditions not met (residual={residual:.3e}): {sol.message}")
    if not (-1 < a < 0 and b > 0):
        raise NotFound(f"flattening point outside the arc branch (g2_bar={a:.6g}, g1_bar={b:.6g})")

    g1 = b * s.g_s
    a_adj = max(a * adjacent_factor, -0.97)
    q_adj = p.replace(g2=a_adj * s.g_t / (1 + p.chi))
    try:
        degeneracy_boundary(q_adj, "g1", (0.2 * g1, 1.5 * g1), samples=256)
    except NoCompetition as exc:
        raise NotFound("flattening point does not terminate a first-order arc") from exc

    logger.debug("arc end at g1=%.6g g_s, g2_tilde=%.6g g_t", b, a)
    return FlatteningPoint(eps=p.eps, g1=g1, g2=a * s.g_t / (1 + p.chi), g2_tilde=a * s.g_t, x=u * s.x_c)
