"""
Order parameters, spin-filtered displacements, parity and position-space profiles.
"""
import math
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from rabi.errors import DegenerateAmbiguity, OverflowGuard
from rabi.hamiltonian import derived_scales
from rabi.models import GroundSolution, ModelParams, ObservableSet, WaveProfile

DEPLETED_WEIGHT = 1e-10
# Highest Fock index the log-scaled recurrence is trusted for
HERMITE_MAX_ORDER = 2 ** 19
_RESCALE_AT = 1e100


def split_spins(coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return coeffs[0::2], coeffs[1::2]


def _displacement(c: np.ndarray) -> float:
    # <a^dag + a>/sqrt(2) restricted to one spin sector
    n = np.arange(1, len(c))
    return float(math.sqrt(2) * np.sum(np.sqrt(n) * c[:-1] * c[1:]))


def compute_observables(sol: GroundSolution, p: ModelParams, strict: bool = True) -> ObservableSet:
    """
    Observables of a converged ground state.
    With strict=True a quasi-degenerate solution raises DegenerateAmbiguity; scans pass
    strict=False and carry the flag instead.
    """
    if strict and sol.quasi_degenerate:
        raise DegenerateAmbiguity(
            f"ground state is quasi-degenerate (gap={sol.gap:.3e}); sigma_z is basis dependent"
        )
    c_up, c_dn = split_spins(sol.coeffs)
    rho_plus = float(np.sum(c_up ** 2))
    rho_minus = float(np.sum(c_dn ** 2))
    norm = rho_plus + rho_minus
    rho_plus, rho_minus = rho_plus / norm, rho_minus / norm

    cross = c_up * c_dn
    sigma_x = float(2 * np.sum(cross) / norm)
    signs = np.where(np.arange(len(c_up)) % 2 == 0, 1.0, -1.0)
    parity = float(2 * np.sum(signs * cross) / norm)

    x_plus = _displacement(c_up) / norm
    x_minus = _displacement(c_dn) / norm

    scales = derived_scales(p)
    # reference displacement |x0,s| for s = sign(-g2_tilde), spin up when g2_tilde = 0
    side = -1 if scales.g2_tilde > 0 else 1
    x0_ref = abs(scales.g1_prime / (1 + side * scales.g2_tilde_prime))

    depleted = False
    tilde = []
    for x_s, rho in ((x_plus, rho_plus), (x_minus, rho_minus)):
        if rho < DEPLETED_WEIGHT:
            depleted = True
            tilde.append(0.0)
        elif x0_ref < 1e-14:
            tilde.append(0.0)
        else:
            tilde.append(x_s / (rho * x0_ref))

    return ObservableSet(
        sigma_z=rho_plus - rho_minus,
        sigma_x=sigma_x,
        x_mean=x_plus + x_minus,
        x_plus=x_plus,
        x_minus=x_minus,
        rho_plus=rho_plus,
        rho_minus=rho_minus,
        x_tilde_plus=tilde[0],
        x_tilde_minus=tilde[1],
        parity=parity,
        depleted=depleted,
        quasi_degenerate=sol.quasi_degenerate,
    )


def hermite_series(coeff_sets, x: np.ndarray) -> np.ndarray:
    """
    Evaluates sum_n c[n] phi_n(x) for each coefficient array in coeff_sets.
    phi_n are normalized Hermite functions from the three-term recurrence
        phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1},
    carried as mantissa times exp(log_scale) per grid point so high orders neither
    overflow nor underflow.
    """
    x = np.asarray(x, dtype=float)
    n_max = max(len(c) for c in coeff_sets) - 1
    if n_max > HERMITE_MAX_ORDER:
        raise OverflowGuard(f"Hermite order {n_max} above stability bound {HERMITE_MAX_ORDER}")

    log_scale = -0.5 * x * x - 0.25 * math.log(math.pi)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    out = [np.zeros_like(x) for _ in coeff_sets]

    for n in range(n_max + 1):
        weight = np.exp(log_scale)
        for acc, c in zip(out, coeff_sets):
            if n < len(c) and c[n] != 0.0:
                acc += c[n] * cur * weight
        if n == n_max:
            break
        nxt = math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE_AT
        if np.any(big):
            factor = np.where(big, np.abs(cur), 1.0)
            cur = cur / factor
            prev = prev / factor
            log_scale = log_scale + np.log(factor)

    for acc in out:
        if not np.all(np.isfinite(acc)):
            raise OverflowGuard("non-finite value in Hermite recurrence")
    return np.array(out)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Rows phi_0..phi_n_max on the grid x"""
    return hermite_series(list(np.eye(n_max + 1)), x)


def wavefunction_profile(sol: GroundSolution, p: ModelParams,
                         grid: Optional[Tuple[float, float]] = None,
                         points: int = 801) -> WaveProfile:
    """
    Spin components Psi_up(x), Psi_down(x) on a grid.
    Default grid spans [-1.5 x_c, 1.5 x_c] with x_c = sqrt(2) g_s / omega.
    """
    if grid is None:
        x_c = derived_scales(p).x_c
        grid = (-1.5 * x_c, 1.5 * x_c)
    x = np.linspace(grid[0], grid[1], points)
    c_up, c_dn = split_spins(sol.coeffs)
    psi_plus, psi_minus = hermite_series([c_up, c_dn], x)
    return WaveProfile(grid=x, psi_plus=psi_plus, psi_minus=psi_minus)


def profile_norm(profile: WaveProfile) -> float:
    density = profile.psi_plus ** 2 + profile.psi_minus ** 2
    return float(trapezoid(density, profile.grid))
