"""
Self-checks behind `rabi verify`: parity line, Stark scaling, the symmetric dome
and the tricritical softening of the sigma_z jump.
"""
import logging
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy.optimize import brentq

from rabi.boundaries import boundaries_finite_freq, g1c_I, g1c_IV, g1c_round
from rabi.detection import detect_transitions, scan_1d, sharpest_jump
from rabi.eigensolve import converged_ground
from rabi.errors import RabiError
from rabi.hamiltonian import derived_scales
from rabi.models import AxisSpec, CheckResult, ModelParams, ParamSpec, Quantity, SuiteReport
from rabi.observables import compute_observables
from rabi.semiclassical import spin_potentials

logger = logging.getLogger(__name__)

JUMP_NOISE = 0.01   # step-extrapolated jumps below this are indistinguishable


def _check(name: str, passed: bool, detail: str = "") -> CheckResult:
    if not passed:
        logger.warning("check %s failed: %s", name, detail)
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def parity_suite(omega: float = 0.1, points: int = 21) -> SuiteReport:
    """sigma_z = 0 and parity = -1 on the line eps = g2 = 0, sigma_z odd in eps"""
    report = SuiteReport(suite="parity")
    base = ModelParams(omega=omega)
    g_s = derived_scales(base).g_s
    worst_sz, worst_parity, skipped = 0.0, 0.0, 0
    for g in np.linspace(0.0, 2 * g_s, points):
        p = base.replace(g1=float(g))
        sol = converged_ground(p)
        if sol.quasi_degenerate:
            skipped += 1
            continue
        obs = compute_observables(sol, p)
        worst_sz = max(worst_sz, abs(obs.sigma_z))
        worst_parity = max(worst_parity, abs(obs.parity + 1))
    report.checks.append(_check("sigma_z on parity line", worst_sz <= 1e-6,
                                f"max |sigma_z| = {worst_sz:.3e} ({skipped} quasi-degenerate skipped)"))
    report.checks.append(_check("ground-state parity", worst_parity <= 1e-6,
                                f"max |parity + 1| = {worst_parity:.3e}"))

    p = base.replace(g1=0.8 * g_s, eps=0.05)
    plus = compute_observables(converged_ground(p), p)
    q = p.replace(eps=-0.05)
    minus = compute_observables(converged_ground(q), q)
    err = abs(plus.sigma_z + minus.sigma_z)
    report.checks.append(_check("sigma_z antisymmetric in eps", err <= 1e-9, f"|sz(e) + sz(-e)| = {err:.3e}"))
    return report


def stark_suite(omega: float = 0.5) -> SuiteReport:
    """Potentials depend on g2 and chi only through g2_tilde; (eps, g2) -> (-eps, -g2) mirrors the state"""
    report = SuiteReport(suite="stark")
    g_t = omega / 2
    x = np.linspace(-6.0, 6.0, 241)
    a = ModelParams(omega=omega, g1=0.3, g2=0.4 * g_t, chi=0.0, eps=0.02)
    b = a.replace(g2=0.2 * g_t, chi=1.0)
    va, vb = spin_potentials(a, x), spin_potentials(b, x)
    err = max(float(np.max(np.abs(va[0] - vb[0]))), float(np.max(np.abs(va[1] - vb[1]))))
    report.checks.append(_check("potentials scale with g2_tilde", err <= 1e-12, f"max deviation {err:.3e}"))

    p = ModelParams(omega=omega, g1=0.3, g2=0.3 * g_t, eps=0.05)
    q = p.replace(g2=-p.g2, eps=-p.eps)
    op, oq = compute_observables(converged_ground(p), p), compute_observables(converged_ground(q), q)
    dev = max(abs(op.sigma_z + oq.sigma_z), abs(op.x_mean + oq.x_mean), abs(op.sigma_x - oq.sigma_x))
    report.checks.append(_check("joint sign symmetry", dev <= 1e-9, f"max deviation {dev:.3e}"))
    return report


def _dome_scan(omega: float, g2_bar: float, lo: float, hi: float, count: int):
    base = ParamSpec(omega=Quantity(value=omega), g2=Quantity(value=g2_bar, unit="gt"))
    axis = AxisSpec(name="g1", start=lo, stop=hi, count=count, unit="gs")
    return scan_1d(base, axis)


def boundaries_suite(omega: float = 0.01, ratios=(0.2, 0.5, 0.8)) -> SuiteReport:
    """Detected first-order g1c on the eps = 0 dome within 2% of the round boundary"""
    report = SuiteReport(suite="boundaries")
    for a in ratios:
        p = ModelParams(omega=omega, g2=a * omega / 2)
        expected = g1c_round(p) / derived_scales(p).g_s
        scan = _dome_scan(omega, a, 0.85 * expected, 1.15 * expected, 31)
        first = [t for t in detect_transitions(scan) if t.order == "first"]
        if not first:
            report.checks.append(_check(f"dome g2={a} g_t", False, "no first-order transition found"))
            continue
        found = max(first, key=lambda t: abs(t.delta_sigma_z)).location
        rel = abs(found - expected) / expected
        report.checks.append(_check(f"dome g2={a} g_t", rel <= 0.02,
                                    f"detected {found:.5f} g_s vs {expected:.5f} g_s ({100 * rel:.2f}%)"))
    return report


def _crossings(p: ModelParams, kind: str, grid: np.ndarray) -> List[float]:
    # g1 (in g_s) where boundary `kind` passes through p.eps
    g_s = derived_scales(p).g_s

    def excess(b: float) -> float:
        return boundaries_finite_freq(p.replace(g1=b * g_s))[kind].value - p.eps

    values = np.array([excess(b) for b in grid])
    roots = []
    for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        roots.append(float(brentq(excess, grid[k], grid[k + 1], xtol=1e-10)))
    return roots


def quadruple_check(omegas=(0.2, 0.1, 0.05), eps_bar: float = 5e-4, log_g2: float = -4.5) -> CheckResult:
    """
    Boundaries I-IV gather onto one quadruple point as omega decreases: at fixed
    eps / g_t and g2 / g_t the spread of g1c_I, g1c_IV and the g1 where II and III
    pass through eps shrinks monotonically.
    """
    grid = np.linspace(1.001, 4.0, 600)
    spreads, parts = [], []
    for omega in omegas:
        g_t = omega / 2
        p = ModelParams(omega=omega, eps=eps_bar * g_t, g2=10 ** log_g2 * g_t)
        g_s = derived_scales(p).g_s
        found = [g1c_I(p) / g_s, g1c_IV(p) / g_s]
        for kind in ("II", "III"):
            found.extend(_crossings(p, kind, grid))
        spreads.append(max(found) - min(found))
        parts.append(f"omega={omega}: {spreads[-1]:.3f} g_s over {len(found)} boundaries")
    passed = all(x > y for x, y in zip(spreads, spreads[1:]))
    return _check("boundaries converge on the quadruple point", passed, "; ".join(parts))


def dome_jump(omega: float, g2_bar: float, points: int = 41) -> float:
    """
    sigma_z discontinuity across the eps = 0 dome at g2 = g2_bar g_t, extrapolated to
    zero grid step from scans at step h and h/2 (2 D(h/2) - D(h)). A jump keeps its
    size under halving while a steep smooth rise halves, so the estimate removes the
    finite-frequency rounding.
    """
    p = ModelParams(omega=omega, g2=g2_bar * omega / 2)
    expected = g1c_round(p) / derived_scales(p).g_s
    lo, hi = 0.95 * expected, 1.05 * expected
    coarse = abs(sharpest_jump(_dome_scan(omega, g2_bar, lo, hi, points)).delta_sigma_z)
    fine = abs(sharpest_jump(_dome_scan(omega, g2_bar, lo, hi, 2 * points - 1)).delta_sigma_z)
    return max(0.0, 2 * fine - coarse)


def tricritical_suite(omega: float = 0.01, ratios=(0.5, 0.2, 0.05, 0.005)) -> SuiteReport:
    """The sigma_z jump across the dome softens towards g_s"""
    report = SuiteReport(suite="tricritical", checks=[quadruple_check()])
    jumps = [dome_jump(omega, a) for a in ratios]
    detail = ", ".join(f"g2={a}: {j:.4f}" for a, j in zip(ratios, jumps))
    shrinks = all(y <= x + JUMP_NOISE for x, y in zip(jumps, jumps[1:])) and jumps[0] > jumps[-1] + 0.1
    report.checks.append(_check("jump shrinks towards g_s", shrinks, detail))
    report.checks.append(_check("jump below 0.02 near g_s", jumps[-1] < 0.02, detail))
    return report


SUITES: Dict[str, Callable[[], SuiteReport]] = {
    "parity": parity_suite,
    "stark": stark_suite,
    "boundaries": boundaries_suite,
    "tricritical": tricritical_suite,
}


def run_suites(names: Optional[List[str]] = None) -> List[SuiteReport]:
    """Runs the named suites (all when None); a suite that raises is reported as failed"""
    reports = []
    for name in names or list(SUITES):
        try:
            reports.append(SUITES[name]())
        except RabiError as e:
            reports.append(SuiteReport(suite=name, checks=[_check("suite run", False, e.detail)]))
    return reports
