"""
Transition detection on 1-D scans, boundary tracing across a second axis and
tricritical-point location.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from rabi.config import settings
from rabi.eigensolve import converged_ground
from rabi.errors import ConfigValidationError, NotFound, RabiError
from rabi.hamiltonian import resolve_params, with_axis_value
from rabi.models import (AxisSpec, BoundaryCurve, ModelParams, ObservableSet,
                         ParamSpec, ScanResult, TransitionPoint, TricriticalRecord)
from rabi.observables import compute_observables
from rabi.utils.logger import log_error, timed

logger = logging.getLogger(__name__)

BISECT_WIDTH = 1e-6        # first-order refinement, fraction of the axis range
PEAK_WIDTH = 1e-4          # second-like refinement, fraction of the axis range
PEAK_ITERATIONS = 24
SYMMETRY_OFFSET = 1e-8     # one-sided limits around eps = 0 / g2 = 0, axis units
ASSOCIATION_STEP = 0.1     # fraction of the scan range
MIN_POINTS = 16
SIGNAL_MIN = 1e-9          # signals varying less than this carry no peaks

# observable -> reported signal for slope peaks
PEAK_SIGNALS = {
    "sigma_z": "susceptibility_peak",
    "sigma_x": "sigma_x_kink",
    "x_tilde_plus": "x_tilde_shift",
    "x_tilde_minus": "x_tilde_shift",
}


def _as_spec(base: Union[ParamSpec, ModelParams]) -> ParamSpec:
    return base if isinstance(base, ParamSpec) else ParamSpec.from_params(base)


def solve_point(base: ParamSpec, name: str, value: float, unit: str,
                tol: Optional[float] = None, v0: Optional[np.ndarray] = None):
    """Converged ground state and observables at one axis value"""
    p = resolve_params(with_axis_value(base, name, value, unit))
    sol = converged_ground(p, tol, v0=v0)
    return sol, compute_observables(sol, p, strict=False)


def scan_1d(base: Union[ParamSpec, ModelParams], axis: AxisSpec,
            tol: Optional[float] = None, warm_start: bool = True) -> ScanResult:
    """
    Ground state and observables along one axis.
    Each point is warm-started from the previous vector; a failed point is recorded
    with its message and the next point starts cold.
    """
    spec = _as_spec(base)
    tol = tol or settings.SOLVER_TOL
    values = [float(v) for v in axis.values()]
    if len(values) < MIN_POINTS:
        logger.warning("scan over %s has %d points; detection expects at least %d",
                       axis.name, len(values), MIN_POINTS)

    observables: List[Optional[ObservableSet]] = []
    energies: List[Optional[float]] = []
    failures: List[Optional[str]] = []
    warm = None
    with timed(logger, "scan_1d", axis=axis.name, points=len(values)):
        for v in values:
            try:
                sol, obs = solve_point(spec, axis.name, v, axis.unit, tol, warm if warm_start else None)
            except RabiError as e:
                log_error(logger, e, {"axis": axis.name, "value": v, "unit": axis.unit})
                observables.append(None)
                energies.append(None)
                failures.append(e.detail)
                warm = None
                continue
            observables.append(obs)
            energies.append(sol.energy)
            failures.append(None)
            warm = sol.coeffs

    return ScanResult(axis=axis, base=spec, tol=tol, values=values,
                      observables=observables, energies=energies, failures=failures)


def _coordinate(axis: AxisSpec, v):
    return np.log10(v) if axis.log else np.asarray(v, dtype=float)


def _midpoint(axis: AxisSpec, a: float, b: float) -> float:
    return math.sqrt(a * b) if axis.log else 0.5 * (a + b)


def _sigma_z(scan: ScanResult, value: float) -> float:
    _, obs = solve_point(scan.base, scan.axis.name, value, scan.axis.unit, scan.tol)
    return obs.sigma_z


def _symmetric_line(scan: ScanResult) -> bool:
    """True when the scanned parameter sweeps through a parity-symmetry line at zero"""
    name = scan.axis.name
    if name == "eps":
        return scan.base.g2.value == 0
    if name == "g2":
        return scan.base.eps.value == 0
    return False


def _locate_jump(scan: ScanResult, a: float, b: float, za: float, zb: float) -> Tuple[float, Optional[float]]:
    """
    Bisects towards the steepest part of a sigma_z step down to BISECT_WIDTH of the
    axis range. Only the location is taken from the bisection.
    Returns:
        (location, one-sided jump at zero on a symmetry line, otherwise None)
    """
    axis = scan.axis
    if _symmetric_line(scan) and a < 0 < b:
        minus = _sigma_z(scan, -SYMMETRY_OFFSET)
        plus = _sigma_z(scan, SYMMETRY_OFFSET)
        return 0.0, plus - minus

    width = BISECT_WIDTH * axis.span
    for _ in range(200):
        if abs(b - a) <= width:
            break
        mid = _midpoint(axis, a, b)
        if mid in (a, b):
            break
        zm = _sigma_z(scan, mid)
        if abs(zm - za) >= abs(zb - zm):
            b, zb = mid, zm
        else:
            a, za = mid, zm
    return _midpoint(axis, a, b), None


def _peak_refine(scan: ScanResult, signal: str, lo: float, hi: float, step: float) -> float:
    """Golden-section search for the largest |d observable / d lambda| inside [lo, hi]"""
    axis = scan.axis
    h = 0.01 * step

    def value_at(v: float) -> float:
        _, obs = solve_point(scan.base, axis.name, v, axis.unit, scan.tol)
        return _signal_value(obs, signal)

    def negative_slope(v: float) -> float:
        return -abs(value_at(v + h) - value_at(v - h)) / (2 * h)

    res = minimize_scalar(negative_slope, bounds=(lo, hi), method="bounded",
                          options={"xatol": PEAK_WIDTH * axis.span, "maxiter": PEAK_ITERATIONS})
    return float(res.x)


def _signal_value(obs: ObservableSet, signal: str) -> float:
    return getattr(obs, signal)


def _slope_peaks(coord: np.ndarray, y: np.ndarray, peak_factor: float,
                 skip: Tuple[int, ...] = ()) -> List[Tuple[float, int]]:
    """
    Local maxima of |dy/dlambda| above peak_factor times the floor, where the floor is
    the larger of the median slope and the mean slope of the continuous part of y
    (its range with the intervals in `skip` taken out) over the range of lambda.
    Returns:
        (strength relative to the floor, index) per peak
    """
    dy = np.diff(y)
    if skip:
        dy[list(skip)] = 0.0
    y_range = float(np.ptp(np.concatenate(([0.0], np.cumsum(dy)))))
    if y_range <= SIGNAL_MIN:
        return []
    slope = np.abs(np.gradient(y, coord))
    floor = max(float(np.median(slope)), y_range / float(np.ptp(coord)))
    threshold = peak_factor * floor
    return [(float(slope[k] / floor), k) for k in range(1, len(slope) - 1)
            if slope[k] > threshold and slope[k] > slope[k - 1] and slope[k] >= slope[k + 1]]


def _jump_runs(z: np.ndarray, jump_threshold: float) -> List[Tuple[int, int]]:
    """Runs of consecutive same-sign adjacent changes above the threshold, as (first, last) point index"""
    runs: List[Tuple[int, int]] = []
    dz = np.diff(z)
    for j, d in enumerate(dz):
        if abs(d) <= jump_threshold:
            continue
        if runs and runs[-1][1] == j and np.sign(dz[j - 1]) == np.sign(d):
            runs[-1] = (runs[-1][0], j + 1)
        else:
            runs.append((j, j + 1))
    return runs


def detect_transitions(scan: ScanResult, refine: bool = True,
                       jump_threshold: Optional[float] = None,
                       peak_factor: Optional[float] = None) -> List[TransitionPoint]:
    """
    First-order transitions from adjacent sigma_z jumps and second-like ones from
    slope peaks of sigma_z, sigma_x or x_tilde. Quasi-degenerate points are left out.
    A run of neighbouring intervals that all jump the same way is one transition
    carrying the whole change. Candidates within 1.5 grid steps merge: first order
    wins, then the stronger peak.
    With refine=False only the coarse scan is used.
    Returns:
        transitions sorted by location (possibly empty)
    """
    jump_threshold = jump_threshold or settings.JUMP_THRESHOLD
    peak_factor = peak_factor or settings.PEAK_FACTOR
    if scan.completion < 0.9:
        logger.warning("scan over %s only %.0f%% complete; detection may miss transitions",
                       scan.axis.name, 100 * scan.completion)

    idx = [i for i, o in enumerate(scan.observables) if o is not None and not o.quasi_degenerate]
    if len(idx) < 3:
        return []
    lam = np.array([scan.values[i] for i in idx])
    obs = [scan.observables[i] for i in idx]
    coord = _coordinate(scan.axis, lam)
    step = float(np.median(np.abs(np.diff(coord))))
    merge = 1.5 * step
    z = np.array([o.sigma_z for o in obs])

    # (rank, -strength, lo, hi, payload): rank 0 for first order
    candidates: List[Tuple[int, float, float, float, object]] = []
    runs = _jump_runs(z, jump_threshold)
    jumps = tuple(j for r0, r1 in runs for j in range(r0, r1))
    for r0, r1 in runs:
        j = r0 + int(np.argmax(np.abs(np.diff(z[r0:r1 + 1]))))
        a, b = float(lam[j]), float(lam[j + 1])
        delta = float(z[r1] - z[r0])
        if refine:
            loc, one_sided = _locate_jump(scan, a, b, float(z[j]), float(z[j + 1]))
            delta = delta if one_sided is None else one_sided
        else:
            loc = _midpoint(scan.axis, a, b)
        tp = TransitionPoint(location=loc, order="first", signal="sigma_z_jump",
                             delta_sigma_z=delta, strength=abs(delta), refined=refine)
        candidates.append((0, -abs(delta), float(coord[r0]), float(coord[r1]), tp))

    for signal in PEAK_SIGNALS:
        y = np.array([_signal_value(o, signal) for o in obs])
        for strength, k in _slope_peaks(coord, y, peak_factor, jumps):
            candidates.append((1, -strength, float(coord[k]), float(coord[k]), (k, signal, strength)))

    candidates.sort(key=lambda c: (c[0], c[1]))
    kept: List[Tuple[int, float, float, float, object]] = []
    for cand in candidates:
        _, _, lo, hi, _ = cand
        if cand[0] == 0 or all(lo > k_hi + merge or hi < k_lo - merge for _, _, k_lo, k_hi, _ in kept):
            kept.append(cand)

    found: List[TransitionPoint] = []
    for rank, _, _, _, payload in kept:
        if rank == 0:
            found.append(payload)
            continue
        k, signal, strength = payload
        loc = float(lam[k])
        if refine:
            lo, hi = float(lam[k - 1]), float(lam[k + 1])
            loc = _peak_refine(scan, signal, lo, hi, min(loc - lo, hi - loc))
        found.append(TransitionPoint(location=loc, order="second_like", signal=PEAK_SIGNALS[signal],
                                     strength=strength, refined=refine))

    found.sort(key=lambda t: t.location)
    logger.debug("%d transitions along %s", len(found), scan.axis.name)
    return found


def sharpest_jump(scan: ScanResult) -> TransitionPoint:
    """
    Locates the largest adjacent sigma_z change of the scan whatever its size. The
    reported jump is the coarse change across it, widened over neighbouring intervals
    that move the same way by more than the jump threshold.
    Raises:
        NotFound: fewer than two usable points.
    """
    pairs = [(i, o) for i, o in enumerate(scan.observables) if o is not None and not o.quasi_degenerate]
    if len(pairs) < 2:
        raise NotFound("scan has fewer than two usable points")
    z = np.array([o.sigma_z for _, o in pairs])
    dz = np.diff(z)
    j = int(np.argmax(np.abs(dz)))
    lo, hi = j, j + 1
    while lo > 0 and np.sign(dz[lo - 1]) == np.sign(dz[j]) and abs(dz[lo - 1]) > settings.JUMP_THRESHOLD:
        lo -= 1
    while hi < len(dz) and np.sign(dz[hi]) == np.sign(dz[j]) and abs(dz[hi]) > settings.JUMP_THRESHOLD:
        hi += 1
    (i, oa), (k, ob) = pairs[j], pairs[j + 1]
    loc, one_sided = _locate_jump(scan, scan.values[i], scan.values[k], oa.sigma_z, ob.sigma_z)
    delta = float(z[hi] - z[lo]) if one_sided is None else one_sided
    order = "first" if abs(delta) > settings.JUMP_THRESHOLD else "second_like"
    return TransitionPoint(location=loc, order=order, signal="sigma_z_jump",
                           delta_sigma_z=delta, strength=abs(delta), refined=True)


def _slice_transitions(task: Tuple[ParamSpec, AxisSpec, Optional[float], bool,
                                   Optional[float], Optional[float]]) -> List[TransitionPoint]:
    spec, scan_axis, tol, refine, jump_threshold, peak_factor = task
    scan = scan_1d(spec, scan_axis, tol)
    return detect_transitions(scan, refine, jump_threshold, peak_factor)


def _scan_step(axis: AxisSpec) -> float:
    """Grid step in detection coordinates (decades on log axes)"""
    ends = _coordinate(axis, np.array([axis.start, axis.stop]))
    return float(abs(ends[1] - ends[0])) / (axis.count - 1)


def trace_boundary(base: Union[ParamSpec, ModelParams], scan_axis: AxisSpec, trace_axis: AxisSpec,
                   tol: Optional[float] = None, refine: bool = True,
                   jump_threshold: Optional[float] = None,
                   peak_factor: Optional[float] = None,
                   workers: int = 1) -> List[BoundaryCurve]:
    """
    Runs scan_1d + detect_transitions for every trace value and links transitions
    across slices by nearest location (at most 10% of the scan range per step).
    Slices are independent and go to a process pool when workers > 1; each slice
    keeps its own warm-start chain.
    Returns:
        one BoundaryCurve per continuous family; families ending before the last
        slice are marked broken.
    """
    if scan_axis.name == trace_axis.name:
        raise ConfigValidationError("scan and trace axes must differ")
    spec = _as_spec(base)
    trace_values = [float(t) for t in trace_axis.values()]
    max_step = ASSOCIATION_STEP * float(np.ptp(_coordinate(scan_axis, np.array([scan_axis.start, scan_axis.stop]))))

    tasks = [(with_axis_value(spec, trace_axis.name, t, trace_axis.unit), scan_axis, tol, refine,
              jump_threshold, peak_factor) for t in trace_values]
    workers = min(workers, len(tasks))
    with timed(logger, "trace_boundary", slices=len(tasks), workers=workers):
        if workers <= 1:
            slices = [_slice_transitions(task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                slices = list(pool.map(_slice_transitions, tasks))

    families: List[Dict] = []
    for k, (t, points) in enumerate(zip(trace_values, slices)):
        open_families = [f for f in families if f["last"] == k - 1]
        taken = set()
        for tp in points:
            c = float(_coordinate(scan_axis, tp.location))
            best, best_dist = None, None
            for j, fam in enumerate(open_families):
                if j in taken:
                    continue
                dist = abs(c - fam["coord"])
                if dist <= max_step and (best_dist is None or dist < best_dist):
                    best, best_dist = j, dist
            if best is None:
                families.append({"trace": [t], "points": [tp], "coord": c, "last": k})
                continue
            taken.add(best)
            fam = open_families[best]
            fam["trace"].append(t)
            fam["points"].append(tp)
            fam["coord"], fam["last"] = c, k

    fixed = {name: q.value for name, q in spec if name not in (scan_axis.name, trace_axis.name)}
    curves = [
        BoundaryCurve(
            fixed=fixed,
            scan_axis=scan_axis.name,
            trace_axis=trace_axis.name,
            trace_values=fam["trace"],
            points=fam["points"],
            broken=fam["last"] < len(trace_values) - 1,
            scan_span=scan_axis.span,
            scan_step=_scan_step(scan_axis),
            scan_log=scan_axis.log,
            scan_unit=scan_axis.unit,
            trace_unit=trace_axis.unit,
            base=spec,
        )
        for fam in families
    ]
    logger.info("traced %d boundary families over %d slices", len(curves), len(trace_values))
    return curves


def _offsets(curve: BoundaryCurve, location: float) -> Tuple[float, float]:
    """Half a scan step on either side; 1e-6 of the range when the step is unknown"""
    if curve.scan_step <= 0:
        offset = BISECT_WIDTH * curve.scan_span
        return location - offset, location + offset
    half = 0.5 * curve.scan_step
    if curve.scan_log:
        return location * 10 ** -half, location * 10 ** half
    return location - half, location + half


def delta_sigma_z_along(curve: BoundaryCurve, tol: Optional[float] = None,
                        jump_threshold: Optional[float] = None) -> List[Tuple[float, float]]:
    """
    Jump of sigma_z across each point of the curve, from sigma_z half a scan step
    below and above the located transition. Points whose jump falls below the
    threshold are reclassified second_like in place.
    """
    if curve.base is None:
        raise ConfigValidationError("curve carries no base parameters to re-solve")
    jump_threshold = jump_threshold or settings.JUMP_THRESHOLD
    out: List[Tuple[float, float]] = []
    for i, (t, tp) in enumerate(zip(curve.trace_values, curve.points)):
        spec = with_axis_value(curve.base, curve.trace_axis, t, curve.trace_unit)
        lo, hi = _offsets(curve, tp.location)
        _, below = solve_point(spec, curve.scan_axis, lo, curve.scan_unit, tol)
        _, above = solve_point(spec, curve.scan_axis, hi, curve.scan_unit, tol)
        delta = above.sigma_z - below.sigma_z
        out.append((t, delta))
        if tp.order == "first" and abs(delta) <= jump_threshold:
            curve.points[i] = tp.model_copy(update={"order": "second_like", "delta_sigma_z": delta})
    return out


def locate_tricritical(curve_a: BoundaryCurve, curve_b: BoundaryCurve,
                       threshold: Optional[float] = None) -> TricriticalRecord:
    """
    Where two boundary curves meet along their shared trace axis.
    A sign change of the separation gives a crossing, found by root search on the
    piecewise-linear separation. Otherwise the first trace value where the separation
    drops below the threshold (default twice the refinement width) is returned as an
    effective convergence.
    Raises:
        NotFound: the curves neither cross nor approach within the threshold.
    """
    if curve_a.trace_axis != curve_b.trace_axis or curve_a.scan_axis != curve_b.scan_axis:
        raise ConfigValidationError("curves must share scan and trace axes")
    if threshold is None:
        threshold = 2 * BISECT_WIDTH * max(curve_a.scan_span, curve_b.scan_span)

    loc_a = dict(zip(curve_a.trace_values, (p.location for p in curve_a.points)))
    loc_b = dict(zip(curve_b.trace_values, (p.location for p in curve_b.points)))
    common = sorted(set(loc_a) & set(loc_b))
    if not common:
        raise NotFound("curves share no trace values")
    t = np.array(common)
    sep = np.array([loc_a[v] - loc_b[v] for v in common])

    for i, s in enumerate(sep):
        if s == 0:
            return TricriticalRecord(trace_value=float(t[i]), location=loc_a[common[i]], separation=0.0)
        if abs(s) < threshold:
            return TricriticalRecord(trace_value=float(t[i]), location=loc_a[common[i]],
                                     separation=float(abs(s)), effective=True)
        if i + 1 < len(sep) and s * sep[i + 1] < 0:
            def gap(v):
                return float(np.interp(v, t, sep))
            t_star = brentq(gap, t[i], t[i + 1])
            location = float(np.interp(t_star, t, [loc_a[v] for v in common]))
            return TricriticalRecord(trace_value=t_star, location=location, separation=0.0)

    raise NotFound(f"curves stay at least {float(np.min(np.abs(sep))):.3e} apart")
