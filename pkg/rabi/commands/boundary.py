import logging
from typing import Any, Dict, List, Optional

from rabi.boundaries import boundary_low_freq, g1c_round
from rabi.detection import trace_boundary
from rabi.errors import ConfigValidationError, RabiError
from rabi.hamiltonian import quote_value, resolve_params, with_axis_value
from rabi.models import BoundaryCurve, SweepConfig
from rabi.sweep import export, resolve_workers

NAME = "boundary"
HELP = "trace transition curves: first axis is scanned, second is traced"

logger = logging.getLogger(__name__)


def analytic_value(cfg: SweepConfig, curve: BoundaryCurve, trace_value: float) -> Optional[float]:
    """Low-frequency closed-form location on the scan axis, quoted in the scan unit"""
    spec = with_axis_value(cfg.base, curve.trace_axis, trace_value, curve.trace_unit)
    p = resolve_params(spec)
    try:
        if curve.scan_axis == "g1":
            value = g1c_round(p) if p.eps == 0 else boundary_low_freq(p, "g1").value
        elif curve.scan_axis in ("eps", "g2"):
            value = boundary_low_freq(p, curve.scan_axis).value
        else:
            return None
    except RabiError as e:
        logger.debug("no analytic overlay at %s=%g: %s", curve.trace_axis, trace_value, e.detail)
        return None
    return quote_value(p.replace(**{curve.scan_axis: value}), curve.scan_axis, curve.scan_unit)


def overlays(cfg: SweepConfig, curves: List[BoundaryCurve]) -> Dict[str, Any]:
    return {
        "kind": "low_frequency",
        "curves": [
            {
                "trace_axis": c.trace_axis,
                "trace_values": c.trace_values,
                "detected": [p.location for p in c.points],
                "analytic": [analytic_value(cfg, c, t) for t in c.trace_values],
            }
            for c in curves
        ],
    }


def run(cfg: SweepConfig) -> int:
    if len(cfg.axes) != 2:
        raise ConfigValidationError("boundary needs two axes (scan axis first, trace axis second)")
    scan_axis, trace_axis = cfg.axes
    curves = trace_boundary(cfg.base, scan_axis, trace_axis, cfg.tol,
                            jump_threshold=cfg.jump_threshold, peak_factor=cfg.peak_factor,
                            workers=resolve_workers(cfg))
    export(curves, cfg, overlays=overlays(cfg, curves) if cfg.analytic else None,
           summary={"curves": len(curves), "broken": sum(c.broken for c in curves)})
    for k, c in enumerate(curves):
        kinds = sorted({p.order for p in c.points})
        print(f"curve {k}: {len(c.points)} points, {'/'.join(kinds)}{' (broken)' if c.broken else ''}")
    if not curves:
        print("no boundaries found")
    return 0
