import logging

from rabi.config import settings
from rabi.detection import detect_transitions, scan_1d
from rabi.errors import ConfigValidationError, SolverBudgetExceeded
from rabi.models import SweepConfig
from rabi.sweep import export

NAME = "scan"
HELP = "1-D scan with transition detection"

logger = logging.getLogger(__name__)


def run(cfg: SweepConfig) -> int:
    if len(cfg.axes) != 1:
        raise ConfigValidationError("scan needs exactly one axis")
    axis = cfg.axes[0]
    scan = scan_1d(cfg.base, axis, cfg.tol)
    transitions = detect_transitions(scan, jump_threshold=cfg.jump_threshold, peak_factor=cfg.peak_factor)
    export(scan, cfg, summary={"transitions": [t.model_dump() for t in transitions]})

    for t in transitions:
        print(f"{t.order:<12} {axis.name} = {t.location:.8g} {axis.unit}  "
              f"signal={t.signal} delta_sigma_z={t.delta_sigma_z:.4g}")
    if not transitions:
        print("no transitions")

    failed = sum(1 for f in scan.failures if f is not None)
    if failed / len(scan.values) > settings.FAILURE_BUDGET:
        raise SolverBudgetExceeded(f"{failed} of {len(scan.values)} scan points failed")
    return 0
