import logging

from rabi.eigensolve import converged_ground
from rabi.hamiltonian import resolve_params
from rabi.models import SweepConfig
from rabi.observables import compute_observables

NAME = "ground"
HELP = "converged ground state and observables at the base point"

logger = logging.getLogger(__name__)


def run(cfg: SweepConfig) -> int:
    if cfg.axes:
        logger.warning("ground ignores configured axes; solving at the base point")
    p = resolve_params(cfg.base)
    sol = converged_ground(p, cfg.tol)
    obs = compute_observables(sol, p, strict=False)
    print(f"E = {sol.energy:.10g}")
    print(f"sigma_z = {obs.sigma_z:.10g}")
    print(f"sigma_x = {obs.sigma_x:.10g}")
    print(f"x_mean = {obs.x_mean:.10g}")
    print(f"parity = {obs.parity:.10g}")
    print(f"truncation = {sol.truncation_used} (escalations: {sol.escalations})")
    if obs.quasi_degenerate:
        print("warning: quasi-degenerate ground state, sigma_z is basis dependent")
    return 0
