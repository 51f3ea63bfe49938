from rabi.errors import NotFound
from rabi.hamiltonian import derived_scales, resolve_params
from rabi.models import SweepConfig
from rabi.semiclassical import landscape, plot_offset, saddle_flattening_point
from rabi.sweep import export

NAME = "semiclassical"
HELP = "variational energy landscape and its stationary points"


def run(cfg: SweepConfig) -> int:
    p = resolve_params(cfg.base)
    land = landscape(p, n=cfg.points)
    x_c = derived_scales(p).x_c
    summary = {
        "stationary_points": [sp.model_dump() for sp in land.stationary_points],
        "x_L": land.x_L, "x_S": land.x_S, "x_R": land.x_R,
        "plot_offset": plot_offset(p),
    }
    for sp in land.stationary_points:
        print(f"{sp.kind:<10} x = {sp.x:.8g} ({sp.x / x_c:.6g} x_c)  energy = {sp.energy:.10g}")

    if p.eps > 0 and p.g2 < 0:
        try:
            end = saddle_flattening_point(p)
        except NotFound as e:
            print(f"arc end: {e.detail}")
        else:
            s = derived_scales(p)
            summary["arc_end"] = end.model_dump()
            print(f"arc end: g1 = {end.g1 / s.g_s:.4f} g_s, g2_tilde = {end.g2_tilde / s.g_t:.4f} g_t")
    export(land, cfg, summary=summary)
    return 0
