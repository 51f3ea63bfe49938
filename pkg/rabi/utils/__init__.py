# Utils package

# Phase bands over the normalized spin-filtered displacements.
# The labels follow the shading of the finite-frequency diagrams; the thresholds are
# an operational choice and are echoed into every JSON sidecar.
PHASES = {
    "P1": {"name": "centered", "description": "оба спиновых компонента около начала координат"},
    "P2": {"name": "split", "description": "компоненты смещены в противоположные стороны"},
    "P3": {"name": "right", "description": "оба компонента справа"},
    "P4": {"name": "left", "description": "оба компонента слева"},
}

DEFAULT_BANDS = {"centered": 0.25, "split": 0.25}

# Units a parameter value may be quoted in
UNITS = ("abs", "gs", "gt", "Omega")


def get_phase_label(x_tilde_plus, x_tilde_minus, x_mean, bands=None):
    """Определяет фазу P1-P4 по значениям x̃± и ⟨x⟩"""
    bands = {**DEFAULT_BANDS, **(bands or {})}
    if max(abs(x_tilde_plus), abs(x_tilde_minus)) < bands["centered"]:
        return "P1"
    if (x_tilde_plus * x_tilde_minus < 0
            and min(abs(x_tilde_plus), abs(x_tilde_minus)) >= bands["split"]):
        return "P2"
    return "P3" if x_mean > 0 else "P4"

__all__ = ['PHASES', 'DEFAULT_BANDS', 'UNITS', 'get_phase_label']
