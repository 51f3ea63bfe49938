from collections import Counter

from rabi.errors import ConfigValidationError
from rabi.models import SweepConfig
from rabi.sweep import check_failure_budget, export, run_grid

NAME = "diagram"
HELP = "phase-diagram grid over one or two axes"


def run(cfg: SweepConfig) -> int:
    if not cfg.axes:
        raise ConfigValidationError("diagram needs at least one axis")
    grid = run_grid(cfg)
    labels = Counter(c.label for c in grid.cells if c.label)
    export(grid, cfg, summary={"cells": len(grid.cells), "failed": grid.failed, "labels": dict(labels)})
    print(f"{len(grid.cells)} cells, {grid.failed} failed")
    for label in sorted(labels):
        print(f"{label}: {labels[label]}")
    check_failure_budget(grid)
    return 0
