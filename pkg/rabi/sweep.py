"""
Sweep configuration (key = value text), parallel grid execution and CSV/JSON export.

Grammar, one entry per line, '#' starts a comment:
    omega = 0.01 Omega
    g1 = 1.2 gs
    axis.g2 = -0.9:0.9:37 gt
    axis.eps = 1e-6:1e-2:41:log gt
    task = diagram
"""
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from rabi import __version__
from rabi.config import settings
from rabi.eigensolve import converged_ground
from rabi.errors import (ConfigValidationError, IoError, ParseError, RabiError,
                         SolverBudgetExceeded)
from rabi.hamiltonian import resolve_params, with_axis_value
from rabi.models import (PARAM_NAMES, AxisSpec, BoundaryCurve, GridCell,
                         ParamSpec, PhaseDiagramGrid, Quantity, ScanResult,
                         SemiclassicalLandscape, SweepConfig)
from rabi.observables import compute_observables
from rabi.utils import DEFAULT_BANDS, UNITS, get_phase_label
from rabi.utils.logger import log_error, timed

logger = logging.getLogger(__name__)

SUITES = ("parity", "stark", "boundaries", "tricritical")
TASKS = ("ground", "scan", "diagram", "boundary", "semiclassical", "verify")

OBSERVABLE_COLUMNS = (
    "sigma_z", "sigma_x", "x_mean", "x_plus", "x_minus", "rho_plus", "rho_minus",
    "x_tilde_plus", "x_tilde_minus", "parity",
)


def _number(text: str, line: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{what}: '{text}' is not a number", line)


def _split_unit(text: str, line: int) -> Tuple[str, str]:
    parts = text.split()
    if len(parts) == 1:
        return parts[0], "abs"
    if len(parts) == 2:
        if parts[1] not in UNITS:
            raise ParseError(f"unknown unit '{parts[1]}' (expected one of {', '.join(UNITS)})", line)
        return parts[0], parts[1]
    raise ParseError(f"cannot read '{text}'", line)


def _parse_axis(name: str, text: str, line: int) -> AxisSpec:
    body, unit = _split_unit(text, line)
    fields = body.split(":")
    if len(fields) not in (3, 4):
        raise ParseError(f"axis.{name} must be start:stop:count[:log]", line)
    log = len(fields) == 4
    if log and fields[3] != "log":
        raise ParseError(f"axis.{name}: unknown axis flag '{fields[3]}'", line)
    try:
        count = int(fields[2])
    except ValueError:
        raise ParseError(f"axis.{name}: count '{fields[2]}' is not an integer", line)
    start = _number(fields[0], line, f"axis.{name} start")
    stop = _number(fields[1], line, f"axis.{name} stop")
    if log and (start <= 0 or stop <= 0):
        raise ConfigValidationError(f"line {line}: log axis {name} needs positive bounds")
    try:
        return AxisSpec(name=name, start=start, stop=stop, count=count, log=log, unit=unit)
    except ValidationError as e:
        raise ConfigValidationError(f"line {line}: axis.{name}: {e.errors()[0]['msg']}")


def _parse_bool(text: str, line: int) -> bool:
    value = text.strip().lower()
    if value in ("true", "yes", "1", "on"):
        return True
    if value in ("false", "no", "0", "off"):
        return False
    raise ParseError(f"'{text}' is not a boolean", line)


def parse_config(text: str) -> SweepConfig:
    """
    Parses key = value lines into a validated SweepConfig.
    Raises:
        ParseError: grammar problems, with the line number.
        ConfigValidationError: well-formed but inconsistent settings.
    """
    params: Dict[str, Quantity] = {}
    axes: List[AxisSpec] = []
    options: Dict[str, Any] = {}
    bands = dict(DEFAULT_BANDS)
    seen = set()

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ParseError(f"expected key = value, got '{content}'", number)
        key, value = (part.strip() for part in content.split("=", 1))
        if not key or not value:
            raise ParseError("empty key or value", number)
        if key in seen:
            raise ParseError(f"duplicate key '{key}'", number)
        seen.add(key)

        if key in PARAM_NAMES:
            if ":" in value:
                raise ParseError(f"range syntax is only allowed on axis keys (use axis.{key})", number)
            body, unit = _split_unit(value, number)
            params[key] = Quantity(value=_number(body, number, key), unit=unit)
        elif key.startswith("axis."):
            name = key[len("axis."):]
            if name not in PARAM_NAMES:
                raise ParseError(f"unknown axis parameter '{name}'", number)
            axes.append(_parse_axis(name, value, number))
        elif key == "task":
            if value not in TASKS:
                raise ParseError(f"unknown task '{value}'", number)
            options["task"] = value
        elif key in ("tol", "jump_threshold", "peak_factor"):
            options[key] = _number(value, number, key)
        elif key == "workers":
            try:
                options["workers"] = int(value)
            except ValueError:
                raise ParseError(f"workers '{value}' is not an integer", number)
        elif key == "out":
            options["out"] = value
        elif key in ("band.centered", "band.split"):
            bands[key.split(".", 1)[1]] = _number(value, number, key)
        elif key == "analytic":
            options["analytic"] = _parse_bool(value, number)
        elif key == "suite":
            if value not in SUITES:
                raise ParseError(f"unknown suite '{value}'", number)
            options["suite"] = value
        elif key == "semiclassical.points":
            try:
                options["points"] = int(value)
            except ValueError:
                raise ParseError(f"semiclassical.points '{value}' is not an integer", number)
        else:
            raise ParseError(f"unknown key '{key}'", number)

    for axis in axes:
        if axis.name in params:
            raise ConfigValidationError(f"{axis.name} is both fixed and an axis")
        params[axis.name] = Quantity(value=axis.start, unit=axis.unit)
    if "omega" not in params:
        raise ConfigValidationError("omega is required")
    if options.get("workers") is not None and options["workers"] < 1:
        raise ConfigValidationError("workers must be at least 1")

    try:
        cfg = SweepConfig(base=ParamSpec(**params), axes=axes, bands=bands, **options)
    except ValidationError as e:
        err = e.errors()[0]
        where = ".".join(str(x) for x in err.get("loc", ()))
        raise ConfigValidationError(f"{where}: {err['msg']}")
    # unit combinations (Omega absolute, omega in abs/Omega)
    resolve_params(cfg.base)
    return cfg


def _quantity_text(q: Quantity) -> str:
    return repr(q.value) if q.unit == "abs" else f"{q.value!r} {q.unit}"


def format_config(cfg: SweepConfig) -> str:
    """Canonical text form; parse_config(format_config(cfg)) == cfg"""
    axis_names = {a.name for a in cfg.axes}
    lines = [f"task = {cfg.task}"]
    for name in PARAM_NAMES:
        if name not in axis_names:
            lines.append(f"{name} = {_quantity_text(getattr(cfg.base, name))}")
    for a in cfg.axes:
        spec = f"{a.start!r}:{a.stop!r}:{a.count}" + (":log" if a.log else "")
        lines.append(f"axis.{a.name} = {spec}" + ("" if a.unit == "abs" else f" {a.unit}"))
    lines.append(f"tol = {cfg.tol!r}")
    lines.append(f"jump_threshold = {cfg.jump_threshold!r}")
    lines.append(f"peak_factor = {cfg.peak_factor!r}")
    if cfg.workers is not None:
        lines.append(f"workers = {cfg.workers}")
    lines.append(f"out = {cfg.out}")
    for key in sorted(cfg.bands):
        lines.append(f"band.{key} = {cfg.bands[key]!r}")
    lines.append(f"analytic = {'true' if cfg.analytic else 'false'}")
    if cfg.suite is not None:
        lines.append(f"suite = {cfg.suite}")
    lines.append(f"semiclassical.points = {cfg.points}")
    return "\n".join(lines) + "\n"


def load_config(path: Union[str, Path]) -> SweepConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(f"cannot read config {path}: {e.strerror or e}")
    return parse_config(text)


def resolve_workers(cfg: SweepConfig) -> int:
    """Config value, then RABI_WORKERS, then all cores"""
    return cfg.workers or settings.WORKERS or os.cpu_count() or 1


def _solve_cell(task: Tuple[Tuple[int, ...], Tuple[float, ...], ParamSpec, List[AxisSpec], float, Dict[str, float]]) -> GridCell:
    index, coords, base, axes, tol, bands = task
    spec = base
    for axis, value in zip(axes, coords):
        spec = with_axis_value(spec, axis.name, value, axis.unit)
    try:
        p = resolve_params(spec)
        sol = converged_ground(p, tol)
        obs = compute_observables(sol, p, strict=False)
    except (RabiError, ArithmeticError, ValueError) as e:
        detail = getattr(e, "detail", str(e))
        log_error(logger, e, {"index": list(index), "coords": list(coords)})
        return GridCell(index=index, coords=coords, failure=f"{type(e).__name__}: {detail}")
    label = get_phase_label(obs.x_tilde_plus, obs.x_tilde_minus, obs.x_mean, bands)
    return GridCell(index=index, coords=coords, energy=sol.energy, observables=obs,
                    truncation=sol.truncation_used, escalations=sol.escalations,
                    converged=sol.converged, label=label)


def grid_tasks(cfg: SweepConfig) -> List[Tuple]:
    """Row-major cell tasks; a config without axes yields a single cell"""
    values = [[float(v) for v in a.values()] for a in cfg.axes]
    tasks = []
    for index in itertools.product(*(range(len(v)) for v in values)):
        coords = tuple(values[k][i] for k, i in enumerate(index))
        tasks.append((tuple(index), coords, cfg.base, list(cfg.axes), cfg.tol, dict(cfg.bands)))
    return tasks


def run_grid(cfg: SweepConfig) -> PhaseDiagramGrid:
    """
    Solves every grid cell independently from the seed vector; a failing cell is
    flagged and never aborts the grid. Cells come back in row-major order whatever
    the worker count.
    """
    tasks = grid_tasks(cfg)
    workers = min(resolve_workers(cfg), len(tasks))
    with timed(logger, "run_grid", cells=len(tasks), workers=workers):
        if workers <= 1:
            cells = [_solve_cell(t) for t in tasks]
        else:
            chunk = max(1, len(tasks) // (4 * workers))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                cells = list(pool.map(_solve_cell, tasks, chunksize=chunk))
    grid = PhaseDiagramGrid(axes=list(cfg.axes), cells=cells)
    if grid.failed:
        logger.warning("%d of %d cells failed", grid.failed, len(cells))
    return grid


def check_failure_budget(grid: PhaseDiagramGrid, budget: Optional[float] = None) -> None:
    """
    Raises:
        SolverBudgetExceeded: more than the budgeted fraction of cells failed.
    """
    budget = settings.FAILURE_BUDGET if budget is None else budget
    total = len(grid.cells)
    if total and grid.failed / total > budget:
        raise SolverBudgetExceeded(f"{grid.failed} of {total} cells failed (budget {budget:.0%})")


def _cell_text(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        return repr(float(value))
    return str(value)


def _observable_values(obs) -> List[Any]:
    if obs is None:
        return [None] * len(OBSERVABLE_COLUMNS)
    return [getattr(obs, c) for c in OBSERVABLE_COLUMNS]


def table(result: Union[PhaseDiagramGrid, ScanResult, SemiclassicalLandscape, Sequence[BoundaryCurve]]) -> Tuple[List[str], List[List[Any]]]:
    """Header and rows for a grid, a scan or a set of boundary curves"""
    if isinstance(result, PhaseDiagramGrid):
        header = [a.name for a in result.axes] + ["energy", *OBSERVABLE_COLUMNS, "truncation",
                                                  "escalations", "converged", "quasi_degenerate",
                                                  "depleted", "label", "failure"]
        rows = []
        for c in result.cells:
            obs = c.observables
            rows.append([*c.coords, c.energy, *_observable_values(obs), c.truncation, c.escalations,
                         c.converged, obs.quasi_degenerate if obs else None,
                         obs.depleted if obs else None, c.label, c.failure])
        return header, rows
    if isinstance(result, ScanResult):
        header = [result.axis.name, "energy", *OBSERVABLE_COLUMNS, "quasi_degenerate", "failure"]
        rows = []
        for v, e, obs, fail in zip(result.values, result.energies, result.observables, result.failures):
            rows.append([v, e, *_observable_values(obs), obs.quasi_degenerate if obs else None, fail])
        return header, rows
    if isinstance(result, SemiclassicalLandscape):
        return ["x", "energy"], [[x, e] for x, e in zip(result.x, result.energy)]
    header = ["curve", "trace_axis", "trace_value", "scan_axis", "location", "order", "signal",
              "delta_sigma_z", "strength", "refined", "broken"]
    rows = []
    for k, curve in enumerate(result):
        for t, tp in zip(curve.trace_values, curve.points):
            rows.append([k, curve.trace_axis, t, curve.scan_axis, tp.location, tp.order, tp.signal,
                         tp.delta_sigma_z, tp.strength, tp.refined, curve.broken])
    return header, rows


def to_frame(result) -> pd.DataFrame:
    """Result table as text cells; column order is fixed by `table`"""
    header, rows = table(result)
    return pd.DataFrame([[_cell_text(v) for v in row] for row in rows], columns=header, dtype=str)


def render_csv(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, lineterminator="\n")


def export(result, cfg: SweepConfig, formats: Sequence[str] = ("csv", "json"),
           overlays: Optional[Dict[str, Any]] = None,
           summary: Optional[Dict[str, Any]] = None) -> List[Path]:
    """
    Writes <out>/<task>.csv and the <out>/<task>.json sidecar.
    Raises:
        IoError: the output directory cannot be created or written.
    """
    out = Path(cfg.out)
    written: List[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "csv" in formats:
            path = out / f"{cfg.task}.csv"
            with open(path, "w", encoding="utf-8", newline="") as f:
                f.write(render_csv(to_frame(result)))
            written.append(path)
        if "json" in formats:
            sidecar = {
                "config": cfg.model_dump(mode="json"),
                "config_text": format_config(cfg),
                "version": __version__,
                "timestamp": datetime.now(timezone.utc).isoformat(),
                "bands": cfg.bands,
            }
            if overlays is not None:
                sidecar["overlays"] = overlays
            if summary is not None:
                sidecar["summary"] = summary
            path = out / f"{cfg.task}.json"
            with open(path, "w", encoding="utf-8") as f:
                json.dump(sidecar, f, ensure_ascii=False, indent=2, default=str)
            written.append(path)
    except OSError as e:
        raise IoError(f"cannot write results to {out}: {e.strerror or e}")
    logger.info("results written to %s", ", ".join(str(p) for p in written))
    return written
