import io
import json
from pathlib import Path
from unittest.mock import patch

import pandas as pd
import pytest

from rabi.errors import (ConfigValidationError, IoError, ParseError,
                         SolverBudgetExceeded)
from rabi.models import (AxisSpec, GridCell, ParamSpec, PhaseDiagramGrid,
                         Quantity, SweepConfig)
from rabi.sweep import (check_failure_budget, export, format_config,
                        load_config, parse_config, render_csv,
                        resolve_workers, run_grid, to_frame)

RECIPES = Path(__file__).resolve().parent.parent / "recipes"

DIAGRAM = """
# small diagram
task = diagram
omega = 0.5
g2 = 0.2 gt
axis.g1 = 0.1:0.4:2
axis.eps = 0.0:0.05:2 Omega
"""


class TestParseConfig:
    """Тесты для разбора конфигурации"""

    def test_parse(self):
        """Parameters, units and axes"""
        cfg = parse_config(DIAGRAM)
        assert cfg.task == "diagram"
        assert cfg.base.omega == Quantity(value=0.5)
        assert cfg.base.g2 == Quantity(value=0.2, unit="gt")
        assert [a.name for a in cfg.axes] == ["g1", "eps"]
        assert cfg.axes[1].unit == "Omega"
        assert cfg.base.g1.value == 0.1

    def test_log_axis(self):
        """start:stop:count:log"""
        cfg = parse_config("omega = 0.1\naxis.eps = 1e-6:1e-2:5:log gt\n")
        assert cfg.axes[0].log
        assert cfg.axes[0].values()[2] == pytest.approx(1e-4)

    def test_defaults(self):
        """Unset options keep their defaults"""
        cfg = parse_config("omega = 0.1")
        assert cfg.tol == 1e-10
        assert cfg.jump_threshold == 0.1
        assert cfg.bands == {"centered": 0.25, "split": 0.25}
        assert not cfg.analytic

    @pytest.mark.parametrize("text,line", [
        ("omega = 0.1\ng1 0.2", 2),
        ("omega = 0.1\ng1 = 0.2 meV", 2),
        ("omega = 0.1\ndelta = 1", 2),
        ("omega = 0.1\nomega = 0.2", 2),
        ("omega = 0.1\n\naxis.g1 = 0:1", 3),
        ("omega = 0.1\naxis.g1 = 0:1:x", 2),
        ("omega = 0.1\ng1 = 0:1:3", 2),
        ("task = sweep\nomega = 0.1", 1),
        ("omega = abc", 1),
    ])
    def test_parse_errors(self, text, line):
        """Grammar errors carry the line number"""
        with pytest.raises(ParseError) as exc:
            parse_config(text)
        assert f"line {line}" in exc.value.detail

    def test_validation_errors(self):
        """Well-formed but inconsistent settings"""
        with pytest.raises(ConfigValidationError):
            parse_config("g1 = 0.1")
        with pytest.raises(ConfigValidationError):
            parse_config("omega = 0.1\ng1 = 0.1\naxis.g1 = 0:1:3")
        with pytest.raises(ConfigValidationError):
            parse_config("omega = 0.1\naxis.g1 = 0:1:1")
        with pytest.raises(ConfigValidationError):
            parse_config("omega = 0.1\naxis.eps = 0:1:3:log")
        with pytest.raises(ConfigValidationError):
            parse_config("omega = 0.1\ntol = -1")
        with pytest.raises(ConfigValidationError):
            parse_config("omega = 1 gs")

    def test_format_round_trip(self):
        """parse_config(format_config(cfg)) reproduces cfg"""
        cfg = parse_config(DIAGRAM + "analytic = yes\nworkers = 2\nband.split = 0.3\n")
        assert parse_config(format_config(cfg)) == cfg

    def test_recipes_parse(self):
        """Shipped recipes are valid"""
        for path in sorted(RECIPES.glob("*.cfg")):
            cfg = load_config(path)
            assert parse_config(format_config(cfg)) == cfg

    def test_missing_file(self):
        """Unreadable config is a configuration error"""
        with pytest.raises(ConfigValidationError):
            load_config("/nonexistent/sweep.cfg")


class TestRunGrid:
    """Тесты для расчета сетки"""

    def test_row_major_cells(self):
        """Cells come back in row-major order with labels"""
        grid = run_grid(parse_config(DIAGRAM + "workers = 1\n"))
        assert [c.index for c in grid.cells] == [(0, 0), (0, 1), (1, 0), (1, 1)]
        assert grid.cells[1].coords == (0.1, 0.05)
        assert all(c.failure is None and c.converged for c in grid.cells)
        assert all(c.label in ("P1", "P2", "P3", "P4") for c in grid.cells)

    def test_failure_contained(self):
        """An unbounded cell is flagged without aborting the grid"""
        cfg = parse_config("omega = 0.5\ng1 = 0.2\naxis.g2 = 0.5:1.5:3 gt\nworkers = 1\n")
        grid = run_grid(cfg)
        assert grid.failed == 2
        assert grid.cells[0].failure is None
        assert grid.cells[2].failure.startswith("UnboundedSpectrum")
        with pytest.raises(SolverBudgetExceeded):
            check_failure_budget(grid)
        check_failure_budget(grid, budget=1.0)

    def test_arithmetic_error_contained(self):
        """Non-RabiError numerical failures are flagged too"""
        cfg = parse_config(DIAGRAM + "workers = 1\n")
        with patch("rabi.sweep.converged_ground", side_effect=FloatingPointError("overflow")):
            grid = run_grid(cfg)
        assert grid.failed == 4
        assert grid.cells[0].failure == "FloatingPointError: overflow"

    @pytest.mark.slow
    def test_worker_count_does_not_change_results(self):
        """Parallel and serial grids are identical"""
        serial = run_grid(parse_config(DIAGRAM + "workers = 1\n"))
        parallel = run_grid(parse_config(DIAGRAM + "workers = 2\n"))
        assert to_frame(serial).equals(to_frame(parallel))


class TestResolveWorkers:
    """Тесты для числа процессов"""

    def test_config_first(self):
        """Explicit workers win"""
        cfg = SweepConfig(base=ParamSpec(omega=Quantity(value=0.1)), workers=3)
        assert resolve_workers(cfg) == 3

    def test_settings_then_cores(self):
        """RABI_WORKERS, then cpu_count"""
        cfg = SweepConfig(base=ParamSpec(omega=Quantity(value=0.1)))
        with patch("rabi.sweep.settings.WORKERS", 5):
            assert resolve_workers(cfg) == 5
        with patch("rabi.sweep.settings.WORKERS", 0), patch("rabi.sweep.os.cpu_count", return_value=7):
            assert resolve_workers(cfg) == 7


class TestExport:
    """Тесты для экспорта результатов"""

    def _grid(self):
        axis = AxisSpec(name="g1", start=0.0, stop=1.0, count=2)
        return PhaseDiagramGrid(axes=[axis], cells=[
            GridCell(index=(0,), coords=(0.0,), energy=-0.5, truncation=32, escalations=0, converged=True,
                     label="P1"),
            GridCell(index=(1,), coords=(1.0,), failure="NoConvergence: stalled"),
        ])

    def test_csv_cells(self):
        """Floats in repr form, missing values empty"""
        frame = to_frame(self._grid())
        text = render_csv(frame)
        parsed = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False)
        assert list(parsed.columns[:3]) == ["g1", "energy", "sigma_z"]
        assert list(parsed.columns) == list(frame.columns)
        assert parsed.loc[0, "g1"] == "0.0"
        assert parsed.loc[0, "energy"] == "-0.5"
        assert parsed.loc[0, "converged"] == "true"
        assert parsed.loc[1, "energy"] == ""
        assert parsed.loc[1, "failure"] == "NoConvergence: stalled"

    def test_csv_quoting_and_line_endings(self):
        """LF line endings; cells with commas are quoted"""
        grid = self._grid()
        grid.cells[1] = grid.cells[1].model_copy(update={"failure": "NoConvergence: a, b"})
        text = render_csv(to_frame(grid))
        assert "\r" not in text
        assert text.endswith("\n")
        assert text.splitlines()[2].endswith('"NoConvergence: a, b"')

    def test_timestamp_has_timezone(self, tmp_path):
        """Sidecar timestamps are UTC-aware"""
        cfg = SweepConfig(task="diagram", base=ParamSpec(omega=Quantity(value=0.1)), out=str(tmp_path))
        export(self._grid(), cfg, formats=("json",))
        sidecar = json.loads((tmp_path / "diagram.json").read_text())
        assert sidecar["timestamp"].endswith("+00:00")

    def test_export_files(self, tmp_path):
        """CSV and JSON sidecar with config and summary"""
        cfg = SweepConfig(task="diagram", base=ParamSpec(omega=Quantity(value=0.1)), out=str(tmp_path / "run"))
        paths = export(self._grid(), cfg, summary={"cells": 2})
        assert [p.name for p in paths] == ["diagram.csv", "diagram.json"]
        sidecar = json.loads((tmp_path / "run" / "diagram.json").read_text())
        assert sidecar["summary"] == {"cells": 2}
        assert sidecar["bands"] == {"centered": 0.25, "split": 0.25}
        assert parse_config(sidecar["config_text"]) == cfg
        assert "overlays" not in sidecar

    def test_csv_deterministic(self, tmp_path):
        """Same result, same bytes"""
        grid = self._grid()
        a = SweepConfig(task="diagram", base=ParamSpec(omega=Quantity(value=0.1)), out=str(tmp_path / "a"))
        b = a.model_copy(update={"out": str(tmp_path / "b")})
        export(grid, a, formats=("csv",))
        export(grid, b, formats=("csv",))
        assert (tmp_path / "a" / "diagram.csv").read_bytes() == (tmp_path / "b" / "diagram.csv").read_bytes()

    def test_unwritable(self, tmp_path):
        """Output path blocked by a file"""
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        cfg = SweepConfig(task="diagram", base=ParamSpec(omega=Quantity(value=0.1)), out=str(blocker / "run"))
        with pytest.raises(IoError):
            export(self._grid(), cfg)
