"""
Service Tests
Stage runner, exit codes, timings and logging setup.
"""

import pytest
import structlog
from pydantic import BaseModel, ValidationError

from backend.services.error_handler import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, ErrorHandler
from backend.services.performance_monitor import PerformanceMonitor
from backend.utils.exceptions import ConfigurationError, MaxIterExceeded, NoQuotes, StageError
from backend.utils.logger import setup_logging


class Positive(BaseModel):
    value: int


def fail(error: Exception):
    raise error


def test_run_stage_returns_result():
    assert ErrorHandler().run_stage("density", lambda x, y=1: x + y, 2, y=3) == 5


def test_run_stage_wraps_failures():
    with pytest.raises(StageError) as info:
        ErrorHandler().run_stage("quotes", fail, NoQuotes("empty chain"))
    assert info.value.stage == "quotes"
    assert isinstance(info.value.cause, NoQuotes)
    assert "quotes" in str(info.value)


def test_run_stage_keeps_inner_stage():
    handler = ErrorHandler()
    with pytest.raises(StageError) as info:
        handler.run_stage("calibrate", handler.run_stage, "load", fail, FileNotFoundError("model.json"))
    assert info.value.stage == "load"


def test_exit_codes():
    try:
        Positive(value="x")
    except ValidationError as e:
        validation_error = e
    assert EXIT_OK == 0
    assert ErrorHandler.exit_code(ConfigurationError("bad")) == EXIT_USAGE
    assert ErrorHandler.exit_code(validation_error) == EXIT_USAGE
    assert ErrorHandler.exit_code(StageError("load", FileNotFoundError("x"))) == EXIT_USAGE
    assert ErrorHandler.exit_code(StageError("calibrate", MaxIterExceeded("slow", [1.0]))) == EXIT_NUMERICAL
    assert ErrorHandler.exit_code(RuntimeError("boom")) == EXIT_NUMERICAL


def test_performance_monitor():
    monitor = PerformanceMonitor()
    monitor.start("fixed_point[0]")
    duration = monitor.stop("fixed_point[0]", iterations=12)
    monitor.start("fixed_point[1]")
    monitor.stop("fixed_point[1]")
    assert duration >= 0
    assert monitor.metrics["fixed_point[0]"]["iterations"] == 12
    assert monitor.duration("fixed_point[0]") == duration
    assert monitor.total("fixed_point") >= duration
    assert monitor.stop("never_started") == 0.0
    assert monitor.duration("never_started") == 0.0


def test_setup_logging_writes_json_file(tmp_path):
    log_file = tmp_path / "logs" / "blv.log"
    setup_logging("INFO", str(log_file))
    structlog.get_logger("blv.test").info("Stage finished", stage="density")
    text = log_file.read_text(encoding="utf-8")
    assert '"event": "Stage finished"' in text
    assert '"stage": "density"' in text
    setup_logging("WARNING")
