import json
import logging
import time
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Any, Dict, Iterator, Optional

from rabi.config import settings


class JSONFormatter(logging.Formatter):
    """Форматтер для логирования в JSON формате"""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "pid": record.process,
        }

        # Дополнительные поля (параметры точки, тип события)
        if hasattr(record, 'extra_fields'):
            log_entry.update(record.extra_fields)

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


def setup_logger(name: str, level: Optional[str] = None) -> logging.Logger:
    """Настройка логгера с JSON форматированием"""
    logger = logging.getLogger(name)

    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(JSONFormatter())
        logger.addHandler(handler)

    logger.setLevel(level or settings.LOG_LEVEL)
    return logger


def configure_root(level: Optional[str] = None, fmt: Optional[str] = None) -> None:
    """Настройка корневого логгера для CLI (text или json)"""
    level = (level or settings.LOG_LEVEL).upper()
    fmt = fmt or settings.LOG_FORMAT
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler()
    if fmt == "json":
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    root.addHandler(handler)
    root.setLevel(getattr(logging, level))


def log_error(logger: logging.Logger, error: Exception, context: Dict[str, Any] = None):
    """Ошибка расчета с параметрами точки; для RabiError добавляется код выхода"""
    fields = {
        "type": "error",
        "error_type": type(error).__name__,
        "error_message": str(error),
        "context": context or {},
    }
    exit_code = getattr(error, "exit_code", None)
    if exit_code is not None:
        fields["exit_code"] = exit_code
    logger.error(
        f"{type(error).__name__}: {error}",
        extra={"extra_fields": fields},
        exc_info=logger.isEnabledFor(logging.DEBUG)
    )


def log_performance(logger: logging.Logger, operation: str, duration: float,
                    metadata: Dict[str, Any] = None):
    """Логирование производительности операций"""
    logger.info(
        f"Performance: {operation} ({round(duration * 1000, 2)} ms)",
        extra={
            "extra_fields": {
                "type": "performance",
                "operation": operation,
                "duration_ms": round(duration * 1000, 2),
                "metadata": metadata or {}
            }
        }
    )


@contextmanager
def timed(logger: logging.Logger, operation: str, **metadata) -> Iterator[None]:
    """Замер времени блока с записью через log_performance"""
    start = time.perf_counter()
    try:
        yield
    finally:
        log_performance(logger, operation, time.perf_counter() - start, metadata)
