"""
Structured logger for the cleangog toolkit.

This module provides the logging used by the command line and the long-running
pipeline stages. It includes:
- Structured logging with a JSON context on every record
- Run metrics (warnings, errors, commands, stage timings)
- A decorator that times pipeline stages
"""

# Import standard logging and the rotating handler for optional log files.
import logging
from logging.handlers import RotatingFileHandler
# Import json for structured context formatting.
import json
# Import time for stage timing.
import time
# Import os for the process id in record contexts.
import os
# Import dataclasses for the metrics record.
from dataclasses import dataclass, field
# Import typing for type hints.
from typing import Any, Dict, List, Optional, Tuple, Union
# Import datetime for record timestamps.
from datetime import datetime
# Import wraps to keep the timed function's metadata.
from functools import wraps

RECORD_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s - %(context)s"


class _ContextDefault(logging.Filter):
    """
    Give records from plain module loggers an empty context field.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        if not hasattr(record, "context"):
            record.context = "{}"
        return True


@dataclass
class RunMetrics:
    """
    Counters of one toolkit run.

    Attributes:
        commands (int): Commands started
        warnings (int): Warnings logged
        errors (int): Errors logged, exceptions included
        timings (List[Tuple[str, float]]): (stage, seconds) in call order
    """
    commands: int = 0
    warnings: int = 0
    errors: int = 0
    timings: List[Tuple[str, float]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        stages: Dict[str, List[float]] = {}
        for stage, seconds in self.timings:
            stages.setdefault(stage, []).append(seconds)
        return {
            "error_count": self.errors,
            "warning_count": self.warnings,
            "total_requests": self.commands,
            "processing_times": [seconds for _, seconds in self.timings],
            "stages": stages,
        }


class ToolkitLogger:
    """
    Structured logger for toolkit runs.

    Every record carries a JSON context with the caller's fields plus a timestamp
    and the process id. The logger also keeps run metrics that the CLI reports
    in its response documents.

    Why is this important?
    -----------------------------------
    A separation run walks through covers, quotient groups and kernels of very
    different sizes. Logging each stage with its sizes and timings is how a cap
    hit or a slow depth gets diagnosed after the fact.
    """

    def __init__(self, name: str, level: Union[int, str] = logging.WARNING,
                 log_file: Optional[str] = None, max_file_size: int = 10 * 1024 * 1024,
                 backup_count: int = 5):
        """
        Args:
            name: Logger name
            level: Logging level; WARNING by default so stdout stays for command output
            log_file: Also write records to this rotating file
            max_file_size: Rotation size of the log file in bytes
            backup_count: Rotated files kept
        """
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        # one set of handlers per logger name, however often it is constructed
        if not any(getattr(h, "_cleangog", False) for h in self.logger.handlers):
            self._attach(logging.StreamHandler())
            if log_file:
                self._attach(RotatingFileHandler(log_file, maxBytes=max_file_size,
                                                 backupCount=backup_count))
        self.metrics = RunMetrics()

    def _attach(self, handler: logging.Handler) -> None:
        handler.setFormatter(logging.Formatter(RECORD_FORMAT))
        handler.addFilter(_ContextDefault())
        handler._cleangog = True
        self.logger.addHandler(handler)

    @staticmethod
    def _context(fields: Dict[str, Any]) -> Dict[str, str]:
        """
        Record extra with the fields, a timestamp and the pid as JSON.

        Non-JSON values (numpy scalars, tuples of states) are stringified.
        """
        payload = dict(fields, timestamp=datetime.now().isoformat(), pid=os.getpid())
        return {"context": json.dumps(payload, default=str, sort_keys=True)}

    def _emit(self, level: int, message: str, **fields) -> None:
        self.logger.log(level, message, extra=self._context(fields))

    def debug(self, message: str, **fields) -> None:
        self._emit(logging.DEBUG, message, **fields)

    def info(self, message: str, **fields) -> None:
        self._emit(logging.INFO, message, **fields)

    def warning(self, message: str, **fields) -> None:
        """
        Log a warning and count it.
        """
        self.metrics.warnings += 1
        self._emit(logging.WARNING, message, **fields)

    def error(self, message: str, **fields) -> None:
        """
        Log an error and count it.
        """
        self.metrics.errors += 1
        self._emit(logging.ERROR, message, **fields)

    def exception(self, message: str, **fields) -> None:
        """
        Log the active exception with its traceback and count it.
        """
        self.metrics.errors += 1
        self.logger.exception(message, extra=self._context(fields))

    def log_metric(self, name: str, value: float, **fields) -> None:
        """
        Log a named value (cover size, quotient order, certificate degree).
        """
        self._emit(logging.INFO, f"Metric: {name} = {value}", metric_name=name, metric_value=value, **fields)

    def log_performance(self, operation: str, start_time: float, **fields) -> None:
        """
        Log and record the time since start_time for a stage.
        """
        duration = time.time() - start_time
        self.metrics.timings.append((operation, duration))
        self._emit(logging.INFO, f"Performance: {operation} took {duration:.2f}s",
                   operation=operation, duration=duration, **fields)

    def log_request(self, command: str, **fields) -> None:
        self.metrics.commands += 1
        self._emit(logging.INFO, f"Request: {command}", command=command, **fields)

    def log_response(self, command: str, status: str, **fields) -> None:
        self._emit(logging.INFO, f"Response: {command} - {status}", command=command, status=status, **fields)

    def get_metrics(self) -> Dict[str, Any]:
        """
        Snapshot of the run metrics as a plain dict.
        """
        return self.metrics.to_dict()

    def reset_metrics(self) -> None:
        self.metrics = RunMetrics()

    def performance_monitor(self, operation: str):
        """
        Decorator timing every call of a function as the stage `operation`.

        The time is recorded whether the call returns or raises; exceptions
        propagate unchanged so callers still see toolkit errors.
        """
        def decorator(func):
            @wraps(func)
            def timed(*args, **kwargs):
                start = time.time()
                try:
                    return func(*args, **kwargs)
                finally:
                    self.log_performance(operation, start)
            return timed
        return decorator
