"""Custom logging formatters."""

import json
import logging
from datetime import datetime, timezone


class JsonFormatter(logging.Formatter):
    """
    JSON formatter for structured logging.
    One object per line so runs can be grepped or shipped to a log store.
    """

    def format(self, record: logging.LogRecord) -> str:
        log_record = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)

        # Structured payload passed as extra={"extra": {...}}
        if hasattr(record, "extra"):
            log_record["extra"] = record.extra

        # Subcommand currently running, set by the command runner
        if hasattr(record, "command"):
            log_record["command"] = record.command

        return json.dumps(log_record, default=str)


class CommandContextFilter(logging.Filter):
    """Stamp every record with the name of the running subcommand."""

    def __init__(self, command: str = ""):
        super().__init__()
        self.command = command

    def filter(self, record: logging.LogRecord) -> bool:
        if self.command and not hasattr(record, "command"):
            record.command = self.command
        return True
