import json
import logging
import os
import time
from typing import Optional

LOG_LEVEL_ENV = "TENSORRANK_LOG_LEVEL"


class JsonFormatter(logging.Formatter):
    """Minimal JSON formatter for logs."""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(record.created)),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        return json.dumps(payload)


def resolve_level(level: Optional[str] = None) -> str:
    return (level or os.getenv(LOG_LEVEL_ENV, "INFO")).upper()


def setup_logging(level: Optional[str] = None, json_logs: bool = False) -> None:
    """Install one stream handler on the root logger, replacing earlier ones."""
    handler = logging.StreamHandler()
    if json_logs:
        handler.setFormatter(JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    logging.basicConfig(level=resolve_level(level), handlers=[handler], force=True)
