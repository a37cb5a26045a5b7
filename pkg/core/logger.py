import logging
import os
import sys
from datetime import datetime

class KrylovFormatter(logging.Formatter):

    _STANDARD_FMT = "[%(asctime)s] %(levelname)s - %(name)s - %(message)s"
    _DATE_FMT     = "%Y-%m-%d %H:%M:%S"

    def format(self, record: logging.LogRecord) -> str:

        if isinstance(record.msg, dict) and "check" in record.msg and "status" in record.msg:
            ts     = record.msg.get("timestamp", datetime.now().strftime(self._DATE_FMT))
            check  = record.msg["check"]
            system = record.msg.get("system", "-")
            status = record.msg["status"]
            detail = record.msg.get("detail")
            return (
                f"[{ts}] Check: {check} ({system})\n"
                f"Status: {status}" + (f" {detail}" if detail else "")
            )

        formatter = logging.Formatter(self._STANDARD_FMT, datefmt=self._DATE_FMT)
        return formatter.format(record)

def _build_logger() -> logging.Logger:

    log = logging.getLogger("krylov_sphere")

    if log.handlers:
        return log

    log.setLevel(os.getenv("KRYLOV_LOG_LEVEL", "INFO").upper())

    handler = logging.StreamHandler(sys.stdout)
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(KrylovFormatter())

    log.addHandler(handler)
    log.propagate = False

    return log


logger: logging.Logger = _build_logger()
