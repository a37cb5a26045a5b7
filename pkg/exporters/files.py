import hashlib
import io
import json
import math
import os
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from core.config import TOOL_NAME, TOOL_VERSION
from core.errors import InputError


def to_jsonable(value: Any) -> Any:
    """Arrays to lists, numpy scalars to Python, non-finite floats to None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def canonical_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(config: Any) -> str:
    """SHA-256 of the canonical JSON of the resolved configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def meta_block(digest: str) -> dict[str, str]:
    return {"tool": TOOL_NAME, "version": TOOL_VERSION, "config_hash": digest}


def ensure_output_dir(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"output directory {out} cannot be created: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise InputError(f"output directory {out} is not writable")
    return out


def write_json(path: Path, payload: dict, digest: str) -> Path:
    document = {**to_jsonable(payload), "meta": meta_block(digest)}
    path.write_text(json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray], digest: str) -> Path:
    """Columns side by side under a '# tool version config_hash' line and a header row."""
    table = np.column_stack([np.asarray(col, dtype=float) for col in columns]) if columns else np.empty((0, 0))
    buffer = io.StringIO()
    buffer.write(f"# {TOOL_NAME} {TOOL_VERSION} {digest}\n")
    buffer.write(",".join(header) + "\n")
    if table.size:
        np.savetxt(buffer, table, fmt="%.17g", delimiter=",")
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path
