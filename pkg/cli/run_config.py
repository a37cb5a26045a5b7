import json
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.config import ATOL, RTOL, TAIL_TOL, TERM_TOL, env_value
from core.errors import InputError
from worker.checks import ALL_CHECKS

# flag name -> RunConfig field; every flag can also come from KRYLOV_<FLAG>
FLAG_FIELDS: dict[str, str] = {
    "hamiltonian":    "hamiltonian",
    "model":          "model",
    "seed-operator":  "seed_operator",
    "t-max":          "t_max",
    "samples":        "samples",
    "times":          "times",
    "rtol":           "rtol",
    "atol":           "atol",
    "term-tol":       "term_tol",
    "tail-tol":       "tail_tol",
    "out":            "out",
    "seed":           "seed",
    "checks":         "checks",
    "random-systems": "random_systems",
    "inject-bug":     "inject_bug",
    "dump-basis":     "dump_basis",
    "envelope-grid":  "envelope_grid",
}

_LIST_FIELDS = {"times", "checks"}
_BOOL_FIELDS = {"dump_basis", "envelope_grid"}


class RunConfig(BaseModel):
    """Resolved configuration of a single command run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    hamiltonian: str | dict | None = None
    model: str | dict | None = None
    seed_operator: str | dict | None = None
    t_max: float = 10.0
    samples: int = 201
    times: list[float] | None = None
    rtol: float = RTOL
    atol: float = ATOL
    term_tol: float = TERM_TOL
    tail_tol: float = TAIL_TOL
    out: str = "out"
    seed: int = 0
    checks: list[str] = list(ALL_CHECKS)
    random_systems: int = 50
    inject_bug: str | None = None
    dump_basis: bool = False
    envelope_grid: bool = False

    @field_validator("t_max")
    @classmethod
    def _positive_horizon(cls, value: float) -> float:
        if not value > 0:
            raise ValueError(f"t_max must be > 0, got {value}")
        return value

    @field_validator("samples")
    @classmethod
    def _enough_samples(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"samples must be >= 2, got {value}")
        return value

    @field_validator("checks")
    @classmethod
    def _known_checks(cls, value: list[str]) -> list[str]:
        unknown = sorted(set(value) - set(ALL_CHECKS))
        if unknown:
            raise ValueError(f"unknown checks {unknown}. Available: {', '.join(ALL_CHECKS)}")
        return value

    @field_validator("inject_bug")
    @classmethod
    def _known_bug(cls, value: str | None) -> str | None:
        if value not in (None, "hopping_sign"):
            raise ValueError(f"unknown injected bug '{value}'. Available: hopping_sign")
        return value

    @model_validator(mode="after")
    def _single_source(self) -> "RunConfig":
        if self.hamiltonian is not None and self.model is not None:
            raise ValueError("give either a Hamiltonian or a model, not both")
        return self

    def time_grid(self) -> np.ndarray:
        """Explicit times if given, else a uniform grid on [0, t_max]."""
        if self.times is not None:
            return np.asarray(self.times, dtype=float)
        return np.linspace(0.0, self.t_max, self.samples)


def coerce_flag(field: str, raw: str) -> Any:
    if field in _LIST_FIELDS:
        items = [item.strip() for item in raw.split(",") if item.strip()]
        if field != "times":
            return items
        try:
            return [float(item) for item in items]
        except ValueError as exc:
            raise InputError(f"times must be comma-separated numbers, got '{raw}'") from exc
    if field in _BOOL_FIELDS:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def _read_config_file(path: str | Path) -> dict[str, Any]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON. Parse error: {exc}") from exc
    if not isinstance(payload, dict):
        raise InputError(f"config file {path} must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in payload.items()}


def resolve_config(cli_values: dict[str, Any], config_path: str | Path | None = None) -> RunConfig:
    """Merge defaults, the JSON config file, KRYLOV_* variables and CLI flags, later ones winning."""
    merged: dict[str, Any] = {}
    if config_path is not None:
        merged.update(_read_config_file(config_path))
    for flag, field in FLAG_FIELDS.items():
        raw = env_value(flag)
        if raw is not None:
            merged[field] = coerce_flag(field, raw)
    merged.update({key: value for key, value in cli_values.items() if value is not None})
    return RunConfig(**merged)
