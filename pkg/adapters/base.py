import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from core.config import MODEL_MAX_LEVELS, TAIL_TOL
from core.errors import InputError, TruncationCapExceeded
from operators.hamiltonian import HermitianMatrix, OperatorState

Family = Literal["qubit_z", "qubit_transverse", "constant_b", "meixner", "coherent"]

_TAIL_CHUNK: int = 4096


class ModelSpec(BaseModel):
    """An exactly solvable family with its parameters, e.g. {"family": "meixner", "alpha": 1.0, "eta": 2.0}."""

    model_config = ConfigDict(frozen=True)

    family: Family
    omega: float | None = None
    h: float | None = None
    b: float | None = None
    alpha: float | None = None
    eta: float | None = None

    @model_validator(mode="after")
    def _check_params(self) -> "ModelSpec":
        for name in ("omega", "b", "alpha", "eta"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if self.h is not None and not self.h >= 0:
            raise ValueError(f"h must be non-negative, got {self.h}")
        return self

    def require(self, *names: str) -> tuple[float, ...]:
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise InputError(f"family '{self.family}' needs parameter(s) {', '.join(missing)}")
        return tuple(float(getattr(self, name)) for name in names)


def load_model_spec(source: str | Path | dict) -> ModelSpec:
    if isinstance(source, dict):
        payload = source
    else:
        try:
            payload = json.loads(Path(source).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read model spec {source}: {exc}") from exc
    try:
        return ModelSpec(**payload)
    except ValidationError as exc:
        raise InputError(f"invalid model spec: {exc}") from exc


class PeakPrediction(BaseModel):
    """Predicted peak level. For meixner also the large-t asymptote."""

    value: float
    asymptote: float | None = None
    flagged: bool = False
    note: str | None = None


def geometric_tail_cut(
    log_weight: Callable[[np.ndarray], np.ndarray],
    ratio: Callable[[np.ndarray], np.ndarray],
    start: int,
    tail_tol: float = TAIL_TOL,
    max_levels: int = MODEL_MAX_LEVELS,
) -> np.ndarray:
    """log p_n for n < N, where N >= start is the first level whose geometric tail bound
    p_N / (1 - r_N) falls below tail_tol. r_N must dominate every later ratio p_{m+1} / p_m.
    """
    log_tol = np.log(tail_tol)
    pieces: list[np.ndarray] = []
    bound = np.array([np.inf])
    first = 0
    while first < max_levels:
        n = np.arange(first, min(first + _TAIL_CHUNK, max_levels))
        log_p = log_weight(n)
        r = ratio(n)
        with np.errstate(divide="ignore", invalid="ignore"):
            bound = np.where(r < 1.0, log_p - np.log1p(-np.minimum(r, 1.0)), np.inf)
        done = (n >= start) & (bound < log_tol)
        if done.any():
            cut = int(np.argmax(done))
            pieces.append(log_p[:cut])
            return np.concatenate(pieces)
        pieces.append(log_p)
        first += _TAIL_CHUNK
    raise TruncationCapExceeded(max_levels, float(np.exp(bound[-1])))


class BaseModelAdapter(ABC):
    # Subclasses name the family they implement.
    family: str = "unknown"
    semi_infinite: bool = True

    @abstractmethod
    def coefficient(self, spec: ModelSpec, n: int) -> float:
        """b_n for n >= 1. Zero past the end of a finite chain."""
        pass

    @abstractmethod
    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        """Real φ_n(t) solving dΦ/dt = AΦ from e_0."""
        pass

    def amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        if t < 0 or not np.isfinite(t):
            raise InputError(f"model time must be finite and non-negative, got {t}")
        return np.abs(self.signed_amplitudes(spec, t, tail_tol))

    def peak_prediction(self, spec: ModelSpec, t: float) -> PeakPrediction:
        raise InputError(f"no peak prediction for family '{self.family}'")

    def coefficient_rule(self, spec: ModelSpec) -> Callable[[int], float]:
        return lambda n: self.coefficient(spec, n)

    def hamiltonian(self, spec: ModelSpec) -> HermitianMatrix | None:
        """Dense Hamiltonian realizing the chain, for families that have one."""
        return None

    def seed(self, spec: ModelSpec) -> OperatorState | None:
        return None
