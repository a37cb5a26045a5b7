import json
from functools import reduce
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from core.config import DIM_MAX, HERMITICITY_RTOL
from core.errors import InputError

PAULI_MATRICES: dict[str, np.ndarray] = {
    "I": np.array([[1, 0], [0, 1]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen_square(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


class HermitianMatrix(BaseModel):
    """Dense Hamiltonian, validated Hermitian once at construction."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray
    hermiticity_tol: float | None = None

    @field_validator("entries", mode="before")
    @classmethod
    def _square(cls, value: Any) -> np.ndarray:
        return _frozen_square(value)

    @model_validator(mode="after")
    def _check_hermitian(self) -> "HermitianMatrix":
        if self.dim > DIM_MAX:
            raise ValueError(f"Hamiltonian dimension {self.dim} exceeds dim_max={DIM_MAX}")
        scale = float(np.max(np.abs(self.entries)))
        tol = self.hermiticity_tol if self.hermiticity_tol is not None else HERMITICITY_RTOL * scale
        violation = float(np.max(np.abs(self.entries - self.entries.conj().T)))
        if violation > tol:
            raise ValueError(
                f"Hamiltonian is not Hermitian: max |H - H^dagger| = {violation:.3e} "
                f"exceeds tolerance {tol:.3e}"
            )
        return self

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def scaled(self, factor: float) -> "HermitianMatrix":
        return HermitianMatrix(entries=factor * self.entries)


class OperatorState(BaseModel):
    """An operator O viewed as the vector |O) under the trace inner product."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: np.ndarray

    @field_validator("entries", mode="before")
    @classmethod
    def _square(cls, value: Any) -> np.ndarray:
        return _frozen_square(value)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.entries, self.entries).real))

    def normalized(self) -> "OperatorState":
        norm = self.norm
        if norm == 0.0:
            raise InputError("cannot normalize the zero operator")
        return OperatorState(entries=self.entries / norm)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= atol * max(1.0, self.norm))


class PauliStringSum(BaseModel):
    """Spin Hamiltonian as a real-weighted sum of Pauli strings, e.g. [(0.5, "ZI"), (1.0, "XX")]."""

    num_qubits: int
    terms: list[tuple[float, str]]

    @model_validator(mode="after")
    def _check_terms(self) -> "PauliStringSum":
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        if 2 ** self.num_qubits > DIM_MAX:
            raise ValueError(
                f"{self.num_qubits} qubits give dimension {2 ** self.num_qubits}, "
                f"above the dense limit dim_max={DIM_MAX}"
            )
        for coeff, label in self.terms:
            if len(label) != self.num_qubits:
                raise ValueError(f"Pauli string '{label}' does not have length {self.num_qubits}")
            if set(label) - set(PAULI_MATRICES):
                raise ValueError(f"Pauli string '{label}' contains letters outside IXYZ")
            if not np.isfinite(coeff):
                raise ValueError(f"coefficient of '{label}' is not finite")
        return self


def pauli_string_matrix(label: str) -> np.ndarray:
    """Kronecker product of single-qubit Paulis, leftmost letter on the most significant qubit."""
    return reduce(np.kron, (PAULI_MATRICES[ch] for ch in label.upper()))


def realize_pauli_sum(p: PauliStringSum) -> HermitianMatrix:
    dim = 2 ** p.num_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for coeff, label in p.terms:
        total += coeff * pauli_string_matrix(label)
    return HermitianMatrix(entries=total)


def pauli_operator(label: str) -> OperatorState:
    if not label or set(label.upper()) - set(PAULI_MATRICES):
        raise InputError(f"'{label}' is not a Pauli string over IXYZ")
    if 2 ** len(label) > DIM_MAX:
        raise InputError(f"Pauli seed '{label}' exceeds dim_max={DIM_MAX}")
    return OperatorState(entries=pauli_string_matrix(label))


def random_hermitian(dim: int, rng: np.random.Generator) -> HermitianMatrix:
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return HermitianMatrix(entries=0.5 * (raw + raw.conj().T))


def random_traceless_hermitian(dim: int, rng: np.random.Generator) -> OperatorState:
    herm = random_hermitian(dim, rng).entries
    herm = herm - (np.trace(herm) / dim) * np.eye(dim)
    return OperatorState(entries=herm)


def _read_source(source: str | Path | dict) -> dict:
    if isinstance(source, dict):
        return source
    path = Path(source)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON. Parse error: {exc}") from exc


def _dense_from_payload(payload: dict) -> np.ndarray:
    try:
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, ValueError) as exc:
        raise InputError(f"dense matrix payload needs numeric 're' (and optional 'im') arrays: {exc}") from exc
    if re.shape != im.shape:
        raise InputError(f"'re' shape {re.shape} does not match 'im' shape {im.shape}")
    declared = payload.get("dim")
    if declared is not None and re.shape != (declared, declared):
        raise InputError(f"declared dim {declared} does not match matrix shape {re.shape}")
    return re + 1j * im


def load_hamiltonian(source: str | Path | dict) -> HermitianMatrix:
    """Read {"dim", "re", "im"} or {"qubits", "terms"} JSON into a HermitianMatrix."""
    payload = _read_source(source)
    if "qubits" in payload:
        terms = [(float(coeff), str(label)) for coeff, label in payload.get("terms", [])]
        return realize_pauli_sum(PauliStringSum(num_qubits=int(payload["qubits"]), terms=terms))
    return HermitianMatrix(entries=_dense_from_payload(payload))


def load_operator(source: str | Path | dict) -> OperatorState:
    """Read a seed operator: a Pauli label such as "XZ", a path, or an inline re/im mapping."""
    if isinstance(source, str) and source and not set(source.upper()) - set(PAULI_MATRICES):
        return pauli_operator(source)
    payload = _read_source(source)
    if "pauli" in payload:
        return pauli_operator(str(payload["pauli"]))
    return OperatorState(entries=_dense_from_payload(payload))


def matrix_to_payload(matrix: np.ndarray) -> dict:
    """Inverse of the dense ingestion layout."""
    return {
        "dim": int(matrix.shape[0]),
        "re": np.real(matrix).tolist(),
        "im": np.imag(matrix).tolist(),
    }
