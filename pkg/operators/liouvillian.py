from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict

from core.errors import InputError
from operators.hamiltonian import HermitianMatrix, OperatorState

# O(t) = U O U^dagger with U = exp(HEISENBERG_SIGN * i H t). With -1 this solves i dO/dt = [H, O].
HEISENBERG_SIGN: int = -1


class Liouvillian(BaseModel):
    """The superoperator L O = [H, O]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    hamiltonian: HermitianMatrix

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.hamiltonian.entries)

    @cached_property
    def norm_bound(self) -> float:
        """2 ||H||_2 bounds the operator norm of L."""
        return 2.0 * float(np.linalg.norm(self.hamiltonian.entries, 2))

    def commutator(self, entries: np.ndarray) -> np.ndarray:
        h = self.hamiltonian.entries
        return h @ entries - entries @ h


def _check_dims(expected: int, got: int, what: str) -> None:
    if expected != got:
        raise InputError(f"dimension mismatch: {what} has dim {got}, expected {expected}")


def inner_product(a: OperatorState, b: OperatorState) -> complex:
    """(A|B) = Tr(A^dagger B), the bare trace."""
    _check_dims(a.dim, b.dim, "second operator")
    return complex(np.vdot(a.entries, b.entries))


def apply_liouvillian(L: Liouvillian, o: OperatorState) -> OperatorState:
    _check_dims(L.dim, o.dim, "operator")
    return OperatorState(entries=L.commutator(o.entries))


def heisenberg_oracle(L: Liouvillian, o: OperatorState, t: float) -> OperatorState:
    """Exact e^{-itL} O through the eigendecomposition of H."""
    _check_dims(L.dim, o.dim, "operator")
    if not np.isfinite(t):
        raise InputError(f"time must be finite, got {t}")
    evals, evecs = L.spectrum
    u = (evecs * np.exp(HEISENBERG_SIGN * 1j * evals * t)) @ evecs.conj().T
    return OperatorState(entries=u @ o.entries @ u.conj().T)
