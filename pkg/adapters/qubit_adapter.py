import numpy as np

from adapters.base import BaseModelAdapter, ModelSpec
from core.config import TAIL_TOL
from operators.hamiltonian import HermitianMatrix, OperatorState, PauliStringSum, pauli_operator, realize_pauli_sum


class QubitZAdapter(BaseModelAdapter):
    """H = (ω/2)σ_z with seed σ_x: a two-level chain b = (ω) rotating on the unit circle."""

    family = "qubit_z"
    semi_infinite = False

    def coefficient(self, spec: ModelSpec, n: int) -> float:
        (omega,) = spec.require("omega")
        return omega if n == 1 else 0.0

    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        (omega,) = spec.require("omega")
        return np.array([np.cos(omega * t), np.sin(omega * t)])

    def hamiltonian(self, spec: ModelSpec) -> HermitianMatrix:
        (omega,) = spec.require("omega")
        return realize_pauli_sum(PauliStringSum(num_qubits=1, terms=[(omega / 2, "Z")]))

    def seed(self, spec: ModelSpec) -> OperatorState:
        return pauli_operator("X")


class QubitTransverseAdapter(BaseModelAdapter):
    """H = (ω/2)σ_z + (h/2)σ_x with seed σ_x. The chain b = (ω, h) closes after three elements."""

    family = "qubit_transverse"
    semi_infinite = False

    def coefficient(self, spec: ModelSpec, n: int) -> float:
        omega, h = spec.require("omega", "h")
        return {1: omega, 2: h}.get(n, 0.0)

    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        omega, h = spec.require("omega", "h")
        big_omega = np.hypot(omega, h)
        c, s = np.cos(big_omega * t), np.sin(big_omega * t)
        phi = np.array([
            c + (h / big_omega) ** 2 * (1.0 - c),
            (omega / big_omega) * s,
            (h * omega / big_omega**2) * (1.0 - c),
        ])
        # h = 0 leaves the two-level chain
        return phi if h > 0 else phi[:2]

    def hamiltonian(self, spec: ModelSpec) -> HermitianMatrix:
        omega, h = spec.require("omega", "h")
        return realize_pauli_sum(PauliStringSum(num_qubits=1, terms=[(omega / 2, "Z"), (h / 2, "X")]))

    def seed(self, spec: ModelSpec) -> OperatorState:
        return pauli_operator("X")
