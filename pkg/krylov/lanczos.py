from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from core.config import TERM_TOL
from core.errors import InputError, InvariantViolation
from core.logger import logger
from operators.hamiltonian import OperatorState, matrix_to_payload
from operators.liouvillian import Liouvillian

Termination = Literal["stationary", "invariant_subspace", "max_dim", "truncated", "coefficients"]

ORTHO_TOL: float = 1e-10
TRIDIAG_RTOL: float = 1e-8
DIAGONAL_RTOL: float = 1e-8


def _frozen_array(value: Any, dtype=float) -> np.ndarray:
    arr = np.array(value, dtype=dtype)
    arr.setflags(write=False)
    return arr


class LanczosChain(BaseModel):
    """Lanczos coefficients b_1..b_{D-1}, the Krylov basis (when built from an operator) and diagnostics."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim_krylov: int
    coefficients: np.ndarray
    basis: np.ndarray | None = None  # (D, d, d); None for chains built from coefficient data
    ortho_residual: float = 0.0
    tridiag_residual: float = 0.0
    termination: Termination = "coefficients"
    hilbert_dim: int | None = None

    @field_validator("coefficients", mode="before")
    @classmethod
    def _coefficients(cls, value: Any) -> np.ndarray:
        arr = _frozen_array(value).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise ValueError("Lanczos coefficients must be finite")
        return arr

    @field_validator("basis", mode="before")
    @classmethod
    def _basis(cls, value: Any) -> np.ndarray | None:
        return None if value is None else _frozen_array(value, dtype=complex)

    @property
    def stationary(self) -> bool:
        return self.termination == "stationary"

    @property
    def b1(self) -> float:
        return float(self.coefficients[0]) if self.coefficients.size else 0.0

    @property
    def flags(self) -> list[str]:
        return ["stationary operator"] if self.stationary else []

    def b(self, n: int) -> float:
        """b_n with the chain boundaries b_0 = b_D = 0."""
        if 1 <= n <= self.coefficients.size:
            return float(self.coefficients[n - 1])
        return 0.0

    def assert_invariants(self) -> None:
        b = self.coefficients
        if b.size + 1 != self.dim_krylov:
            raise InvariantViolation("chain_length", f"{b.size} coefficients for D={self.dim_krylov}")
        if np.any(b < 0):
            raise InvariantViolation("nonnegative_coefficients", f"min b_n = {b.min():.3e}")
        if self.hilbert_dim is not None:
            cap = self.hilbert_dim ** 2 - self.hilbert_dim + 1
            if self.dim_krylov > cap:
                raise InvariantViolation("dimension_cap", f"D={self.dim_krylov} exceeds d^2-d+1={cap}")
        if self.ortho_residual > ORTHO_TOL:
            raise InvariantViolation("orthonormality", f"ortho_residual={self.ortho_residual:.3e}")
        scale = float(b.max()) if b.size else 1.0
        if self.tridiag_residual > TRIDIAG_RTOL * max(scale, 1e-300):
            raise InvariantViolation(
                "three_term_closure", f"tridiag_residual={self.tridiag_residual:.3e} at max(b)={scale:.3e}"
            )


def build_chain(
    L: Liouvillian,
    seed: OperatorState,
    term_tol: float = TERM_TOL,
    max_dim: int | None = None,
) -> LanczosChain:
    """Lanczos recursion on L from seed, with two-pass full reorthogonalization.

    The first coefficient is compared against term_tol * 2||H||, later ones against term_tol * b_1.
    """
    d = L.dim
    if seed.dim != d:
        raise InputError(f"dimension mismatch: seed has dim {seed.dim}, Hamiltonian has dim {d}")
    if not term_tol > 0:
        raise InputError(f"term_tol must be positive, got {term_tol}")
    norm = seed.norm
    if norm == 0.0:
        raise InputError("seed operator is zero")

    cap = d * d - d + 1
    max_dim = cap if max_dim is None else min(int(max_dim), cap)
    if max_dim < 1:
        raise InputError(f"max_dim must be at least 1, got {max_dim}")
    scale = L.norm_bound

    basis: list[np.ndarray] = [(seed.entries / norm).reshape(-1)]
    images: list[np.ndarray] = []
    b: list[float] = []
    diag: list[complex] = []
    termination: Termination = "max_dim"

    while True:
        n = len(basis) - 1
        image = L.commutator(basis[n].reshape(d, d)).reshape(-1)
        images.append(image)
        diag.append(np.vdot(basis[n], image))

        w = image.copy()
        if n > 0:
            w -= b[-1] * basis[n - 1]
        stacked = np.asarray(basis)
        for _ in range(2):
            w -= stacked.T @ (stacked.conj() @ w)
        beta = float(np.linalg.norm(w))

        threshold = term_tol * scale if n == 0 else term_tol * b[0]
        if beta <= threshold:
            termination = "stationary" if n == 0 else "invariant_subspace"
            logger.debug(f"[lanczos] chain closed at D={n + 1}: candidate norm {beta:.3e} <= {threshold:.3e}")
            break
        if len(basis) == max_dim:
            break
        b.append(beta)
        basis.append(w / beta)

    max_diag = float(np.max(np.abs(diag)))
    if max_diag > DIAGONAL_RTOL * max(scale, 1e-300):
        raise InputError(
            f"seed is not Hermitian up to a global phase: Lanczos diagonal reaches {max_diag:.3e}, "
            "so the real-coefficient chain cannot represent the Liouvillian"
        )
    if termination == "stationary":
        logger.warning("[lanczos] seed commutes with H: stationary operator, D=1")

    vecs = np.asarray(basis)
    D = vecs.shape[0]
    ortho = float(np.max(np.abs(vecs.conj() @ vecs.T - np.eye(D))))
    coeffs = np.asarray(b)
    # closing line L K_{D-1} = b_{D-1} K_{D-2} holds only when the chain closed on its own
    checked = D if termination != "max_dim" else D - 1
    tridiag = 0.0
    for n in range(checked):
        r = images[n].copy()
        if n + 1 < D:
            r -= coeffs[n] * vecs[n + 1]
        if n > 0:
            r -= coeffs[n - 1] * vecs[n - 1]
        tridiag = max(tridiag, float(np.linalg.norm(r)))

    logger.debug(f"[lanczos] D={D} termination={termination} ortho={ortho:.2e} tridiag={tridiag:.2e}")
    return LanczosChain(
        dim_krylov=D,
        coefficients=coeffs,
        basis=vecs.reshape(D, d, d),
        ortho_residual=ortho,
        tridiag_residual=tridiag,
        termination=termination,
        hilbert_dim=d,
    )


def coefficient_profile(chain: LanczosChain) -> np.ndarray:
    return np.array(chain.coefficients, dtype=float)


def chain_from_coefficients(b: Any, termination: Termination = "coefficients") -> LanczosChain:
    """Chain from coefficient data. A zero b_n closes the chain at level n."""
    arr = np.asarray(b, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InputError("Lanczos coefficients must be finite")
    if np.any(arr < 0):
        raise InputError(f"Lanczos coefficients must be non-negative, got min {arr.min():.3e}")
    zeros = np.flatnonzero(arr == 0.0)
    if zeros.size:
        arr = arr[: zeros[0]]
        termination = "invariant_subspace"
    if arr.size == 0 and termination == "coefficients":
        termination = "stationary"
    return LanczosChain(dim_krylov=arr.size + 1, coefficients=arr, termination=termination)


def chain_to_dict(chain: LanczosChain, dump_basis: bool = False) -> dict:
    payload = {
        "D": chain.dim_krylov,
        "b": [float(x) for x in chain.coefficients],
        "ortho_residual": chain.ortho_residual,
        "tridiag_residual": chain.tridiag_residual,
        "termination": chain.termination,
        "flags": chain.flags,
    }
    if dump_basis and chain.basis is not None:
        payload["basis"] = [matrix_to_payload(k) for k in chain.basis]
    return payload
