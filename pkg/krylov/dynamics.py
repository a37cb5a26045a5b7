from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.sparse.linalg import expm_multiply

from core.config import ATOL, NORM_TOL, RTOL, SPECTRAL_DENSE_MAX
from core.errors import InputError, IntegrationError, InvariantViolation, KrylovError
from core.logger import logger
from krylov.lanczos import LanczosChain

PHASE_TOL: float = 1e-10

# i^n for n mod 4, exact
_I_POWERS = np.array([1.0, 1.0j, -1.0, -1.0j])


class HoppingMatrix(BaseModel):
    """Real skew-symmetric tridiagonal generator: A[n][n-1] = b_n, A[n][n+1] = -b_{n+1}.

    lower_sign flips the sub-diagonal. Anything other than +1 breaks skew symmetry and only
    serves the harness self-test.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coefficients: np.ndarray
    lower_sign: int = 1

    @field_validator("coefficients", mode="before")
    @classmethod
    def _coefficients(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @property
    def dim(self) -> int:
        return self.coefficients.size + 1

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """A x along the last axis, so a (T, D) stack of amplitude vectors maps row by row."""
        b = self.coefficients
        out = np.zeros_like(x)
        if b.size:
            out[..., 1:] += self.lower_sign * b * x[..., :-1]
            out[..., :-1] -= b * x[..., 1:]
        return out

    def dense(self) -> np.ndarray:
        b = self.coefficients
        return self.lower_sign * np.diag(b, -1) - np.diag(b, 1)

    def sparse(self) -> sparse.csr_matrix:
        b = self.coefficients
        return sparse.diags([self.lower_sign * b, -b], [-1, 1], shape=(self.dim, self.dim), format="csr")

    @property
    def skew_residual(self) -> float:
        dense = self.dense()
        return float(np.max(np.abs(dense + dense.T))) if dense.size else 0.0


class AmplitudeTrajectory(BaseModel):
    """Φ(t) on a time grid with its exact derivatives AΦ, A²Φ, A³Φ."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    d3phi: np.ndarray
    norm_drift: np.ndarray
    coefficients: np.ndarray
    method: Literal["ode", "spectral", "closed_form"]

    @field_validator("times", "phi", "dphi", "d2phi", "d3phi", "norm_drift", "coefficients", mode="before")
    @classmethod
    def _frozen(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def dim(self) -> int:
        return self.phi.shape[1]

    @property
    def b1(self) -> float:
        return float(self.coefficients[0]) if self.coefficients.size else 0.0

    def assert_invariants(self, norm_tol: float = NORM_TOL) -> None:
        worst = float(self.norm_drift.max())
        if worst > norm_tol:
            idx = int(self.norm_drift.argmax())
            raise InvariantViolation(
                "norm_conservation", f"|sum phi^2 - 1| = {worst:.3e} at t={self.times[idx]:.6g} ({self.method})"
            )


def hopping_matrix(chain: LanczosChain) -> HoppingMatrix:
    return HoppingMatrix(coefficients=chain.coefficients)


def lanczos_matrix(chain: LanczosChain) -> np.ndarray:
    """Symmetric tridiagonal matrix of the Liouvillian in the Krylov basis."""
    b = chain.coefficients
    return np.diag(b, 1) + np.diag(b, -1)


def similarity_residual(chain: LanczosChain) -> float:
    """max |A - (-i S L S^-1)| with S = diag(i^n)."""
    D = chain.dim_krylov
    s = _I_POWERS[np.arange(D) % 4]
    conjugated = -1j * (s[:, None] * lanczos_matrix(chain) / s[None, :])
    return float(np.max(np.abs(hopping_matrix(chain).dense() - conjugated)))


def _validate_times(times: Any) -> np.ndarray:
    arr = np.asarray(times, dtype=float).reshape(-1)
    if arr.size == 0:
        raise InputError("time grid is empty")
    if not np.all(np.isfinite(arr)):
        raise InputError("time grid contains non-finite values")
    if arr[0] < 0:
        raise InputError(f"time grid must start at t >= 0, got {arr[0]}")
    if np.any(np.diff(arr) <= 0):
        raise InputError("time grid must be strictly increasing")
    return arr


def _trajectory(times: np.ndarray, phi: np.ndarray, hop: HoppingMatrix, method: str) -> AmplitudeTrajectory:
    dphi = hop.matvec(phi)
    d2phi = hop.matvec(dphi)
    d3phi = hop.matvec(d2phi)
    drift = np.abs(np.sum(phi**2, axis=1) - 1.0)
    if drift.max() > NORM_TOL:
        logger.warning(f"[dynamics] {method} norm drift {drift.max():.3e} exceeds norm_tol={NORM_TOL:.1e}")
    return AmplitudeTrajectory(
        times=times,
        phi=phi,
        dphi=dphi,
        d2phi=d2phi,
        d3phi=d3phi,
        norm_drift=drift,
        coefficients=hop.coefficients,
        method=method,
    )


def trajectory_from_amplitudes(times: Any, phi: Any, coefficients: Any) -> AmplitudeTrajectory:
    """Wrap externally computed amplitudes, e.g. closed forms, with A-power derivatives."""
    times = _validate_times(times)
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    hop = HoppingMatrix(coefficients=coefficients)
    if phi.shape != (times.size, hop.dim):
        raise InputError(f"amplitude array shape {phi.shape} does not match ({times.size}, {hop.dim})")
    return _trajectory(times, phi, hop, "closed_form")


def evolve_ode(
    chain: LanczosChain,
    times: Any,
    rtol: float = RTOL,
    atol: float = ATOL,
    hopping: HoppingMatrix | None = None,
) -> AmplitudeTrajectory:
    """Integrate dΦ/dt = AΦ from e_0 with DOP853, sampled at the requested times."""
    times = _validate_times(times)
    hop = hopping if hopping is not None else hopping_matrix(chain)
    e0 = np.zeros(hop.dim)
    e0[0] = 1.0

    if times[-1] == 0.0:
        phi = np.tile(e0, (times.size, 1))
    else:
        sol = solve_ivp(
            lambda _t, y: hop.matvec(y),
            (0.0, float(times[-1])),
            e0,
            method="DOP853",
            t_eval=times,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            last_good = float(sol.t[-1]) if sol.t.size else 0.0
            raise IntegrationError(f"DOP853 failed: {sol.message}", last_good)
        phi = sol.y.T

    logger.debug(f"[dynamics] ode D={hop.dim} samples={times.size} t_max={times[-1]:.6g}")
    return _trajectory(times, phi, hop, "ode")


def _spectral_dense(b: np.ndarray, times: np.ndarray) -> np.ndarray:
    D = b.size + 1
    try:
        evals, evecs = eigh_tridiagonal(np.zeros(D), b)
    except (LinAlgError, ValueError) as exc:
        raise KrylovError(f"[dynamics] tridiagonal eigensolver failed for D={D}: {exc}") from exc
    # (e^{-iLt})_{n0} = sum_k v[n,k] e^{-i w_k t} v[0,k]
    column = (np.exp(-1j * np.outer(times, evals)) * evecs[0]) @ evecs.T
    amplitudes = column * _I_POWERS[np.arange(D) % 4]
    residual = float(np.max(np.abs(amplitudes.imag)))
    if residual > PHASE_TOL:
        raise InvariantViolation("spectral_phase", f"imaginary residual {residual:.3e} after removing i^n")
    return amplitudes.real


def _spectral_sparse(hop: HoppingMatrix, times: np.ndarray) -> np.ndarray:
    generator = hop.sparse()
    e0 = np.zeros(hop.dim)
    e0[0] = 1.0
    steps = np.diff(times)
    if times.size > 1 and np.allclose(steps, steps[0], rtol=1e-12, atol=0.0):
        return expm_multiply(generator, e0, start=times[0], stop=times[-1], num=times.size, endpoint=True)
    phi = np.empty((times.size, hop.dim))
    current = expm_multiply(generator * times[0], e0) if times[0] > 0 else e0
    phi[0] = current
    for k, dt in enumerate(steps, start=1):
        current = expm_multiply(generator * dt, current)
        phi[k] = current
    return phi


def evolve_spectral(chain: LanczosChain, times: Any) -> AmplitudeTrajectory:
    """Exact Φ(t) = e^{tA} e_0 through the tridiagonal eigendecomposition of the Lanczos matrix.

    Above SPECTRAL_DENSE_MAX levels the sparse Krylov exponential is used instead.
    """
    times = _validate_times(times)
    hop = hopping_matrix(chain)
    D = hop.dim
    if D == 1:
        phi = np.ones((times.size, 1))
    elif D <= SPECTRAL_DENSE_MAX:
        phi = _spectral_dense(hop.coefficients, times)
    else:
        logger.debug(f"[dynamics] D={D} above spectral_dense_max={SPECTRAL_DENSE_MAX}, using expm_multiply")
        phi = _spectral_sparse(hop, times)
    return _trajectory(times, phi, hop, "spectral")
