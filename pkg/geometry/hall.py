import numpy as np
from pydantic import BaseModel, ConfigDict

from core.config import EPS_OCCUPATION
from core.errors import InputError, InvariantViolation, KrylovError
from core.logger import logger
from krylov.dynamics import AmplitudeTrajectory
from krylov.lanczos import LanczosChain

PRODUCT_TOL: float = 1e-8
CLASSICAL_TOL: float = 1e-10

_MINUS_I_POWERS = np.array([1.0, -1.0j, -1.0, 1.0j])


class HallReport(BaseModel):
    """Exact uncertainty equality δ_L · ΔL_nc = 1/2, evaluated per sample."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    delta_L_nc: np.ndarray
    delta_functional: np.ndarray
    delta_functional_raw: np.ndarray
    product: np.ndarray
    classical_part_norm: float
    raw_vs_closed_gap: float
    max_mean_generator: float
    skipped_levels: int

    @property
    def max_product_deviation(self) -> float:
        return float(np.max(np.abs(self.product - 0.5)))

    def assert_invariants(self) -> None:
        if self.max_product_deviation > PRODUCT_TOL:
            raise InvariantViolation("hall_equality", f"max |product - 1/2| = {self.max_product_deviation:.3e}")
        if self.classical_part_norm > CLASSICAL_TOL:
            raise InvariantViolation("classical_part", f"classical diagonal reaches {self.classical_part_norm:.3e}")
        if self.raw_vs_closed_gap > PRODUCT_TOL:
            raise InvariantViolation("hall_routes", f"raw vs closed relative gap {self.raw_vs_closed_gap:.3e}")


def _apply_lanczos(b: np.ndarray, c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[..., 1:] += b * c[..., :-1]
    out[..., :-1] += b * c[..., 1:]
    return out


def hall_check(
    traj: AmplitudeTrajectory,
    chain: LanczosChain,
    eps_occupation: float = EPS_OCCUPATION,
) -> HallReport:
    """Both routes to δ_L in the Krylov basis, from c_n = (-i)^n φ_n and the Lanczos matrix.

    Closed route: δ^-2 = 4 Σ φ'_n². Raw route: Σ (i[L,ϱ])_nn² / ϱ_nn over levels with
    ϱ_nn >= eps_occupation, with skipped levels contributing their limit 4 φ'_n².
    """
    if chain.b1 <= 0:
        raise InputError("Hall functional is undefined for a stationary operator (b_1 = 0)")
    b = chain.coefficients
    phi = traj.phi
    c = phi * _MINUS_I_POWERS[np.arange(phi.shape[1]) % 4]
    lc = _apply_lanczos(b, c)

    mean = np.sum(c.conj() * lc, axis=1)
    spread = np.sqrt(np.clip(np.sum(np.abs(lc) ** 2, axis=1) - np.abs(mean) ** 2, 0.0, None))

    closed = 1.0 / (2.0 * np.sqrt(np.sum(traj.dphi**2, axis=1)))

    weighted = lc * c.conj()
    commutator_diag = -2.0 * weighted.imag
    classical_diag = weighted.real
    occupation = phi**2
    occupied = occupation >= eps_occupation
    if not np.all(occupied.any(axis=1)):
        raise KrylovError("[hall] no occupied Krylov level at some sample; amplitude vector is not normalized")

    safe = np.where(occupied, occupation, 1.0)
    fisher = np.where(occupied, commutator_diag**2 / safe, 4.0 * traj.dphi**2).sum(axis=1)
    raw = 1.0 / np.sqrt(fisher)
    classical = np.where(occupied, np.abs(classical_diag) / safe, 0.0)

    skipped = int(np.count_nonzero(~occupied))
    if skipped:
        logger.debug(f"[hall] {skipped} (level, sample) pairs below eps_occupation={eps_occupation:.1e}")

    return HallReport(
        times=traj.times,
        delta_L_nc=spread,
        delta_functional=closed,
        delta_functional_raw=raw,
        product=closed * spread,
        classical_part_norm=float(classical.max()),
        raw_vs_closed_gap=float(np.max(np.abs(raw - closed) / closed)),
        max_mean_generator=float(np.max(np.abs(mean))),
        skipped_levels=skipped,
    )
