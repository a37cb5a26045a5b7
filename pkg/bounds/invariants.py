from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import schur

from core.errors import InputError, InvariantViolation
from core.logger import logger
from bounds.light_cone import (
    TAIL_ATOL,
    FrontSource,
    geometric_front_series,
    operator_norm_velocity,
    peak_front,
    tail_envelope_check,
)
from krylov.dynamics import AmplitudeTrajectory, hopping_matrix
from krylov.lanczos import LanczosChain

GROWTH_RTOL: float = 1e-6
EVEN_MOMENT_RTOL: float = 1e-8
ODD_MOMENT_ATOL: float = 1e-12
INVARIANT_RTOL: float = 1e-8
COMMUTING_RTOL: float = 1e-10
RATIO_CEILING: float = 10.0
BLOCK_TOL: float = 1e-12


class ComplexitySeries(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    complexity: np.ndarray
    variance: np.ndarray  # ΔC, the standard deviation of n
    rate: np.ndarray  # dC/dt = 2 Σ n φ_n φ'_n


class ComplexityFrontRatio(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    ratio: np.ndarray
    front: np.ndarray
    flagged: np.ndarray  # front = 0 while C > 0


class MomentDrift(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    order: int
    values: np.ndarray  # Φᵀ A^k Φ per sample
    drift: float  # relative drift for even k, scaled magnitude for odd k
    liouvillian_moment: float | None = None  # (-1)^{k/2} Φᵀ A^k Φ at the first sample, even k only

    @property
    def even(self) -> bool:
        return self.order % 2 == 0

    def assert_invariants(self) -> None:
        limit = EVEN_MOMENT_RTOL if self.even else ODD_MOMENT_ATOL
        if self.drift > limit:
            kind = "relative drift" if self.even else "scaled magnitude"
            raise InvariantViolation(f"moment_order_{self.order}", f"{kind} {self.drift:.3e} exceeds {limit:.0e}")


class InvariantSpec(BaseModel):
    """How to build a quadratic form I.

    polynomial: I = Σ_k c_k (A²)^k. canonical: c_k on the k-th 2×2 rotation block, fastest first.
    identity: I = 1. diagonal: I = diag(n), the complexity operator (not conserved in general).
    """

    kind: Literal["polynomial", "canonical", "identity", "diagonal"] = "polynomial"
    coefficients: list[float] = Field(default_factory=lambda: [0.0, -1.0])
    zero_coefficient: float = 0.0
    merge_rtol: float = 1e-8


class QuadraticInvariant(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: str
    matrix: np.ndarray
    commutator_norm: float
    value_series: np.ndarray
    rotation_rates: np.ndarray
    merged_blocks: int = 0
    flags: list[str] = []
    hopping_norm: float = 1.0

    @property
    def commutes(self) -> bool:
        scale = np.linalg.norm(self.matrix, 2) * self.hopping_norm
        return self.commutator_norm <= COMMUTING_RTOL * max(scale, 1e-300)

    @property
    def drift(self) -> float:
        if self.value_series.size == 0:
            return 0.0
        reference = self.value_series[0]
        scale = max(abs(reference), 1e-12 * float(np.linalg.norm(self.matrix, 2)), 1e-300)
        return float(np.max(np.abs(self.value_series - reference)) / scale)

    def assert_invariants(self) -> None:
        if self.commutes and self.drift > INVARIANT_RTOL:
            raise InvariantViolation(f"quadratic_invariant_{self.kind}", f"relative drift {self.drift:.3e}")


class BoundsReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    v_op: float
    tail_margin_min: float
    front_geometric: np.ndarray
    front_peak: np.ndarray
    complexity_series: np.ndarray
    complexity_variance: np.ndarray
    complexity_rate: np.ndarray
    growth_rate_margin_series: np.ndarray
    growth_rate_margin: float
    growth_rate_tolerance: np.ndarray
    complexity_ratio_series: np.ndarray
    ratio_flagged: np.ndarray

    def assert_invariants(self, ratio_ceiling: float | None = RATIO_CEILING) -> None:
        if self.tail_margin_min < -TAIL_ATOL:
            raise InvariantViolation("tail_envelope", f"tail margin {self.tail_margin_min:.3e}")
        if np.any(self.growth_rate_margin_series < -self.growth_rate_tolerance):
            raise InvariantViolation("growth_rate", f"min margin 2 b_1 dC - |C'| = {self.growth_rate_margin:.3e}")
        if np.any(np.diff(self.front_geometric) < 0):
            raise InvariantViolation("front_monotone", "geometric front decreased in time")
        if ratio_ceiling is not None and np.max(self.complexity_ratio_series, initial=0.0) > ratio_ceiling:
            raise InvariantViolation(
                "complexity_front_ratio",
                f"C / front reaches {self.complexity_ratio_series.max():.3f} above {ratio_ceiling}",
            )


def krylov_complexity(traj: AmplitudeTrajectory) -> ComplexitySeries:
    n = np.arange(traj.dim, dtype=float)
    weights = traj.phi**2
    c = weights @ n
    variance = np.sqrt(np.clip(np.sum(weights * (n[None, :] - c[:, None]) ** 2, axis=1), 0.0, None))
    rate = 2.0 * np.sum(n * traj.phi * traj.dphi, axis=1)
    return ComplexitySeries(complexity=c, variance=variance, rate=rate)


def growth_rate_tolerance(b1: float, variance: np.ndarray) -> np.ndarray:
    return GROWTH_RTOL * max(b1, 1e-300) * (1.0 + variance)


def growth_rate_bound_check(traj: AmplitudeTrajectory, chain: LanczosChain) -> np.ndarray:
    """2 b_1 ΔC - |dC/dt| per sample."""
    series = krylov_complexity(traj)
    return 2.0 * chain.b1 * series.variance - np.abs(series.rate)


def complexity_front_ratio(
    traj: AmplitudeTrajectory,
    chain: LanczosChain,
    front_source: FrontSource | None = None,
) -> ComplexityFrontRatio:
    """C(t) / max(1, n(t)) with the harmonic-sum front. Not bounded by 1; the front omits O(1) prefactors."""
    c = krylov_complexity(traj).complexity
    front = geometric_front_series(chain if front_source is None else front_source, traj.times)
    flagged = (front == 0) & (c > 0)
    if np.any(flagged):
        logger.debug(f"[bounds] front = 0 with C > 0 at {int(flagged.sum())} samples")
    return ComplexityFrontRatio(ratio=c / np.maximum(1, front), front=front, flagged=flagged)


def moment_conservation(
    traj: AmplitudeTrajectory,
    chain: LanczosChain,
    orders: tuple[int, ...] = (1, 2, 3, 4, 5, 6),
) -> list[MomentDrift]:
    """Φᵀ A^k Φ over time: constant for even k, zero for odd k."""
    if any(k < 1 for k in orders):
        raise InputError(f"moment orders must be positive, got {orders}")
    hop = hopping_matrix(chain)
    scale = max(operator_norm_velocity(chain), 1.0)
    values: dict[int, np.ndarray] = {}
    power = traj.phi
    for k in range(1, max(orders) + 1):
        power = hop.matvec(power)
        values[k] = np.sum(traj.phi * power, axis=1)

    results = []
    for k in orders:
        series = values[k]
        if k % 2 == 0:
            reference = series[0]
            drift = float(np.max(np.abs(series - reference)) / max(abs(reference), 1e-300)) if reference else 0.0
            moment = float((-1) ** (k // 2) * reference)
        else:
            drift = float(np.max(np.abs(series)) / scale**k)
            moment = None
        results.append(MomentDrift(order=k, values=series, drift=drift, liouvillian_moment=moment))
    return results


def _canonical_blocks(a: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int, float]]]:
    """Real Schur form of the skew matrix A: orthogonal Z and blocks (start, size, rate)."""
    t, z = schur(a, output="real")
    scale = max(float(np.max(np.abs(a))), 1e-300)
    blocks = []
    i = 0
    D = a.shape[0]
    while i < D:
        if i + 1 < D and abs(t[i + 1, i]) > BLOCK_TOL * scale:
            rate = float(np.sqrt(abs(t[i, i + 1] * t[i + 1, i])))
            blocks.append((i, 2, rate))
            i += 2
        else:
            blocks.append((i, 1, 0.0))
            i += 1
    return z, blocks


def build_commuting_invariant(
    chain: LanczosChain,
    spec: InvariantSpec,
    traj: AmplitudeTrajectory | None = None,
) -> QuadraticInvariant:
    a = hopping_matrix(chain).dense()
    D = a.shape[0]
    flags: list[str] = []
    merged = 0
    rates = np.empty(0)

    if spec.kind == "identity":
        matrix = np.eye(D)
    elif spec.kind == "diagonal":
        matrix = np.diag(np.arange(D, dtype=float))
    elif spec.kind == "polynomial":
        a2 = a @ a
        matrix = np.zeros((D, D))
        power = np.eye(D)
        for coeff in spec.coefficients:
            matrix += coeff * power
            power = power @ a2
    else:
        z, blocks = _canonical_blocks(a)
        rotations = sorted((blk for blk in blocks if blk[1] == 2), key=lambda blk: -blk[2])
        rates = np.array([blk[2] for blk in rotations])
        coeffs = list(spec.coefficients[: len(rotations)])
        if len(coeffs) < len(rotations):
            logger.warning(
                f"[invariants] {len(rotations)} rotation blocks but {len(spec.coefficients)} coefficients; "
                f"padding with {spec.zero_coefficient}"
            )
            coeffs += [spec.zero_coefficient] * (len(rotations) - len(coeffs))
        top = rates[0] if rates.size else 1.0
        for k in range(1, len(rotations)):
            if abs(rates[k - 1] - rates[k]) <= spec.merge_rtol * top:
                coeffs[k] = coeffs[k - 1]
                merged += 1
        if merged:
            flags.append("merged_degenerate_blocks")
            logger.warning(f"[invariants] merged {merged} near-degenerate rotation block(s)")

        diag = np.full(D, spec.zero_coefficient)
        for (start, size, _), coeff in zip(rotations, coeffs):
            diag[start : start + size] = coeff
        matrix = (z * diag) @ z.T
        matrix = 0.5 * (matrix + matrix.T)

    commutator = float(np.linalg.norm(a @ matrix - matrix @ a, 2)) if D > 1 else 0.0
    values = np.einsum("ti,ij,tj->t", traj.phi, matrix, traj.phi) if traj is not None else np.empty(0)
    return QuadraticInvariant(
        kind=spec.kind,
        matrix=matrix,
        commutator_norm=commutator,
        value_series=values,
        rotation_rates=rates,
        merged_blocks=merged,
        flags=flags,
        hopping_norm=float(np.linalg.norm(a, 2)) if D > 1 else 0.0,
    )


def bounds_report(
    traj: AmplitudeTrajectory,
    chain: LanczosChain,
    front_source: FrontSource | None = None,
) -> BoundsReport:
    tail = tail_envelope_check(traj, chain)
    complexity = krylov_complexity(traj)
    margin = 2.0 * chain.b1 * complexity.variance - np.abs(complexity.rate)
    ratio = complexity_front_ratio(traj, chain, front_source)
    return BoundsReport(
        times=traj.times,
        v_op=operator_norm_velocity(chain),
        tail_margin_min=tail.tail_margin_min,
        front_geometric=ratio.front,
        front_peak=peak_front(traj),
        complexity_series=complexity.complexity,
        complexity_variance=complexity.variance,
        complexity_rate=complexity.rate,
        growth_rate_margin_series=margin,
        growth_rate_margin=float(margin.min()),
        growth_rate_tolerance=growth_rate_tolerance(chain.b1, complexity.variance),
        complexity_ratio_series=ratio.ratio,
        ratio_flagged=ratio.flagged,
    )
