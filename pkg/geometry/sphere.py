import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.interpolate import CubicSpline

from core.errors import InputError, InvariantViolation
from core.logger import logger
from krylov.dynamics import AmplitudeTrajectory
from krylov.lanczos import LanczosChain

SPEED_RTOL: float = 1e-9
CURVATURE_RTOL: float = 1e-7
TORSION_RTOL: float = 1e-6
BOUND_ATOL: float = 1e-9
CLIP_WARN: float = 1e-12
CLIP_MAX: float = 1e-9


class FrenetSeries(BaseModel):
    """A per-sample Frenet quantity next to its closed form. NaN series when undefined."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    series: np.ndarray
    closed_form: float
    defined: bool = True
    flag: str | None = None

    @property
    def max_relative_deviation(self) -> float:
        if not self.defined:
            return float("nan")
        scale = max(abs(self.closed_form), 1e-300)
        return float(np.max(np.abs(self.series - self.closed_form)) / scale)


class ReturnAmplitude(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    margin: np.ndarray
    theta: np.ndarray
    bound: np.ndarray  # b_1 t
    max_clip: float


class GeometryReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    b1: float
    speed_series: np.ndarray
    arc_length: float
    curvature_series: np.ndarray
    curvature_closed_form: float
    curvature_defined: bool
    torsion_series: np.ndarray
    torsion_closed_form: float
    torsion_defined: bool
    acceleration_sq_series: np.ndarray
    geodesic_residual_series: np.ndarray
    geodesic_chain: bool
    bound_times: np.ndarray
    theta_series: np.ndarray
    bound_margin_series: np.ndarray
    max_clip: float
    flags: list[str] = []

    def assert_invariants(self) -> None:
        b1 = self.b1
        speed_dev = float(np.max(np.abs(self.speed_series - b1)))
        if speed_dev > SPEED_RTOL * b1:
            raise InvariantViolation("constant_speed", f"max |v_K - b_1| = {speed_dev:.3e} with b_1 = {b1:.6g}")
        if self.bound_margin_series.size and self.bound_margin_series.min() < -BOUND_ATOL:
            raise InvariantViolation(
                "return_amplitude_bound", f"min phi_0 - cos(b_1 t) = {self.bound_margin_series.min():.3e}"
            )
        if self.bound_times.size and np.any(self.theta_series > b1 * self.bound_times + BOUND_ATOL):
            raise InvariantViolation("geodesic_distance", "theta(t) exceeds b_1 t")
        if self.max_clip > CLIP_MAX:
            raise InvariantViolation("arccos_clip", f"phi_0 left [-1, 1] by {self.max_clip:.3e}")
        if self.curvature_defined:
            dev = float(np.max(np.abs(self.curvature_series - self.curvature_closed_form)))
            if dev > CURVATURE_RTOL * self.curvature_closed_form:
                raise InvariantViolation(
                    "curvature", f"max |kappa - {self.curvature_closed_form:.9g}| = {dev:.3e}"
                )
            accel = (b1**2 * self.curvature_closed_form) ** 2
            accel_dev = float(np.max(np.abs(self.acceleration_sq_series - accel)))
            if accel_dev > 1e-8 * accel:
                raise InvariantViolation("acceleration_norm", f"max |phi''|^2 deviation {accel_dev:.3e}")
        if self.torsion_defined:
            dev = float(np.max(np.abs(self.torsion_series - self.torsion_closed_form)))
            if dev > TORSION_RTOL * max(self.torsion_closed_form, self.curvature_closed_form):
                raise InvariantViolation("torsion", f"max ||tau| - {self.torsion_closed_form:.9g}| = {dev:.3e}")


def krylov_speed(traj: AmplitudeTrajectory) -> np.ndarray:
    return np.sqrt(np.sum(traj.dphi**2, axis=1))


def arc_length(traj: AmplitudeTrajectory, t0: float, t1: float) -> float:
    """Integral of the speed over [t0, t1] by cubic-spline quadrature on the sample grid."""
    times = traj.times
    if not times[0] <= t0 <= t1 <= times[-1]:
        raise InputError(f"arc-length window [{t0}, {t1}] is outside the trajectory range [{times[0]}, {times[-1]}]")
    if t0 == t1:
        return 0.0
    if times.size < 2:
        raise InputError("arc length needs at least two samples")
    return float(CubicSpline(times, krylov_speed(traj)).integrate(t0, t1))


def _gram_terms(traj: AmplitudeTrajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v1, v2 = traj.dphi, traj.d2phi
    n1 = np.sum(v1 * v1, axis=1)
    n2 = np.sum(v2 * v2, axis=1)
    cross2 = np.clip(n1 * n2 - np.sum(v1 * v2, axis=1) ** 2, 0.0, None)
    return n1, n2, cross2


def curvature_closed_form(chain: LanczosChain) -> float:
    b1, b2 = chain.b(1), chain.b(2)
    return float(np.sqrt(1.0 + (b2 / b1) ** 2)) if b1 > 0 else float("nan")


def torsion_closed_form(chain: LanczosChain) -> float:
    """b_2 b_3 / (b_1 sqrt(b_1^2 + b_2^2)); equal to b_2 b_3 / (b_1^2 sqrt(...)) at b_1 = 1."""
    b1, b2, b3 = chain.b(1), chain.b(2), chain.b(3)
    if b1 <= 0 or chain.dim_krylov < 3:
        return float("nan")
    return float(b2 * b3 / (b1 * np.sqrt(b1**2 + b2**2)))


def frenet_curvature(traj: AmplitudeTrajectory, chain: LanczosChain) -> FrenetSeries:
    if chain.b1 <= 0:
        logger.warning("[geometry] curvature undefined for a stationary chain (b_1 = 0)")
        return FrenetSeries(
            series=np.full(traj.times.size, np.nan), closed_form=float("nan"), defined=False, flag="b1_zero"
        )
    n1, _, cross2 = _gram_terms(traj)
    return FrenetSeries(series=np.sqrt(cross2) / n1**1.5, closed_form=curvature_closed_form(chain))


def frenet_torsion(traj: AmplitudeTrajectory, chain: LanczosChain) -> FrenetSeries:
    """|τ| = sqrt(det G) / (|Φ'|²|Φ''|² - (Φ'·Φ'')²) with G the Gram matrix of (Φ', Φ'', Φ''')."""
    undefined = np.full(traj.times.size, np.nan)
    if chain.dim_krylov < 3 or chain.b1 <= 0:
        return FrenetSeries(series=undefined, closed_form=float("nan"), defined=False, flag="planar_motion")
    _, _, cross2 = _gram_terms(traj)
    if np.any(cross2 <= 0.0):
        logger.warning("[geometry] degenerate Gram matrix (kappa = 0): torsion undefined")
        return FrenetSeries(series=undefined, closed_form=float("nan"), defined=False, flag="degenerate_gram")
    frame = np.stack([traj.dphi, traj.d2phi, traj.d3phi], axis=1)
    gram = frame @ frame.transpose(0, 2, 1)
    det = np.clip(np.linalg.det(gram), 0.0, None)
    return FrenetSeries(series=np.sqrt(det) / cross2, closed_form=torsion_closed_form(chain))


def geodesic_residual(traj: AmplitudeTrajectory, chain: LanczosChain) -> np.ndarray:
    return np.linalg.norm(traj.d2phi + chain.b1**2 * traj.phi, axis=1)


def is_geodesic_chain(chain: LanczosChain) -> bool:
    """A² = -b_1² I on the chain: b_n² + b_{n+1}² = b_1² on every level and no next-nearest couplings."""
    b = np.concatenate([[0.0], chain.coefficients, [0.0]])
    b1sq = chain.b1**2
    diagonal = b[:-1] ** 2 + b[1:] ** 2
    couplings = b[1:-1][:-1] * b[1:-1][1:]
    scale = max(b1sq, 1e-300)
    return bool(np.all(np.abs(diagonal - b1sq) <= 1e-12 * scale) and np.all(np.abs(couplings) <= 1e-12 * scale))


def angular_steps(chain: LanczosChain) -> np.ndarray:
    """θ_m = b_1 / b_m, the angle swept while hopping from level m-1 to m."""
    if chain.b1 <= 0:
        return np.empty(0)
    return chain.b1 / chain.coefficients


def return_amplitude_check(traj: AmplitudeTrajectory, chain: LanczosChain) -> ReturnAmplitude:
    """φ_0(t) - cos(b_1 t) and θ(t) = arccos φ_0(t) on the first quarter period."""
    b1 = chain.b1
    mask = b1 * traj.times <= np.pi / 2
    times = traj.times[mask]
    phi0 = traj.phi[mask, 0]
    clip = float(np.max(np.abs(phi0) - 1.0, initial=0.0))
    if clip > CLIP_WARN:
        logger.warning(f"[geometry] arccos argument clipped by {clip:.3e}")
    return ReturnAmplitude(
        times=times,
        margin=phi0 - np.cos(b1 * times),
        theta=np.arccos(np.clip(phi0, -1.0, 1.0)),
        bound=b1 * times,
        max_clip=clip,
    )


def geometry_report(traj: AmplitudeTrajectory, chain: LanczosChain) -> GeometryReport:
    curvature = frenet_curvature(traj, chain)
    torsion = frenet_torsion(traj, chain)
    ret = return_amplitude_check(traj, chain)
    flags = [f.flag for f in (curvature, torsion) if f.flag]
    length = arc_length(traj, traj.times[0], traj.times[-1]) if traj.times.size > 1 else 0.0
    return GeometryReport(
        times=traj.times,
        b1=chain.b1,
        speed_series=krylov_speed(traj),
        arc_length=length,
        curvature_series=curvature.series,
        curvature_closed_form=curvature.closed_form,
        curvature_defined=curvature.defined,
        torsion_series=torsion.series,
        torsion_closed_form=torsion.closed_form,
        torsion_defined=torsion.defined,
        acceleration_sq_series=np.sum(traj.d2phi**2, axis=1),
        geodesic_residual_series=geodesic_residual(traj, chain),
        geodesic_chain=is_geodesic_chain(chain),
        bound_times=ret.times,
        theta_series=ret.theta,
        bound_margin_series=ret.margin,
        max_clip=ret.max_clip,
        flags=flags,
    )
