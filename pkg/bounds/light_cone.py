from typing import Callable, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import gammaln

from core.config import AMPLITUDE_FLOOR
from core.errors import InputError, InvariantViolation
from core.logger import logger
from krylov.dynamics import AmplitudeTrajectory
from krylov.lanczos import LanczosChain

BRule = Callable[[int], float]
FrontSource = Union[LanczosChain, np.ndarray, list, BRule]

TAIL_ATOL: float = 1e-9
ONSET_LEVEL: float = 1e-3
FRONT_CHUNK: int = 4096
FRONT_MAX_LEVELS: int = 10_000_000


def decay_constant() -> float:
    """c* with c ln c = c + 1: the Stirling envelope drops below one beyond n = c* v_op t."""
    return float(brentq(lambda c: c * np.log(c) - c - 1.0, 1.5, 10.0, xtol=1e-14))


class TailReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray  # t > 0 columns only
    v_op: float
    log_envelope: np.ndarray  # (T, D), floored at log(amplitude_floor)
    margin: np.ndarray  # (T, D) log-envelope minus log|φ_n|
    tail_margin_min: float
    decay_constant: float
    stirling_onset: np.ndarray  # c* v_op t
    edge_series: np.ndarray  # empirical decay edge per sample, -1 where the wave fills the chain
    edge_ratio_series: np.ndarray  # edge / (v_op t)

    def assert_invariants(self) -> None:
        if self.tail_margin_min < -TAIL_ATOL:
            t_idx, n_idx = np.unravel_index(int(np.argmin(self.margin)), self.margin.shape)
            raise InvariantViolation(
                "tail_envelope",
                f"log|phi_{n_idx}| exceeds the envelope by {-self.tail_margin_min:.3e} at t={self.times[t_idx]:.6g}",
            )


def operator_norm_velocity(chain: LanczosChain) -> float:
    """v_op = max_n (b_n + b_{n+1}) with b_0 = b_D = 0."""
    b = np.concatenate([[0.0], chain.coefficients, [0.0]])
    return float(np.max(b[:-1] + b[1:]))


def log_tail_envelope(levels: np.ndarray, times: np.ndarray, v_op: float) -> np.ndarray:
    """n log(v t) - log n! + v t on a (t, n) grid, t > 0."""
    vt = v_op * times[:, None]
    n = levels[None, :].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_power = np.where(n == 0, 0.0, n * np.log(vt))
    return log_power - gammaln(n + 1.0) + vt


def stirling_envelope(levels: np.ndarray, times: np.ndarray, v_op: float) -> np.ndarray:
    """-n log(n / (v t)) + n + v t, the large-n form of the log-envelope."""
    vt = v_op * times[:, None]
    n = levels[None, :].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(n == 0, vt, -n * np.log(n / vt) + n + vt)


def decay_edge(amplitudes: np.ndarray, onset_level: float = ONSET_LEVEL) -> int:
    """Smallest level above the peak beyond which every |φ_n| stays below onset_level; -1 if none."""
    amplitudes = np.abs(np.asarray(amplitudes))
    peak = peak_index(amplitudes)
    above = np.flatnonzero(amplitudes[peak:] >= onset_level)
    edge = peak + (int(above[-1]) + 1 if above.size else 0)
    return edge if edge < amplitudes.size else -1


def tail_envelope_check(
    traj: AmplitudeTrajectory,
    chain: LanczosChain,
    amplitude_floor: float = AMPLITUDE_FLOOR,
    onset_level: float = ONSET_LEVEL,
) -> TailReport:
    """Margin of log|φ_n(t)| under the light-cone envelope (v_op t)^n / n! e^{v_op t}.

    The t = 0 column is skipped. The envelope is floored at amplitude_floor, below which
    amplitudes are round-off.
    """
    v_op = operator_norm_velocity(chain)
    keep = traj.times > 0
    times = traj.times[keep]
    phi = traj.phi[keep]
    levels = np.arange(traj.dim)
    c_star = decay_constant()

    if v_op == 0.0:
        log_env = np.zeros_like(phi)
    else:
        log_env = np.maximum(log_tail_envelope(levels, times, v_op), np.log(amplitude_floor))
    with np.errstate(divide="ignore"):
        margin = log_env - np.log(np.abs(phi))

    edges = np.array([decay_edge(row, onset_level) for row in phi], dtype=int)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(edges >= 0, edges / (v_op * times), np.nan)

    report = TailReport(
        times=times,
        v_op=v_op,
        log_envelope=log_env,
        margin=margin,
        tail_margin_min=float(margin.min()) if margin.size else float("inf"),
        decay_constant=c_star,
        stirling_onset=c_star * v_op * times,
        edge_series=edges,
        edge_ratio_series=ratios,
    )
    logger.debug(f"[bounds] tail margin min {report.tail_margin_min:.3e} with v_op={v_op:.6g}")
    return report


def _partial_sums_from_rule(rule: BRule, t_max: float) -> np.ndarray:
    sums: list[np.ndarray] = []
    total = 0.0
    start = 1
    while total <= t_max:
        if start > FRONT_MAX_LEVELS:
            logger.warning(f"[bounds] front still below t={t_max} after {FRONT_MAX_LEVELS} levels, capping")
            break
        b = np.array([float(rule(m)) for m in range(start, start + FRONT_CHUNK)])
        zero = np.flatnonzero(b <= 0.0)
        if zero.size:
            logger.warning(f"[bounds] b-rule vanishes at level {start + zero[0]}: higher levels unreachable")
            b = b[: zero[0]]
        chunk = total + np.cumsum(1.0 / b)
        sums.append(chunk)
        if zero.size:
            break
        total = float(chunk[-1])
        start += FRONT_CHUNK
    return np.concatenate(sums) if sums else np.empty(0)


def _partial_sums(source: FrontSource, t_max: float) -> np.ndarray:
    if callable(source):
        return _partial_sums_from_rule(source, t_max)
    b = source.coefficients if isinstance(source, LanczosChain) else np.asarray(source, dtype=float).reshape(-1)
    zero = np.flatnonzero(b <= 0.0)
    if zero.size:
        logger.warning(f"[bounds] zero coefficient at level {zero[0] + 1}: front capped below it")
        b = b[: zero[0]]
    return np.cumsum(1.0 / b)


def geometric_front_series(source: FrontSource, times: np.ndarray) -> np.ndarray:
    """Largest n with sum_{m<=n} 1/b_m <= t, for each t."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise InputError("front times must be non-negative")
    sums = _partial_sums(source, float(times.max(initial=0.0)))
    return np.searchsorted(sums, times, side="right").astype(int)


def geometric_front(source: FrontSource, t: float) -> int:
    return int(geometric_front_series(source, np.array([t]))[0])


def continuum_front(rule: Callable[[float], float], t: float) -> float:
    """Level n solving the integral of dn / b(n) from 1 to n equal to t."""
    if t < 0:
        raise InputError(f"front time must be non-negative, got {t}")
    if t == 0:
        return 1.0

    def elapsed(n: float) -> float:
        return quad(lambda m: 1.0 / rule(m), 1.0, n, limit=200)[0] - t

    upper = 2.0
    while elapsed(upper) < 0:
        upper *= 2.0
        if upper > 1e300:
            raise InputError(f"continuum front does not reach time {t}")
    return float(brentq(elapsed, 1.0, upper, xtol=1e-10, rtol=1e-12))


def peak_index(amplitudes: np.ndarray) -> int:
    """argmax φ_n², ties toward smaller n."""
    return int(np.argmax(np.abs(np.asarray(amplitudes)) ** 2))


def peak_front(traj: AmplitudeTrajectory) -> np.ndarray:
    return np.argmax(traj.phi**2, axis=1)
