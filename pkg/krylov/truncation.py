from typing import Callable

import numpy as np

from core.config import TAIL_TOL, TRUNCATION_CAP
from core.errors import InputError, TruncationCapExceeded
from core.logger import logger
from krylov.dynamics import evolve_spectral
from krylov.lanczos import LanczosChain, chain_from_coefficients

BRule = Callable[[int], float]

INITIAL_LEVELS: int = 32
BUFFER_FRACTION: float = 0.1
HORIZON_SAMPLES: int = 65


def realize_coefficients(generator: BRule, levels: int) -> np.ndarray:
    """b_1 .. b_{levels-1} from a rule, stopped at the first zero."""
    b = np.empty(max(levels - 1, 0))
    for n in range(1, levels):
        value = float(generator(n))
        if not np.isfinite(value) or value < 0:
            raise InputError(f"b-rule returned {value} at n={n}; coefficients must be finite and non-negative")
        if value == 0.0:
            return b[: n - 1]
        b[n - 1] = value
    return b


def buffer_mass(phi: np.ndarray) -> float:
    """Largest amplitude mass over the grid in the last 10% of levels."""
    width = max(1, int(np.ceil(BUFFER_FRACTION * phi.shape[1])))
    return float(np.max(np.sum(phi[:, -width:] ** 2, axis=1)))


def truncated_chain(
    generator: BRule,
    tail_tol: float = TAIL_TOL,
    horizon: float = 1.0,
    cap: int = TRUNCATION_CAP,
    samples: int = HORIZON_SAMPLES,
) -> LanczosChain:
    """Finite cut of a semi-infinite chain that is free of wall reflections up to the horizon.

    The level count doubles from 32 until the buffer mass stays below tail_tol over [0, horizon]
    and a run with twice the levels agrees on the common support.
    """
    if not np.isfinite(horizon) or horizon < 0:
        raise InputError(f"horizon must be finite and non-negative, got {horizon}")
    if not tail_tol > 0:
        raise InputError(f"tail_tol must be positive, got {tail_tol}")
    if horizon == 0.0:
        return chain_from_coefficients([], termination="truncated")

    grid = np.linspace(0.0, horizon, samples)
    levels = INITIAL_LEVELS
    mass = float("inf")
    while levels <= cap:
        b = realize_coefficients(generator, levels)
        if b.size < levels - 1:
            logger.debug(f"[truncation] b-rule closes the chain at D={b.size + 1}")
            return chain_from_coefficients(b)

        chain = chain_from_coefficients(b, termination="truncated")
        phi = evolve_spectral(chain, grid).phi
        mass = buffer_mass(phi)
        logger.debug(f"[truncation] N={levels} buffer mass {mass:.3e}")
        if mass < tail_tol:
            doubled = realize_coefficients(generator, 2 * levels)
            if doubled.size < 2 * levels - 1:
                return chain_from_coefficients(doubled)
            phi2 = evolve_spectral(chain_from_coefficients(doubled, termination="truncated"), grid).phi
            gap = float(np.max(np.sum((phi2[:, :levels] - phi) ** 2, axis=1)))
            logger.debug(f"[truncation] doubling check N={levels}->{2 * levels}: gap {gap:.3e}")
            if gap < 10.0 * tail_tol:
                return chain
        levels *= 2

    raise TruncationCapExceeded(cap, mass)
