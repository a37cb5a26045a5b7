import numpy as np

from adapters.base import BaseModelAdapter, ModelSpec, PeakPrediction
from adapters.coherent_adapter import CoherentAdapter
from adapters.constant_adapter import ConstantAdapter
from adapters.meixner_adapter import MeixnerAdapter
from adapters.qubit_adapter import QubitTransverseAdapter, QubitZAdapter
from core.config import TAIL_TOL
from core.errors import InputError
from core.logger import logger
from krylov.lanczos import LanczosChain, chain_from_coefficients
from krylov.truncation import realize_coefficients, truncated_chain

ADAPTER_REGISTRY: dict[str, BaseModelAdapter] = {
    "qubit_z":          QubitZAdapter(),
    "qubit_transverse": QubitTransverseAdapter(),
    "constant_b":       ConstantAdapter(),
    "meixner":          MeixnerAdapter(),
    "coherent":         CoherentAdapter(),
}

# qubit chains close after at most three levels
_FINITE_LEVELS: int = 4


def get_adapter(family: str) -> BaseModelAdapter:
    adapter = ADAPTER_REGISTRY.get(family)
    if adapter is None:
        raise InputError(
            f"unknown model family '{family}'. Registered families: {', '.join(sorted(ADAPTER_REGISTRY))}"
        )
    return adapter


def model_coefficients(spec: ModelSpec, n: int) -> float:
    if n < 1:
        raise InputError(f"Lanczos coefficients start at n = 1, got {n}")
    return get_adapter(spec.family).coefficient(spec, n)


def model_amplitudes(spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
    """|φ_n(t)|, truncated where the remaining mass falls below tail_tol."""
    return get_adapter(spec.family).amplitudes(spec, t, tail_tol)


def model_peak_prediction(spec: ModelSpec, t: float) -> PeakPrediction:
    return get_adapter(spec.family).peak_prediction(spec, t)


def model_chain(spec: ModelSpec, horizon: float, tail_tol: float = TAIL_TOL) -> LanczosChain:
    """Exact chain for finite families, a doubling-verified truncation for semi-infinite ones."""
    adapter = get_adapter(spec.family)
    rule = adapter.coefficient_rule(spec)
    if not adapter.semi_infinite:
        return chain_from_coefficients(realize_coefficients(rule, _FINITE_LEVELS))
    chain = truncated_chain(rule, tail_tol=tail_tol, horizon=horizon)
    logger.info(f"[models] {spec.family} truncated at N={chain.dim_krylov} for horizon {horizon:.6g}")
    return chain
