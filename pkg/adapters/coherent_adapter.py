import numpy as np
from scipy.special import gammaln

from adapters.base import BaseModelAdapter, ModelSpec, PeakPrediction, geometric_tail_cut
from core.config import TAIL_TOL
from core.errors import InputError


class CoherentAdapter(BaseModelAdapter):
    """b_n = α sqrt(n): a coherent state in the number basis, Poisson occupations with mean (αt)²."""

    family = "coherent"

    def coefficient(self, spec: ModelSpec, n: int) -> float:
        (alpha,) = spec.require("alpha")
        return float(alpha * np.sqrt(n))

    def log_weights(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        (alpha,) = spec.require("alpha")
        mean = (alpha * t) ** 2

        def log_weight(n: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_power = np.where(n == 0, 0.0, n * np.log(mean))
            return -mean + log_power - gammaln(n + 1.0)

        def ratio(n: np.ndarray) -> np.ndarray:
            return mean / (n + 1.0)

        return geometric_tail_cut(log_weight, ratio, start=int(np.ceil(mean)) + 1, tail_tol=tail_tol)

    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        return np.exp(0.5 * self.log_weights(spec, t, tail_tol))

    def complexity(self, spec: ModelSpec, t: float) -> float:
        (alpha,) = spec.require("alpha")
        return float((alpha * t) ** 2)

    def peak_prediction(self, spec: ModelSpec, t: float) -> PeakPrediction:
        (alpha,) = spec.require("alpha")
        if not t > 0:
            raise InputError(f"peak prediction needs t > 0, got {t}")
        return PeakPrediction(value=float((alpha * t) ** 2))
