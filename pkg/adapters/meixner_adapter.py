import numpy as np
from scipy.special import gammaln

from adapters.base import BaseModelAdapter, ModelSpec, PeakPrediction, geometric_tail_cut
from core.config import TAIL_TOL
from core.errors import InputError
from core.logger import logger


def _log_cosh(x: float) -> float:
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


class MeixnerAdapter(BaseModelAdapter):
    """b_n = α sqrt(n (n - 1 + η)). Occupations follow a negative binomial in tanh²(αt)."""

    family = "meixner"

    def coefficient(self, spec: ModelSpec, n: int) -> float:
        alpha, eta = spec.require("alpha", "eta")
        return float(alpha * np.sqrt(n * (n - 1 + eta)))

    def log_weights(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        """log φ_n² = log[(η)_n / n!] + 2n log tanh(αt) - 2η log cosh(αt), Pochhammer via log-gamma."""
        alpha, eta = spec.require("alpha", "eta")
        x = alpha * t
        tanh = np.tanh(x)
        log_cosh = _log_cosh(x)

        def log_weight(n: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore", invalid="ignore"):
                log_tanh_power = np.where(n == 0, 0.0, 2.0 * n * np.log(tanh))
            return gammaln(eta + n) - gammaln(eta) - gammaln(n + 1.0) + log_tanh_power - 2.0 * eta * log_cosh

        def ratio(n: np.ndarray) -> np.ndarray:
            return np.maximum((eta + n) / (n + 1.0), 1.0) * tanh**2

        mode = (eta - 1.0) * np.sinh(x) ** 2 if eta > 1 else 0.0
        return geometric_tail_cut(log_weight, ratio, start=int(np.ceil(mode)) + 1, tail_tol=tail_tol)

    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        return np.exp(0.5 * self.log_weights(spec, t, tail_tol))

    def complexity(self, spec: ModelSpec, t: float) -> float:
        """Negative-binomial mean η sinh²(αt)."""
        alpha, eta = spec.require("alpha", "eta")
        return float(eta * np.sinh(alpha * t) ** 2)

    def peak_prediction(self, spec: ModelSpec, t: float) -> PeakPrediction:
        """Saddle -(η-1) / (2 ln tanh αt) and its large-t form (η-1)/4 e^{2αt}."""
        if not t > 0:
            raise InputError(f"peak prediction needs t > 0, got {t}")
        alpha, eta = spec.require("alpha", "eta")
        saddle = -(eta - 1.0) / (2.0 * np.log(np.tanh(alpha * t)))
        asymptote = (eta - 1.0) / 4.0 * np.exp(2.0 * alpha * t)
        if eta <= 1:
            logger.warning(f"[models] meixner eta={eta} <= 1: occupations decrease monotonically, no interior peak")
            return PeakPrediction(
                value=float(saddle), asymptote=float(asymptote), flagged=True, note="eta <= 1: saddle non-positive"
            )
        return PeakPrediction(value=float(saddle), asymptote=float(asymptote))
