import numpy as np
from scipy.special import jv

from adapters.base import BaseModelAdapter, ModelSpec
from core.config import TAIL_TOL
from krylov.dynamics import evolve_spectral
from krylov.truncation import truncated_chain


class ConstantAdapter(BaseModelAdapter):
    """b_n = b for every n. The amplitudes come from evolving a truncated chain."""

    family = "constant_b"

    def coefficient(self, spec: ModelSpec, n: int) -> float:
        (b,) = spec.require("b")
        return b

    def signed_amplitudes(self, spec: ModelSpec, t: float, tail_tol: float = TAIL_TOL) -> np.ndarray:
        chain = truncated_chain(self.coefficient_rule(spec), tail_tol=tail_tol, horizon=t)
        return evolve_spectral(chain, [t]).phi[0]

    def image_solution(self, spec: ModelSpec, t: float, levels: int) -> np.ndarray:
        """Semi-infinite solution J_n(2bt) + J_{n+2}(2bt) = (n+1) J_{n+1}(2bt) / (bt)."""
        (b,) = spec.require("b")
        n = np.arange(levels)
        if t == 0:
            return (n == 0).astype(float)
        return (n + 1) * jv(n + 1, 2.0 * b * t) / (b * t)

    def doubly_infinite_boundary_residual(self, spec: ModelSpec, t: float) -> float:
        """|dψ_0/dt + b ψ_1| for ψ_n = J_n(2bt): the bulk Bessel form misses the n = 0 equation by b J_1(2bt)."""
        (b,) = spec.require("b")
        return float(abs(b * jv(1, 2.0 * b * t)))
