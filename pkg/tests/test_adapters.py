import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from adapters.base import ModelSpec, load_model_spec
from adapters.constant_adapter import ConstantAdapter
from adapters.meixner_adapter import MeixnerAdapter
from adapters.registry import (
    ADAPTER_REGISTRY,
    get_adapter,
    model_amplitudes,
    model_chain,
    model_coefficients,
    model_peak_prediction,
)
from bounds.light_cone import peak_index
from core.errors import InputError
from krylov.dynamics import evolve_spectral
from krylov.lanczos import build_chain
from operators.liouvillian import Liouvillian

TRANSVERSE = [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)]


class TestModelSpec(unittest.TestCase):

    def test_unknown_family(self):
        """Families outside the registry fail validation."""
        with self.assertRaises(ValidationError):
            ModelSpec(family="ising")
        with self.assertRaises(InputError):
            get_adapter("ising")

    def test_positive_parameters(self):
        """alpha, b, omega and eta must be positive."""
        with self.assertRaises(ValidationError):
            ModelSpec(family="coherent", alpha=-1.0)

    def test_missing_parameter(self):
        """A family asks for the parameters it needs."""
        with self.assertRaises(InputError):
            model_coefficients(ModelSpec(family="meixner", alpha=1.0), 1)

    def test_load_from_mapping(self):
        """Specs load from a mapping and reject bad payloads as input errors."""
        self.assertEqual(load_model_spec({"family": "constant_b", "b": 2.0}).b, 2.0)
        with self.assertRaises(InputError):
            load_model_spec({"family": "constant_b", "b": 0.0})

    def test_registry_families(self):
        """Every family is registered under its own name."""
        for name, adapter in ADAPTER_REGISTRY.items():
            self.assertEqual(adapter.family, name)


class TestQubitFamilies(unittest.TestCase):

    def test_pipeline_reproduces_coefficients(self):
        """Lanczos on the adapter Hamiltonian gives b = (omega, h)."""
        for omega, h in TRANSVERSE:
            spec = ModelSpec(family="qubit_transverse", omega=omega, h=h)
            adapter = get_adapter(spec.family)
            chain = build_chain(Liouvillian(hamiltonian=adapter.hamiltonian(spec)), adapter.seed(spec))
            expected = [model_coefficients(spec, n) for n in range(1, chain.dim_krylov)]
            assert_allclose(chain.coefficients, expected, atol=1e-10)
            assert_allclose(chain.coefficients, [omega, h], atol=1e-10)

    def test_pipeline_reproduces_amplitudes(self):
        """Evolving the Lanczos chain gives the closed-form amplitudes."""
        times = np.linspace(0.0, 10.0, 101)
        for omega, h in TRANSVERSE:
            spec = ModelSpec(family="qubit_transverse", omega=omega, h=h)
            adapter = get_adapter(spec.family)
            chain = build_chain(Liouvillian(hamiltonian=adapter.hamiltonian(spec)), adapter.seed(spec))
            closed = np.array([adapter.signed_amplitudes(spec, t) for t in times])
            assert_allclose(evolve_spectral(chain, times).phi, closed, atol=1e-8)

    def test_qubit_z(self):
        """qubit_z is the two-level rotation."""
        spec = ModelSpec(family="qubit_z", omega=2.0)
        adapter = get_adapter("qubit_z")
        chain = build_chain(Liouvillian(hamiltonian=adapter.hamiltonian(spec)), adapter.seed(spec))
        assert_allclose(chain.coefficients, [2.0], atol=1e-10)
        assert_allclose(model_amplitudes(spec, 0.25), np.abs([np.cos(0.5), np.sin(0.5)]))

    def test_zero_field_drops_a_level(self):
        """h = 0 leaves a two-level chain."""
        spec = ModelSpec(family="qubit_transverse", omega=1.0, h=0.0)
        self.assertEqual(model_amplitudes(spec, 1.0).size, 2)
        self.assertEqual(model_chain(spec, 1.0).dim_krylov, 2)

    def test_negative_time(self):
        """Model amplitudes need t >= 0."""
        with self.assertRaises(InputError):
            model_amplitudes(ModelSpec(family="qubit_z", omega=1.0), -1.0)


class TestSemiInfiniteFamilies(unittest.TestCase):

    def test_meixner_matches_chain(self):
        """Closed-form Meixner amplitudes match the truncated chain evolution."""
        spec = ModelSpec(family="meixner", alpha=1.0, eta=2.0)
        chain = model_chain(spec, horizon=2.0, tail_tol=1e-20)
        for t in (0.5, 1.0, 2.0):
            closed = get_adapter("meixner").signed_amplitudes(spec, t)
            evolved = evolve_spectral(chain, [t]).phi[0]
            n = min(closed.size, evolved.size)
            assert_allclose(evolved[:n], closed[:n], atol=1e-8)

    def test_meixner_complexity_and_norm(self):
        """Occupations sum to one with mean eta sinh^2(alpha t)."""
        spec = ModelSpec(family="meixner", alpha=0.7, eta=3.0)
        adapter = MeixnerAdapter()
        p = adapter.amplitudes(spec, 1.5) ** 2
        self.assertAlmostEqual(p.sum(), 1.0, places=10)
        self.assertAlmostEqual(p @ np.arange(p.size), adapter.complexity(spec, 1.5), places=8)

    def test_meixner_peak(self):
        """The finite-t saddle tracks the observed peak within a factor of two."""
        for eta in (2.0, 3.0):
            spec = ModelSpec(family="meixner", alpha=1.0, eta=eta)
            for at in (2.0, 3.0, 4.0):
                observed = peak_index(model_amplitudes(spec, at))
                predicted = model_peak_prediction(spec, at).value
                self.assertLessEqual(max(observed / predicted, predicted / observed), 2.0)

    def test_meixner_flat_occupations_flagged(self):
        """eta <= 1 has no interior peak and is flagged."""
        prediction = model_peak_prediction(ModelSpec(family="meixner", alpha=1.0, eta=1.0), 1.0)
        self.assertTrue(prediction.flagged)

    def test_coherent_matches_chain(self):
        """Poisson amplitudes match the b_n = alpha sqrt(n) chain."""
        spec = ModelSpec(family="coherent", alpha=1.5)
        chain = model_chain(spec, horizon=3.0, tail_tol=1e-20)
        closed = get_adapter("coherent").signed_amplitudes(spec, 3.0)
        evolved = evolve_spectral(chain, [3.0]).phi[0]
        n = min(closed.size, evolved.size)
        assert_allclose(evolved[:n], closed[:n], atol=1e-8)
        self.assertEqual(model_peak_prediction(spec, 2.0).value, 9.0)

    def test_constant_b_image_solution(self):
        """The truncated constant-b chain matches (n+1) J_{n+1}(2bt) / (bt)."""
        spec = ModelSpec(family="constant_b", b=1.0)
        adapter = ConstantAdapter()
        phi = adapter.signed_amplitudes(spec, 3.0)
        assert_allclose(phi, adapter.image_solution(spec, 3.0, phi.size), atol=1e-8)
        assert_allclose(adapter.image_solution(spec, 0.0, 3), [1.0, 0.0, 0.0])

    def test_doubly_infinite_form_fails_boundary(self):
        """The bulk Bessel solution misses the n = 0 equation by b |J_1(2bt)|."""
        spec = ModelSpec(family="constant_b", b=1.0)
        self.assertGreater(ConstantAdapter().doubly_infinite_boundary_residual(spec, 1.0), 0.5)

    def test_no_peak_prediction(self):
        """constant_b has no peak prediction."""
        with self.assertRaises(InputError):
            model_peak_prediction(ModelSpec(family="constant_b", b=1.0), 1.0)

    def test_coefficients_start_at_one(self):
        """b_0 is not a Lanczos coefficient."""
        with self.assertRaises(InputError):
            model_coefficients(ModelSpec(family="coherent", alpha=1.0), 0)


if __name__ == "__main__":
    unittest.main()
