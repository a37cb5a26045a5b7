import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from adapters.base import ModelSpec
from adapters.coherent_adapter import CoherentAdapter
from adapters.registry import get_adapter, model_chain
from bounds.invariants import (
    InvariantSpec,
    bounds_report,
    build_commuting_invariant,
    complexity_front_ratio,
    growth_rate_bound_check,
    growth_rate_tolerance,
    krylov_complexity,
    moment_conservation,
)
from bounds.light_cone import (
    continuum_front,
    decay_constant,
    geometric_front,
    geometric_front_series,
    operator_norm_velocity,
    peak_front,
    peak_index,
    tail_envelope_check,
)
from core.errors import InputError, InvariantViolation
from krylov.dynamics import evolve_spectral
from krylov.lanczos import chain_from_coefficients
from krylov.truncation import truncated_chain

COHERENT = ModelSpec(family="coherent", alpha=1.0)
MEIXNER = ModelSpec(family="meixner", alpha=1.0, eta=2.0)


class TestLightCone(unittest.TestCase):

    def test_decay_constant(self):
        """c* solves c ln c = c + 1."""
        c = decay_constant()
        self.assertAlmostEqual(c * np.log(c), c + 1.0, places=12)
        self.assertAlmostEqual(c, 3.5911, places=4)

    def test_operator_norm_velocity(self):
        """v_op = max_n (b_n + b_{n+1}) with zero boundaries."""
        self.assertEqual(operator_norm_velocity(chain_from_coefficients([1.0, 2.0, 3.0])), 5.0)

    def test_tail_constant_chain(self):
        """Constant b = 1 on 200 levels stays under the envelope up to t = 20."""
        chain = chain_from_coefficients(np.ones(199))
        report = tail_envelope_check(evolve_spectral(chain, np.linspace(0.0, 20.0, 81)), chain)
        self.assertGreaterEqual(report.tail_margin_min, -1e-9)
        self.assertEqual(report.v_op, 2.0)
        report.assert_invariants()

    def test_tail_floor_at_round_off(self):
        """The envelope is floored at 1e-14 and deep levels at short times sit on the floor."""
        chain = chain_from_coefficients(np.ones(199))
        report = tail_envelope_check(evolve_spectral(chain, np.linspace(0.0, 20.0, 81)), chain)
        self.assertAlmostEqual(report.log_envelope.min(), np.log(1e-14), places=12)
        self.assertGreater(report.tail_margin_min, 0.0)

    def test_tail_model_families(self):
        """Meixner and coherent chains respect the tail bound."""
        for spec, horizon in [(MEIXNER, 2.0), (COHERENT, 4.0)]:
            chain = model_chain(spec, horizon)
            report = tail_envelope_check(evolve_spectral(chain, np.linspace(0.0, horizon, 41)), chain)
            report.assert_invariants()

    def test_tail_violation(self):
        """Amplitudes above the envelope raise an invariant violation."""
        chain = chain_from_coefficients(np.ones(29))
        report = tail_envelope_check(evolve_spectral(chain, np.linspace(0.0, 5.0, 11)), chain)
        broken = report.model_copy(update={"tail_margin_min": -1.0})
        with self.assertRaises(InvariantViolation):
            broken.assert_invariants()

    def test_harmonic_front(self):
        """b_n = n gives log front(t) ~ t at alpha t = 12."""
        front = geometric_front(lambda n: float(n), 12.0)
        self.assertLessEqual(abs(np.log(front) - 12.0) / 12.0, 0.1)

    def test_coherent_front_asymptote(self):
        """b_n = sqrt(n) gives front(t) ~ t^2 / 4 at t = 40."""
        front = geometric_front(CoherentAdapter().coefficient_rule(COHERENT), 40.0)
        self.assertAlmostEqual(front / 400.0, 1.0, delta=0.1)

    def test_front_series_monotone(self):
        """The front never decreases and is zero before 1 / b_1."""
        chain = chain_from_coefficients(np.full(50, 2.0))
        series = geometric_front_series(chain, np.linspace(0.0, 10.0, 41))
        self.assertEqual(series[0], 0)
        self.assertTrue(np.all(np.diff(series) >= 0))

    def test_front_stops_at_zero(self):
        """A vanishing rule caps the reachable front."""
        self.assertEqual(geometric_front(lambda n: 1.0 if n < 4 else 0.0, 100.0), 3)

    def test_continuum_front(self):
        """The integral of dn / n from 1 to e^2 is 2."""
        self.assertAlmostEqual(continuum_front(lambda m: m, 2.0), np.exp(2.0), places=8)
        self.assertEqual(continuum_front(lambda m: m, 0.0), 1.0)
        with self.assertRaises(InputError):
            continuum_front(lambda m: m, -1.0)

    def test_constant_b_peak_front(self):
        """The constant-b peak trails 2bt within 2 + (2bt)^(1/3)."""
        chain = truncated_chain(lambda n: 1.0, horizon=10.0)
        times = np.linspace(2.0, 10.0, 33)
        peaks = peak_front(evolve_spectral(chain, times))
        self.assertTrue(np.all(np.abs(peaks - 2.0 * times) <= 2.0 + (2.0 * times) ** (1.0 / 3.0)))

    def test_peak_front_matches_peak_index(self):
        """peak_front is peak_index applied row by row."""
        chain = chain_from_coefficients(np.full(30, 1.5))
        traj = evolve_spectral(chain, np.linspace(0.0, 4.0, 9))
        self.assertEqual(peak_front(traj).tolist(), [peak_index(row) for row in traj.phi])
        self.assertEqual(int(peak_front(traj)[0]), 0)

    def test_time_rescaling(self):
        """Scaling every b_n by c is the same as running time c times faster."""
        rng = np.random.default_rng(4)
        b = rng.uniform(0.5, 2.0, size=12)
        times = np.linspace(0.0, 3.0, 31)
        fast = evolve_spectral(chain_from_coefficients(3.0 * b), times)
        slow = evolve_spectral(chain_from_coefficients(b), 3.0 * times)
        assert_allclose(fast.phi, slow.phi, atol=1e-9)

    def test_coherent_peak(self):
        """The coherent peak sits at (alpha t)^2 within one level."""
        adapter = get_adapter("coherent")
        for at in (1.0, 2.0, 3.0, 4.0):
            peak = peak_index(adapter.amplitudes(COHERENT, at))
            self.assertLessEqual(abs(peak - at**2), 1.0)


class TestComplexity(unittest.TestCase):

    def test_coherent_complexity(self):
        """C(t) = (alpha t)^2 on the truncated coherent chain."""
        chain = model_chain(COHERENT, 4.0)
        times = np.linspace(0.0, 4.0, 41)
        series = krylov_complexity(evolve_spectral(chain, times))
        assert_allclose(series.complexity, times**2, rtol=1e-6, atol=1e-12)

    def test_growth_rate_saturated_on_coherent(self):
        """2 b_1 Delta C = |dC/dt| for the coherent family."""
        chain = model_chain(COHERENT, 4.0)
        traj = evolve_spectral(chain, np.linspace(0.0, 4.0, 41))
        margin = growth_rate_bound_check(traj, chain)
        scale = np.maximum(1.0, np.abs(krylov_complexity(traj).rate))
        self.assertLessEqual(np.max(np.abs(margin) / scale), 1e-6)

    def test_growth_rate_bound_random(self):
        """The margin is non-negative on random chains."""
        rng = np.random.default_rng(21)
        for _ in range(5):
            chain = chain_from_coefficients(rng.uniform(0.3, 2.0, size=10))
            traj = evolve_spectral(chain, np.linspace(0.0, 10.0 / chain.b1, 101))
            margin = growth_rate_bound_check(traj, chain)
            tol = growth_rate_tolerance(chain.b1, krylov_complexity(traj).variance)
            self.assertTrue(np.all(margin >= -tol))

    def test_coherent_ratio(self):
        """C / front with the rule front is about 2.8 at alpha t = 6 and 4 at alpha t = 60."""
        rule = CoherentAdapter().coefficient_rule(COHERENT)
        adapter = CoherentAdapter()
        ratio_6 = adapter.complexity(COHERENT, 6.0) / geometric_front(rule, 6.0)
        ratio_60 = adapter.complexity(COHERENT, 60.0) / geometric_front(rule, 60.0)
        self.assertTrue(2.5 < ratio_6 < 3.0)
        self.assertAlmostEqual(ratio_60, 4.0, delta=0.2)

    def test_ratio_flags_empty_front(self):
        """Samples with C > 0 before the front reaches level 1 are flagged."""
        chain = chain_from_coefficients([1.0, 1.0])
        result = complexity_front_ratio(evolve_spectral(chain, [0.0, 0.5, 2.0]), chain)
        assert_allclose(result.front, [0, 0, 2])
        self.assertEqual(result.flagged.tolist(), [False, True, False])

    def test_bounds_report(self):
        """The aggregate report holds on the Meixner chain."""
        chain = model_chain(MEIXNER, 2.0)
        report = bounds_report(evolve_spectral(chain, np.linspace(0.0, 2.0, 41)), chain)
        report.assert_invariants()
        self.assertGreaterEqual(report.growth_rate_margin, -1e-6 * chain.b1 * (1 + report.complexity_variance.max()))


class TestConservedQuantities(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(8)
        self.chain = chain_from_coefficients(rng.uniform(0.5, 1.5, size=7))
        self.traj = evolve_spectral(self.chain, np.linspace(0.0, 10.0, 101))

    def test_moments(self):
        """Odd moments vanish and even moments are constant."""
        for moment in moment_conservation(self.traj, self.chain):
            moment.assert_invariants()
            if moment.order % 2:
                self.assertLessEqual(moment.drift, 1e-12)
            else:
                self.assertLessEqual(moment.drift, 1e-8)

    def test_second_moment_is_b1_squared(self):
        """(-1) Phi^T A^2 Phi = b_1^2."""
        second = moment_conservation(self.traj, self.chain, orders=(2,))[0]
        self.assertAlmostEqual(second.liouvillian_moment, self.chain.b1**2, places=12)

    def test_bad_orders(self):
        """Moment orders start at one."""
        with self.assertRaises(InputError):
            moment_conservation(self.traj, self.chain, orders=(0,))

    def test_polynomial_invariant(self):
        """I = -A^2 commutes with A and is conserved."""
        inv = build_commuting_invariant(self.chain, InvariantSpec(kind="polynomial"), self.traj)
        self.assertTrue(inv.commutes)
        self.assertLessEqual(inv.drift, 1e-8)

    def test_canonical_invariant(self):
        """A canonical-form invariant on a D = 4 chain is conserved."""
        chain = chain_from_coefficients([0.9, 1.4, 0.6])
        traj = evolve_spectral(chain, np.linspace(0.0, 10.0, 101))
        inv = build_commuting_invariant(chain, InvariantSpec(kind="canonical", coefficients=[1.0, 2.0]), traj)
        self.assertTrue(inv.commutes)
        inv.assert_invariants()
        self.assertLessEqual(inv.drift, 1e-8)

    def test_complexity_operator_not_conserved(self):
        """diag(n) does not commute with A; its expectation is the complexity."""
        inv = build_commuting_invariant(self.chain, InvariantSpec(kind="diagonal"), self.traj)
        self.assertFalse(inv.commutes)
        assert_allclose(inv.value_series, krylov_complexity(self.traj).complexity, atol=1e-12)


if __name__ == "__main__":
    unittest.main()
