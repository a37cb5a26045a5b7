import os
import sys
import unittest

import numpy as np
from numpy.testing import assert_allclose
from pydantic import ValidationError

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from core.errors import InputError
from operators.hamiltonian import (
    HermitianMatrix,
    OperatorState,
    PauliStringSum,
    load_hamiltonian,
    load_operator,
    matrix_to_payload,
    pauli_operator,
    pauli_string_matrix,
    random_hermitian,
    random_traceless_hermitian,
    realize_pauli_sum,
)
from operators.liouvillian import Liouvillian, apply_liouvillian, heisenberg_oracle, inner_product


class TestHermitianMatrix(unittest.TestCase):

    def test_accepts_hermitian(self):
        """A Hermitian matrix is stored read-only."""
        h = HermitianMatrix(entries=[[1.0, 1j], [-1j, 2.0]])
        self.assertEqual(h.dim, 2)
        self.assertFalse(h.entries.flags.writeable)

    def test_rejects_non_hermitian_with_violation(self):
        """The error message names the max Hermiticity violation."""
        with self.assertRaises(ValidationError) as ctx:
            HermitianMatrix(entries=[[0.0, 1.0], [0.0, 0.0]])
        self.assertIn("max |H - H^dagger| = 1.000e+00", str(ctx.exception))

    def test_rejects_non_square(self):
        """Rectangular input is rejected."""
        with self.assertRaises(ValidationError):
            HermitianMatrix(entries=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_scaled(self):
        """scaled() multiplies every entry."""
        h = HermitianMatrix(entries=[[1.0, 0.5], [0.5, -1.0]]).scaled(2.0)
        assert_allclose(h.entries, [[2.0, 1.0], [1.0, -2.0]])


class TestPauli(unittest.TestCase):

    def test_kron_order(self):
        """The leftmost letter acts on the most significant qubit."""
        zi = pauli_string_matrix("ZI")
        assert_allclose(np.diag(zi).real, [1, 1, -1, -1])

    def test_realize_sum(self):
        """Weighted Pauli sums realize to the dense matrix."""
        h = realize_pauli_sum(PauliStringSum(num_qubits=1, terms=[(0.5, "Z"), (0.5, "X")]))
        assert_allclose(h.entries, [[0.5, 0.5], [0.5, -0.5]])

    def test_bad_label_length(self):
        """Strings must match the qubit count."""
        with self.assertRaises(ValidationError):
            PauliStringSum(num_qubits=2, terms=[(1.0, "X")])

    def test_too_many_qubits(self):
        """Dimensions above dim_max are refused."""
        with self.assertRaises(ValidationError):
            PauliStringSum(num_qubits=7, terms=[(1.0, "XXXXXXX")])

    def test_pauli_operator_rejects_letters(self):
        """Only IXYZ are Pauli letters."""
        with self.assertRaises(InputError):
            pauli_operator("XA")


class TestOperatorState(unittest.TestCase):

    def test_normalized(self):
        """Normalization uses the trace norm."""
        x = pauli_operator("X")
        self.assertAlmostEqual(x.norm, np.sqrt(2.0))
        self.assertAlmostEqual(x.normalized().norm, 1.0)

    def test_zero_seed(self):
        """The zero operator cannot be normalized."""
        with self.assertRaises(InputError):
            OperatorState(entries=np.zeros((2, 2))).normalized()

    def test_random_traceless(self):
        """Random seeds are Hermitian and traceless."""
        rng = np.random.default_rng(3)
        o = random_traceless_hermitian(5, rng)
        self.assertTrue(o.is_hermitian())
        self.assertAlmostEqual(abs(np.trace(o.entries)), 0.0, places=12)


class TestLoaders(unittest.TestCase):

    def test_dense_payload(self):
        """Dense re/im payloads load and round-trip through matrix_to_payload."""
        payload = {"dim": 2, "re": [[1.0, 0.0], [0.0, -1.0]], "im": [[0.0, -1.0], [1.0, 0.0]]}
        h = load_hamiltonian(payload)
        assert_allclose(load_hamiltonian(matrix_to_payload(h.entries)).entries, h.entries)

    def test_dim_mismatch(self):
        """A declared dim that disagrees with the matrix is an input error."""
        with self.assertRaises(InputError):
            load_hamiltonian({"dim": 3, "re": [[1.0, 0.0], [0.0, 1.0]]})

    def test_qubit_payload(self):
        """{"qubits", "terms"} builds a Pauli-sum Hamiltonian."""
        h = load_hamiltonian({"qubits": 2, "terms": [[1.0, "ZZ"], [0.5, "XI"]]})
        self.assertEqual(h.dim, 4)

    def test_operator_label_and_mapping(self):
        """Seeds come from a label or a {"pauli": ...} mapping."""
        assert_allclose(load_operator("XZ").entries, load_operator({"pauli": "XZ"}).entries)

    def test_missing_file(self):
        """A missing path is an input error."""
        with self.assertRaises(InputError):
            load_hamiltonian("/nonexistent/hamiltonian.json")


class TestLiouvillian(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.L = Liouvillian(hamiltonian=random_hermitian(4, rng))
        self.seed = random_traceless_hermitian(4, rng).normalized()

    def test_commutator_pauli(self):
        """[Z, X] = 2iY."""
        L = Liouvillian(hamiltonian=HermitianMatrix(entries=pauli_string_matrix("Z")))
        assert_allclose(apply_liouvillian(L, pauli_operator("X")).entries, 2j * pauli_string_matrix("Y"))

    def test_liouvillian_is_hermitian(self):
        """(A|L B) = (L A|B) under the trace inner product."""
        rng = np.random.default_rng(5)
        a = random_traceless_hermitian(4, rng)
        b = random_traceless_hermitian(4, rng)
        left = inner_product(a, apply_liouvillian(self.L, b))
        right = inner_product(apply_liouvillian(self.L, a), b)
        self.assertAlmostEqual(abs(left - right), 0.0, places=10)

    def test_inner_product_values(self):
        """Bare trace: (X/sqrt2|X/sqrt2) = 1, (X|Y) = 0, (I|I) = 2."""
        x = pauli_operator("X")
        self.assertAlmostEqual(inner_product(x.normalized(), x.normalized()), 1.0, places=14)
        self.assertEqual(inner_product(x, pauli_operator("Y")), 0.0)
        self.assertEqual(inner_product(pauli_operator("I"), pauli_operator("I")), 2.0)

    def test_inner_product_conjugate_symmetric(self):
        """(A|B) = conj (B|A)."""
        rng = np.random.default_rng(3)
        a = OperatorState(entries=rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        b = OperatorState(entries=rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        self.assertAlmostEqual(inner_product(a, b), np.conj(inner_product(b, a)), places=12)

    def test_commutator_traceless_anti_hermitian(self):
        """[H, O] is traceless and anti-Hermitian for Hermitian O."""
        out = apply_liouvillian(self.L, self.seed).entries
        self.assertAlmostEqual(abs(np.trace(out)), 0.0, places=12)
        assert_allclose(out.conj().T, -out, atol=1e-12)

    def test_oracle_isometry(self):
        """Evolution keeps inner products between pairs."""
        rng = np.random.default_rng(9)
        a = random_traceless_hermitian(4, rng)
        b = random_traceless_hermitian(4, rng)
        evolved = inner_product(heisenberg_oracle(self.L, a, 2.3), heisenberg_oracle(self.L, b, 2.3))
        self.assertAlmostEqual(abs(evolved - inner_product(a, b)), 0.0, places=10)

    def test_oracle_half_turn(self):
        """H = Z/2 takes X to -X at t = pi."""
        L = Liouvillian(hamiltonian=HermitianMatrix(entries=0.5 * pauli_string_matrix("Z")))
        assert_allclose(heisenberg_oracle(L, pauli_operator("X"), np.pi).entries,
                        -pauli_string_matrix("X"), atol=1e-12)

    def test_dimension_mismatch(self):
        """Operators of different dimension are refused."""
        with self.assertRaises(InputError):
            inner_product(pauli_operator("X"), pauli_operator("XX"))
        with self.assertRaises(InputError):
            heisenberg_oracle(self.L, pauli_operator("X"), 1.0)

    def test_oracle_identity_at_zero(self):
        """O(0) = O."""
        assert_allclose(heisenberg_oracle(self.L, self.seed, 0.0).entries, self.seed.entries, atol=1e-12)

    def test_oracle_preserves_norm(self):
        """Unitary evolution keeps the trace norm."""
        self.assertAlmostEqual(heisenberg_oracle(self.L, self.seed, 3.7).norm, 1.0, places=12)

    def test_oracle_sign(self):
        """dO/dt = -i [H, O(t)], checked by central differences."""
        t, h = 0.8, 1e-5
        plus = heisenberg_oracle(self.L, self.seed, t + h).entries
        minus = heisenberg_oracle(self.L, self.seed, t - h).entries
        now = heisenberg_oracle(self.L, self.seed, t).entries
        assert_allclose((plus - minus) / (2 * h), -1j * self.L.commutator(now), atol=1e-7)


if __name__ == "__main__":
    unittest.main()
