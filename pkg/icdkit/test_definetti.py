import sys
import unittest
from pathlib import Path

import numpy as np
from hypothesis import given, seed, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent.parent))

from icdkit.algebra import kron_to_canonical, make_algebra, norm, tensor_element, tensor_elements
from icdkit.config import Settings
from icdkit.definetti import (
    PAULI, ConditionalState, MixingAtom, MixingMeasure, bloch, bloch_inverse, conditional_state,
    distinguishing_observable, extremality_identity_residual, is_pure, maximize_power_expectation, moment_matrix,
    moment_psd_check, purity, qa_seminorm, reconstruct, reconstruct_report, verify_measure, words_up_to,
)
from icdkit.errors import (
    EffectRangeError, InsufficientDegreeError, MomentSequenceError, NonCommutativeError, ShapeMismatchError,
)
from icdkit.power import family_check, family_from_top_state, mixture_family, product_power_family, tensor_power
from icdkit.states import StateOnAlgebra, classical_state, point_state, pure_state, random_state

M2 = make_algebra([2])
C2 = make_algebra([1, 1])
C3 = make_algebra([1, 1, 1])
OPT = Settings(opt_restarts=4, opt_steps=300)


def pauli(k: int):
    return M2.element([PAULI[k]])


def singlet_family():
    v = np.array([0, 1, -1, 0]) / np.sqrt(2)
    return family_from_top_state(pure_state(tensor_power(M2, 2), v), M2, 2)


def one_success_in_three():
    """Uniform over the three bit strings with exactly one coordinate in the second block."""
    top = np.zeros(8, dtype=complex)
    top[[1, 2, 4]] = 1 / 3
    state = StateOnAlgebra.from_functional(tensor_power(C2, 3), kron_to_canonical(top, [C2] * 3))
    return family_from_top_state(state, C2, 3)


class TestBloch(unittest.TestCase):

    def test_poles_are_pure(self):
        north = bloch([0, 0, 1])
        self.assertTrue(is_pure(north))
        self.assertAlmostEqual(north(pauli(2)).real, 1.0)

    @seed(50)
    @settings(max_examples=30, deadline=None)
    @given(r=st.tuples(*[st.floats(-0.57, 0.57)] * 3))
    def test_coordinates_round_trip(self, r):
        psi = bloch(r)
        np.testing.assert_allclose(bloch_inverse(psi), r, atol=1e-12)
        self.assertAlmostEqual(purity(psi), (1 + float(np.dot(r, r))) / 2)

    def test_outside_ball(self):
        with self.assertRaises(EffectRangeError):
            bloch([1, 1, 0])
        with self.assertRaises(ShapeMismatchError):
            bloch([0, 1])
        with self.assertRaises(ShapeMismatchError):
            bloch_inverse(point_state(C2, 0))

    def test_distinguishing_observable(self):
        north, south = bloch([0, 0, 1]), bloch([0, 0, -1])
        a, gap = distinguishing_observable(north, south)
        self.assertGreater(gap, 0)
        self.assertAlmostEqual((north(a) - south(a)).real, gap)
        self.assertIsNone(distinguishing_observable(north, bloch([0, 0, 1])))


class TestConditioning(unittest.TestCase):

    def setUp(self):
        self.fam = mixture_family([0.5, 0.5], [classical_state(C2, [0.2, 0.8]), classical_state(C2, [0.6, 0.4])],
                                  max_degree=3)

    def test_bayesian_update(self):
        """Observing the first block re-weights the mixture: posterior 1/4, 3/4."""
        cond = conditional_state(self.fam.state(2), C2.matrix_unit(0, 0, 0), 2)
        self.assertAlmostEqual(cond.weight, 0.4)
        self.assertAlmostEqual(cond.state(C2.matrix_unit(0, 0, 0)).real, 0.5)

    def test_conditioning_keeps_exchangeability(self):
        cond = conditional_state(self.fam.state(3), C2.matrix_unit(1, 0, 0), 3)
        expected = mixture_family([0.5 * 0.8 / 0.6, 0.5 * 0.4 / 0.6],
                                  [classical_state(C2, [0.2, 0.8]), classical_state(C2, [0.6, 0.4])],
                                  max_degree=2).state(2)
        self.assertLessEqual(cond.state.residual(expected), 1e-12)

    def test_conditional_state_record(self):
        cond = conditional_state(self.fam.state(2), C2.matrix_unit(0, 0, 0), 2)
        self.assertIsInstance(cond, ConditionalState)
        weight, state = cond
        self.assertEqual(weight, cond.weight)
        self.assertEqual(state.parent, tensor_power(C2, 1))
        self.assertAlmostEqual(sum(state.weights), 1.0)

    def test_null_event(self):
        fam = product_power_family(point_state(C2, 1), max_degree=2)
        cond = conditional_state(fam.state(2), C2.matrix_unit(0, 0, 0), 2)
        self.assertEqual(cond, ConditionalState(0.0, None))
        self.assertIsNone(cond.state)

    def test_non_positive_condition(self):
        with self.assertRaises(EffectRangeError):
            conditional_state(self.fam.state(2), -C2.unit(), 2)

    def test_extremality_identity(self):
        psi = random_state(M2, np.random.default_rng(0))
        self.assertLess(extremality_identity_residual(product_power_family(psi, max_degree=3), 2), 1e-12)
        self.assertGreater(extremality_identity_residual(self.fam, 1), 0.01)
        with self.assertRaises(InsufficientDegreeError):
            extremality_identity_residual(self.fam, 3)


class TestMomentMatrix(unittest.TestCase):

    def test_word_order(self):
        self.assertEqual(words_up_to(2, 2), [(), (0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)])

    def test_product_power_is_psd(self):
        psi = random_state(M2, np.random.default_rng(1))
        mm = moment_matrix(product_power_family(psi, max_degree=2), 1)
        self.assertEqual(mm.matrix.shape, (5, 5))
        self.assertTrue(moment_psd_check(mm))
        self.assertAlmostEqual(mm.matrix[0, 0].real, 1.0)

    def test_mixtures_are_psd(self):
        rng = np.random.default_rng(2)
        fam = mixture_family([0.3, 0.7], [random_state(M2, rng), random_state(M2, rng)], max_degree=4)
        self.assertTrue(moment_psd_check(moment_matrix(fam, 2)))

    def test_singlet_is_not_a_mixture(self):
        """Perfect anticorrelation cannot come from product powers."""
        fam = singlet_family()
        self.assertTrue(family_check(fam).exchangeable)
        mm = moment_matrix(fam, 1)
        self.assertFalse(moment_psd_check(mm))
        self.assertLessEqual(mm.min_eigenvalue, -0.99)

    def test_degree_requirement(self):
        with self.assertRaises(InsufficientDegreeError):
            moment_matrix(singlet_family(), 2)


class TestSeminorm(unittest.TestCase):

    def test_product_observable(self):
        x = tensor_element(pauli(2), pauli(2))
        res = maximize_power_expectation(x, M2, 2, OPT)
        self.assertGreater(res.value, 0.999)
        self.assertLessEqual(res.value, 1 + 1e-9)
        self.assertTrue(is_pure(res.psi, 1e-3))

    def test_product_powers_miss_the_singlet(self):
        """On the Heisenberg coupling product powers reach 1 while the norm is 3."""
        x = sum((tensor_element(pauli(k), pauli(k)) for k in (1, 2)), tensor_element(pauli(0), pauli(0)))
        value = qa_seminorm(x, M2, 2, OPT)
        self.assertAlmostEqual(value, 1.0, places=3)
        self.assertAlmostEqual(norm(x), 3.0)

    def test_side_factor(self):
        x = tensor_elements([pauli(2), C2.matrix_unit(0, 0, 0)])
        res = maximize_power_expectation(x, M2, 1, OPT, side=C2)
        self.assertGreater(res.value, 0.999)
        self.assertGreater(res.omega(C2.matrix_unit(0, 0, 0)).real, 0.99)

    def test_deterministic_for_a_seed(self):
        x = tensor_element(pauli(0), pauli(2))
        fast = Settings(opt_restarts=3, opt_steps=20)
        self.assertEqual(qa_seminorm(x, M2, 2, fast), qa_seminorm(x, M2, 2, fast))

    def test_type_checks(self):
        with self.assertRaises(ShapeMismatchError):
            qa_seminorm(pauli(2), M2, 2, OPT)
        with self.assertRaises(InsufficientDegreeError):
            qa_seminorm(M2.unit(), M2, 0, OPT)


class TestMixingMeasures(unittest.TestCase):

    def test_verify_generating_measure(self):
        rng = np.random.default_rng(3)
        atoms = [MixingAtom(0.25, random_state(M2, rng)), MixingAtom(0.75, random_state(M2, rng))]
        measure = MixingMeasure(atoms)
        fam = measure.family(3)
        self.assertLess(verify_measure(fam, measure), 1e-12)
        other = MixingMeasure([MixingAtom(1.0, atoms[0].psi)])
        self.assertGreater(verify_measure(fam, other), 1e-3)

    def test_reconstruct_two_atoms(self):
        fam = mixture_family([0.3, 0.7], [classical_state(C2, [0.2, 0.8]), classical_state(C2, [0.9, 0.1])],
                             max_degree=3)
        report = reconstruct_report(fam, 2)
        self.assertEqual(report.rank, 2)
        np.testing.assert_allclose(report.measure.weights, [0.3, 0.7], atol=1e-8)
        np.testing.assert_allclose(report.to_dict()["points"], [[0.2, 0.8], [0.9, 0.1]], atol=1e-8)
        self.assertLess(report.moment_error, 1e-8)

    def test_reconstruct_three_outcomes(self):
        psis = [classical_state(C3, [0.1, 0.3, 0.6]), classical_state(C3, [0.5, 0.25, 0.25])]
        fam = mixture_family([0.4, 0.6], psis, max_degree=3)
        measure = reconstruct(fam, 2)
        self.assertLess(verify_measure(fam, measure), 1e-6)

    def test_rank_deficient_moments(self):
        fam = product_power_family(classical_state(C2, [0.3, 0.7]), max_degree=3)
        with self.assertLogs("icdkit.definetti", level="WARNING"):
            report = reconstruct_report(fam, 2)
        self.assertEqual(report.rank, 1)
        self.assertAlmostEqual(report.measure.weights[0], 1.0)

    def test_non_moment_sequence(self):
        fam = one_success_in_three()
        self.assertTrue(family_check(fam).exchangeable)
        with self.assertRaises(MomentSequenceError):
            reconstruct(fam, 2)

    def test_reconstruction_preconditions(self):
        with self.assertRaises(NonCommutativeError):
            reconstruct(product_power_family(bloch([0, 0, 1]), max_degree=3), 1)
        with self.assertRaises(InsufficientDegreeError):
            reconstruct(product_power_family(point_state(C2, 0), max_degree=2), 2)


if __name__ == '__main__':
    unittest.main()
