import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from icdkit.algebra import make_algebra, tensor_element
from icdkit.errors import (
    NonCommutativeError, PolynomialSyntaxError, ShapeMismatchError, UnresolvedGeneratorError,
)
from icdkit.morphism import random_cpu_map, transpose_map
from icdkit.states import pure_state
from icdkit.statespace import (
    CommPoly, FreeStarPoly, Letter, abelianize, delta_collapse, delta_collapse_tensor, evaluate_comm, laxator,
    monomials, named_basis, natural_residual, parse_comm_poly, phi_natural, samp, separating_monomial, to_text,
)

M2 = make_algebra([2])
C2 = make_algebra([1, 1])
C3 = make_algebra([1, 1, 1])


class TestFreeLayer(unittest.TestCase):

    def test_words_do_not_commute(self):
        xy, yx = FreeStarPoly.word("x", "y"), FreeStarPoly.word("y", "x")
        self.assertNotEqual(xy, yx)
        self.assertEqual(samp("x") * samp("y"), xy)

    def test_star_reverses_and_conjugates(self):
        p = 2j * FreeStarPoly.word("x", "y")
        expected = -2j * FreeStarPoly({(Letter("y", True), Letter("x", True)): 1})
        self.assertEqual(p.star(), expected)
        self.assertEqual(p.star().star(), p)

    def test_normal_form_order(self):
        p = FreeStarPoly.word("y") + FreeStarPoly.word("x", "x") + 3 + FreeStarPoly.word("x")
        words = [w for w, _ in p]
        self.assertEqual(words, [(), (Letter("x"),), (Letter("y"),), (Letter("x"), Letter("x"))])
        self.assertEqual(p.degree, 2)
        self.assertEqual(p.generators(), ["x", "y"])

    def test_cancellation(self):
        p = FreeStarPoly.word("x") - FreeStarPoly.word("x")
        self.assertTrue(p.is_zero())
        self.assertEqual(len(p), 0)

    def test_delta_collapse_multiplies_out(self):
        gens = {"x": M2.matrix_unit(0, 0, 1), "y": M2.matrix_unit(0, 1, 0)}
        self.assertTrue(delta_collapse(FreeStarPoly.word("x", "y"), gens).allclose(M2.matrix_unit(0, 0, 0)))
        self.assertTrue(delta_collapse(FreeStarPoly.word("y", "x"), gens).allclose(M2.matrix_unit(0, 1, 1)))
        # x^* = y
        self.assertTrue(delta_collapse(FreeStarPoly.letter("x", True), gens).allclose(gens["y"]))
        self.assertTrue(delta_collapse(FreeStarPoly.constant(2), gens).allclose(2 * M2.unit()))

    def test_delta_collapse_is_a_star_homomorphism(self):
        rng = np.random.default_rng(0)
        gens = {"x": M2.random_element(rng), "y": M2.random_element(rng)}
        p = (1 + 2j) * FreeStarPoly.word("x", "y") + FreeStarPoly.letter("y", True)
        q = FreeStarPoly.word("y") - 0.5 * FreeStarPoly.word("x", "x")
        self.assertTrue(delta_collapse(p * q, gens).allclose(delta_collapse(p, gens) @ delta_collapse(q, gens), 1e-10))
        self.assertTrue(delta_collapse(p.star(), gens).allclose(delta_collapse(p, gens).star(), 1e-10))

    def test_unresolved_generator(self):
        with self.assertRaises(UnresolvedGeneratorError):
            delta_collapse(FreeStarPoly.word("z"), {"x": M2.unit()})
        with self.assertRaises(UnresolvedGeneratorError):
            delta_collapse(FreeStarPoly.word("z"), {})

    def test_laxator_splits_pair_words(self):
        rng = np.random.default_rng(1)
        a = {n: M2.random_element(rng) for n in ("x1", "x2")}
        b = {n: C3.random_element(rng) for n in ("y1", "y2")}
        t = laxator(FreeStarPoly.word("z1", "z2"), {"z1": ("x1", "y1"), "z2": ("x2", "y2")})
        got = delta_collapse_tensor(t, a, b)
        expected = tensor_element(a["x1"], b["y1"]) @ tensor_element(a["x2"], b["y2"])
        self.assertTrue(got.allclose(expected, 1e-10))
        with self.assertRaises(UnresolvedGeneratorError):
            laxator(FreeStarPoly.word("z3"), {"z1": ("x1", "y1")})


class TestCommutativeLayer(unittest.TestCase):

    def test_abelianization_forgets_order(self):
        commutator = FreeStarPoly.word("x", "y") - FreeStarPoly.word("y", "x")
        self.assertFalse(commutator.is_zero())
        self.assertTrue(abelianize(commutator).is_zero())

    def test_sample_products_differ_only_in_the_free_layer(self):
        """samp(x) samp(y) and samp(y) samp(x) are different words with the same abelianization."""
        lhs, rhs = samp("x") * samp("y"), samp("y") * samp("x")
        self.assertNotEqual(lhs, rhs)
        self.assertEqual(abelianize(lhs), abelianize(rhs))
        self.assertEqual(abelianize(lhs), CommPoly.ev("x") * CommPoly.ev("y"))

    def test_abelianize_is_multiplicative(self):
        p = FreeStarPoly.word("x", "y") + 2
        q = FreeStarPoly.letter("x", True) - FreeStarPoly.word("y")
        self.assertEqual(abelianize(p * q), abelianize(p) * abelianize(q))
        self.assertEqual(abelianize(p.star()), abelianize(p).star())

    def test_powers_and_degree(self):
        p = (CommPoly.ev("x") + 1) ** 3
        self.assertEqual(p.degree, 3)
        self.assertEqual(len(p), 4)
        self.assertAlmostEqual(dict(p.terms)[(Letter("x"), Letter("x"))], 3)

    def test_evaluation_on_a_state(self):
        psi = pure_state(M2, [1, 1])
        p = CommPoly.ev("e1_12") * CommPoly.ev("e1_12", True)
        self.assertAlmostEqual(evaluate_comm(p, psi), 0.25)
        self.assertAlmostEqual(evaluate_comm(CommPoly.ev("1") * 3, psi), 3)

    def test_named_basis(self):
        names = named_basis(make_algebra([1, 2]))
        self.assertEqual(sorted(names), ["1", "e1_11", "e2_11", "e2_12", "e2_21", "e2_22"])
        self.assertIn("e1_10_10", named_basis(make_algebra([10])))

    def test_monomials(self):
        self.assertEqual(len(monomials(["x", "y"], 2)), 6)
        self.assertEqual(len(monomials(["x"], 2, starred=True)), 6)


class TestNaturalMap(unittest.TestCase):

    def test_images_are_pointwise_products(self):
        rng = np.random.default_rng(2)
        phi = random_cpu_map(C3, M2, rng)
        nat = phi_natural(phi)
        x, y = "e1_12", "e1_21"
        got = nat(CommPoly.ev(x) * CommPoly.ev(y))
        expected = phi.apply(M2.matrix_unit(0, 0, 1)).vector() * phi.apply(M2.matrix_unit(0, 1, 0)).vector()
        np.testing.assert_allclose(got.vector(), expected, atol=1e-12)

    def test_natural_residual_vanishes(self):
        phi = random_cpu_map(C2, M2, np.random.default_rng(3))
        nat = phi_natural(phi)
        polys = monomials(["e1_11", "e1_12"], 3, starred=True)
        self.assertLess(natural_residual(nat, polys), 1e-12)

    def test_noncommutative_target_rejected(self):
        with self.assertRaises(NonCommutativeError):
            phi_natural(transpose_map(M2))

    def test_generators_must_live_in_the_source(self):
        phi = random_cpu_map(C2, M2, np.random.default_rng(4))
        with self.assertRaises(ShapeMismatchError):
            phi_natural(phi, {"x": C2.unit()})

    def test_separating_monomial(self):
        rng = np.random.default_rng(5)
        phi, psi = random_cpu_map(C2, M2, rng), random_cpu_map(C2, M2, rng)
        self.assertIsNone(separating_monomial(phi, phi))
        found = separating_monomial(phi, psi)
        self.assertIsNotNone(found)
        self.assertEqual(found.degree, 1)


class TestTextSyntax(unittest.TestCase):

    def test_parse_mixed_polynomial(self):
        p = parse_comm_poly("2.0*ev[x1]*ev[x2] + i*ev[x3]^2 - 0.5*ev*[x1]")
        expected = 2 * CommPoly.ev("x1") * CommPoly.ev("x2") + 1j * CommPoly.ev("x3") ** 2 \
            - 0.5 * CommPoly.ev("x1", True)
        self.assertEqual(p, expected)
        self.assertEqual(p.generators(), ["x1", "x2", "x3"])

    def test_imaginary_literals_and_groups(self):
        self.assertEqual(parse_comm_poly("2j*(ev[a] + 1)"), 2j * CommPoly.ev("a") + 2j)
        self.assertEqual(parse_comm_poly("-ev[a]^0"), CommPoly.constant(-1))

    def test_printed_form_reads_back(self):
        p = (0.25 - 1.5j) * CommPoly.ev("x") ** 2 * CommPoly.ev("y", True) - 3 + 1e-3j * CommPoly.ev("y")
        self.assertEqual(parse_comm_poly(to_text(p)), p)
        self.assertEqual(to_text(CommPoly.zero()), "0")
        self.assertEqual(parse_comm_poly("0"), CommPoly.zero())
        self.assertEqual(to_text(CommPoly.ev("x") ** 2), "1*ev[x]^2")

    def test_syntax_errors_carry_columns(self):
        cases = (("2*ev[x] +", 10), ("ev[x] $", 7), ("ev[x]^y", 7), ("ev[ ]", 1), ("(ev[x]", 7))
        for text, col in cases:
            with self.assertRaises(PolynomialSyntaxError, msg=text) as ctx:
                parse_comm_poly(text)
            self.assertEqual(ctx.exception.column, col, text)


if __name__ == '__main__':
    unittest.main()
