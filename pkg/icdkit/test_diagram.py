import itertools
import sys
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from icdkit.algebra import make_algebra, star
from icdkit.diagram import (
    Comp, Copy, EvenOddMorphism, Gen, Generator, Id, Invo, Parity, Signature, Tensor, check_axioms, evaluate, parse,
    qcd_apply, qcd_compose, qcd_involution, qcd_star, qcd_tensor, qcd_unwrap, qcd_wrap, terms_equal, to_source,
    tokenize, type_of,
)
from icdkit.errors import (
    DiagramSyntaxError, DiagramTypeError, ParityError, ShapeMismatchError, UnknownIdentifierError,
)
from icdkit.morphism import (
    UMap, compose, copy, delete, identity, involution, product_map, random_cpu_map, swap, tensor,
)

M2 = make_algebra([2])
C2 = make_algebra([1, 1])


def signature(rng=None) -> Signature:
    rng = np.random.default_rng(0) if rng is None else rng
    return Signature(
        objects={"A": M2, "B": C2},
        generators={
            "f": Generator(("A",), ("B",), random_cpu_map(M2, C2, rng)),
            "g": Generator(("B",), ("A", "B"), random_cpu_map(C2, make_algebra([2, 2]), rng)),
        },
    )


def jordan_copy(a) -> UMap:
    """op: x (x) y -> (xy + yx)/2, a non-associative comultiplication."""
    flipped = compose(swap(a, a), copy(a))
    return UMap(a, flipped.cod, (copy(a).op_matrix + flipped.op_matrix) / 2)


class TestParser(unittest.TestCase):

    def setUp(self):
        self.sig = signature()

    def test_terms_and_types(self):
        term = parse("copy[A] ; f ⊗ f", self.sig)
        self.assertEqual(term, Comp(Tensor(Gen("f"), Gen("f")), Copy(("A",))))
        self.assertEqual(type_of(term, self.sig), (("A",), ("B", "B")))

    def test_sequence_associates_left(self):
        term = parse("id[A] ; f ; id[B]", self.sig)
        self.assertEqual(term, Comp(Id(("B",)), Comp(Gen("f"), Id(("A",)))))

    def test_ascii_tensor_alias(self):
        self.assertEqual(parse("f (x) f", self.sig), parse("f ⊗ f", self.sig))
        self.assertEqual(parse("id[A (x) B]", self.sig), Id(("A", "B")))

    def test_unit_object_disappears(self):
        self.assertEqual(parse("id[I]", self.sig), Id(()))
        self.assertEqual(type_of(parse("del[A] ; id[I]", self.sig), self.sig), (("A",), ()))
        self.assertEqual(parse("id[A ⊗ I]", self.sig), Id(("A",)))

    def test_round_trip_through_source(self):
        sources = [
            "copy[A] ; f ⊗ f",
            "inv(g) ; swap[A, B]",
            "(f ⊗ id[B]) ; (id[B] ⊗ del[B])",
            "copy[A ⊗ B] ; id[A ⊗ B] ⊗ del[A ⊗ B]",
        ]
        for src in sources:
            term = parse(src, self.sig)
            self.assertEqual(parse(to_source(term), self.sig), term, src)

    def test_type_error_position(self):
        with self.assertRaises(DiagramTypeError) as ctx:
            parse("f ; f", self.sig)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (1, 3))
        self.assertIn("B", str(ctx.exception))

    def test_multiline_positions(self):
        with self.assertRaises(DiagramTypeError) as ctx:
            parse("copy[A]\n  ; f", self.sig)
        self.assertEqual((ctx.exception.line, ctx.exception.column), (2, 3))

    def test_unknown_identifiers(self):
        with self.assertRaises(UnknownIdentifierError) as ctx:
            parse("h", self.sig)
        self.assertEqual(ctx.exception.column, 1)
        with self.assertRaises(UnknownIdentifierError) as ctx:
            parse("id[Z]", self.sig)
        self.assertEqual(ctx.exception.column, 4)

    def test_syntax_errors(self):
        for src, col in (("f ;", 4), ("f $", 3), ("copy A", 1), ("(f", 3), ("f f", 3)):
            with self.assertRaises(DiagramSyntaxError, msg=src) as ctx:
                parse(src, self.sig)
            self.assertEqual(ctx.exception.column, col, src)

    def test_tokens(self):
        kinds = [t.kind for t in tokenize("swap[A,B];inv(f)")]
        self.assertEqual(kinds, ["ident", "[", "ident", ",", "ident", "]", ";", "ident", "(", "ident", ")", "eof"])

    def test_reserved_names_rejected(self):
        with self.assertRaises(DiagramSyntaxError):
            Signature(objects={"copy": M2})
        with self.assertRaises(DiagramSyntaxError):
            Signature(objects={"I": M2})

    def test_generator_map_must_match_wires(self):
        with self.assertRaises(ShapeMismatchError):
            Signature(objects={"A": M2, "B": C2},
                      generators={"f": Generator(("B",), ("A",), random_cpu_map(M2, C2, np.random.default_rng(1)))})
        with self.assertRaises(UnknownIdentifierError):
            Signature(objects={"A": M2},
                      generators={"f": Generator(("A",), ("Z",), identity(M2))})


class TestEvaluation(unittest.TestCase):

    def setUp(self):
        self.sig = signature()
        self.f = self.sig.generators["f"].map
        self.g = self.sig.generators["g"].map

    def test_evaluation_matches_direct_construction(self):
        self.assertTrue(evaluate(parse("copy[A] ; f ⊗ f", self.sig), self.sig).allclose(product_map(self.f, self.f)))
        got = evaluate(parse("g ; f ⊗ id[B]", self.sig), self.sig)
        self.assertTrue(got.allclose(compose(tensor(self.f, identity(C2)), self.g)))
        self.assertEqual(got.cod.blocks, (1, 1, 1, 1))

    def test_counit_law_as_terms(self):
        ok, residual = terms_equal(parse("copy[A] ; id[A] ⊗ del[A]", self.sig), parse("id[A]", self.sig), self.sig)
        self.assertTrue(ok)
        self.assertLess(residual, 1e-12)

    def test_involution_of_copy_is_swapped_copy(self):
        ok, _ = terms_equal(parse("inv(copy[A])", self.sig), parse("copy[A] ; swap[A, A]", self.sig), self.sig)
        self.assertTrue(ok)
        ok, residual = terms_equal(parse("copy[A]", self.sig), parse("copy[A] ; swap[A, A]", self.sig), self.sig)
        self.assertFalse(ok)
        self.assertGreater(residual, 0.5)

    def test_swap_is_self_inverse(self):
        ok, _ = terms_equal(parse("swap[A, B] ; swap[B, A]", self.sig), parse("id[A ⊗ B]", self.sig), self.sig)
        self.assertTrue(ok)

    def test_involution_term(self):
        got = evaluate(Invo(Gen("g")), self.sig)
        self.assertTrue(got.allclose(involution(self.g)))

    def test_equality_needs_equal_types(self):
        with self.assertRaises(DiagramTypeError):
            terms_equal(parse("f", self.sig), parse("id[A]", self.sig), self.sig)

    def test_evaluate_rechecks_types(self):
        with self.assertRaises(DiagramTypeError):
            evaluate(Comp(Gen("f"), Gen("f")), self.sig)


class TestAxioms(unittest.TestCase):

    def test_axioms_hold_on_sample_algebras(self):
        for blocks in ([1], [1, 1], [2], [1, 2], [3], [2, 2]):
            a = make_algebra(blocks)
            report = check_axioms(a)
            self.assertTrue(report.ok, (blocks, report.residuals))
            self.assertEqual(report.classical, all(n == 1 for n in blocks), blocks)

    def test_monoidal_laws_with_second_factor(self):
        report = check_axioms(M2, b=make_algebra([1, 2]))
        self.assertTrue(report.ok)
        self.assertIsNotNone(report.residuals["monoidal_copy"])

    def test_jordan_comultiplication_is_not_coassociative(self):
        cp = jordan_copy(M2)
        report = check_axioms(M2, copy_map=cp, delete_map=delete(M2))
        self.assertFalse(report.ok)
        self.assertGreater(report.residuals["coassociativity"], 1e-3)
        self.assertLess(report.residuals["counit_left"], 1e-12)
        self.assertLess(report.residuals["involution_copy"], 1e-12)
        self.assertIsNone(report.residuals["monoidal_copy"])
        # symmetric by construction
        self.assertTrue(report.classical)

    def test_custom_comonoid_type_checked(self):
        with self.assertRaises(ShapeMismatchError):
            check_axioms(M2, copy_map=identity(M2))

    def test_report_serializes(self):
        doc = check_axioms(C2).to_dict()
        self.assertEqual(set(doc), {"residuals", "classicality_residual", "classical", "ok"})


class TestEvenOdd(unittest.TestCase):

    def setUp(self):
        rng = np.random.default_rng(5)
        self.a, self.b, self.c = M2, make_algebra([1, 2]), C2
        self.phi = random_cpu_map(self.a, self.b, rng)
        self.psi = random_cpu_map(self.b, self.c, rng)
        self.x = self.c.random_element(rng)

    def test_composition_matches_sequential_application(self):
        for p, q in itertools.product(Parity, repeat=2):
            phi = EvenOddMorphism(self.phi, p)
            psi = EvenOddMorphism(self.psi, q)
            lhs = qcd_apply(qcd_compose(psi, phi), self.x)
            rhs = qcd_apply(phi, qcd_apply(psi, self.x))
            self.assertTrue(lhs.allclose(rhs, 1e-10), (p, q))
            self.assertEqual(qcd_compose(psi, phi).parity, Parity(p ^ q))

    def test_star_squares_to_identity(self):
        s = qcd_compose(qcd_star(M2), qcd_star(M2))
        self.assertEqual(s.parity, Parity.EVEN)
        self.assertTrue(qcd_unwrap(s).allclose(identity(M2)))
        y = M2.random_element(np.random.default_rng(6))
        self.assertTrue(qcd_apply(qcd_star(M2), y).allclose(star(y)))

    def test_conjugating_by_star_gives_involution(self):
        m = qcd_involution(qcd_wrap(self.phi))
        self.assertEqual(m.parity, Parity.EVEN)
        self.assertTrue(qcd_unwrap(m).allclose(involution(self.phi)))

    def test_tensor_parity(self):
        even = qcd_tensor(qcd_wrap(self.phi), qcd_wrap(self.psi))
        self.assertEqual(even.parity, Parity.EVEN)
        odd = qcd_tensor(qcd_star(M2), qcd_star(C2))
        self.assertEqual(odd.parity, Parity.ODD)
        with self.assertRaises(ParityError):
            qcd_tensor(qcd_wrap(self.phi), qcd_star(C2))

    def test_unwrap_rejects_odd(self):
        with self.assertRaises(ParityError):
            qcd_unwrap(qcd_star(M2))

    def test_wrapping_is_functorial(self):
        lhs = qcd_compose(qcd_wrap(self.psi), qcd_wrap(self.phi))
        self.assertTrue(qcd_unwrap(lhs).allclose(compose(self.psi, self.phi)))


if __name__ == '__main__':
    unittest.main()
