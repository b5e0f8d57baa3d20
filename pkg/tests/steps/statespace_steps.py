from behave import given, then

from tests.steps.icd_test_utils import SAMPLE_BLOCKS
from icdkit.algebra import make_algebra
from icdkit.morphism import random_cpu_map
from icdkit.statespace import FreeStarPoly, Letter, abelianize, monomials, natural_residual, phi_natural

SOURCE_BLOCKS = SAMPLE_BLOCKS + ([1, 1, 1], [1, 1, 2], [2, 1])
NAMES = ("x", "y", "z")


@given('{count:d} seeded CPU maps into a commutative algebra of dimension at most {m:d}')
def step_impl(context, count, m):
    context.maps = []
    for _ in range(count):
        target = make_algebra([1] * int(context.rng.integers(1, m + 1)))
        source = make_algebra(SOURCE_BLOCKS[int(context.rng.integers(0, len(SOURCE_BLOCKS)))])
        assert source.dim <= 9
        context.maps.append(random_cpu_map(target, source, context.rng))


@then('the natural map residual on all monomials of degree at most {d:d} is at most {tol:g}')
def step_impl(context, d, tol):
    for phi in context.maps:
        nat = phi_natural(phi)
        value = natural_residual(nat, monomials(nat.generators, d))
        assert value <= tol, f"natural map residual {value:.3e} for {phi}"


def _random_poly(rng) -> FreeStarPoly:
    terms = {}
    for _ in range(int(rng.integers(1, 4))):
        word = tuple(Letter(NAMES[int(rng.integers(0, 3))], bool(rng.integers(0, 2)))
                     for _ in range(int(rng.integers(0, 4))))
        terms[word] = complex(int(rng.integers(-5, 6)), int(rng.integers(-5, 6)))
    return FreeStarPoly(terms)


@given('{count:d} random pairs of free star polynomials with integer coefficients')
def step_impl(context, count):
    context.commutators = []
    for _ in range(count):
        p, q = _random_poly(context.rng), _random_poly(context.rng)
        context.commutators.append(p * q - q * p)


@then('the abelianization of every commutator is exactly zero')
def step_impl(context):
    for c in context.commutators:
        assert abelianize(c).is_zero(), f"abelianized commutator {abelianize(c)} is not zero"


@then('the free commutators are not all zero')
def step_impl(context):
    assert any(not c.is_zero() for c in context.commutators), "sampled polynomials all commute"
