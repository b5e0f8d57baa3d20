from behave import given, when, then

from tests.steps.icd_test_utils import SAMPLE_BLOCKS
from icdkit.algebra import make_algebra
from icdkit.morphism import (
    choi_matrix, compose, find_kadison_schwarz_violation, is_compatible, kadison_schwarz_gap, product_map,
    random_cpu_map, tensor, transpose_map,
)

# Commutative domains make every pair of maps into them compatible
CLASSICAL_BLOCKS = ([1], [1, 1], [1, 1, 1])


def _algebra(context, layouts=SAMPLE_BLOCKS):
    return make_algebra(layouts[int(context.rng.integers(0, len(layouts)))])


@given('{count:d} seeded triples of random CPU maps')
def step_impl(context, count):
    context.triples = []
    for _ in range(count):
        a, b, c = _algebra(context, CLASSICAL_BLOCKS), _algebra(context), _algebra(context)
        phi = random_cpu_map(a, b, context.rng)
        psi = random_cpu_map(b, c, context.rng)
        chi = random_cpu_map(a, c, context.rng)
        context.triples.append((phi, psi, chi))


@when('I compose, tensor and pair them')
def step_impl(context):
    context.built = []
    for phi, psi, chi in context.triples:
        assert is_compatible(phi, chi, 1e-8), "maps out of a commutative algebra must be compatible"
        context.built.extend([compose(psi, phi), tensor(phi, psi), product_map(phi, chi)])


@then('every Choi matrix has minimum eigenvalue at least -1e-8')
def step_impl(context):
    worst = min(choi_matrix(m).min_eigenvalue() for m in context.built)
    assert worst >= -1e-8, f"Choi minimum eigenvalue {worst:.3e}"


@given('{count:d} seeded random pairs of a CPU map and an element')
def step_impl(context, count):
    context.pairs = []
    for _ in range(count):
        phi = random_cpu_map(_algebra(context), _algebra(context), context.rng)
        context.pairs.append((phi, phi.cod.random_element(context.rng)))


@then('every Kadison-Schwarz gap is at least -1e-8')
def step_impl(context):
    for phi, x in context.pairs:
        gap = kadison_schwarz_gap(phi, x)
        assert gap >= -1e-8, f"Kadison-Schwarz gap {gap:.3e} for {phi}"


@given('the transpose map on M2')
def step_impl(context):
    context.phi = transpose_map(make_algebra([2]))


@then('a Kadison-Schwarz violation witness is found')
def step_impl(context):
    found = find_kadison_schwarz_violation(context.phi)
    assert found is not None, "transpose should violate Kadison-Schwarz"
    x, gap = found
    assert gap < 0 and kadison_schwarz_gap(context.phi, x) == gap
