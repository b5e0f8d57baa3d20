import contextlib
import io
import itertools
import json

from behave import given, when, then

from icdkit.algebra import make_algebra
from icdkit.cli import execute
from icdkit.morphism import compose, is_deterministic
from icdkit.power import ExchangeableFamily, family_check, permutation_morphism, product_power_family, projection
from icdkit.serialization import encode_family
from icdkit.states import pure_state

M2 = make_algebra([2])


@given('the degree {n:d} power of the algebra with blocks {blocks}')
def step_impl(context, n, blocks):
    context.base = make_algebra([int(b) for b in blocks.split(",")])
    context.degree = n


@when('I compose the permutation morphisms of every pair of permutations')
def step_impl(context):
    a, n = context.base, context.degree
    perms = list(itertools.permutations(range(n)))
    context.morphisms = {sigma: permutation_morphism(a, n, sigma) for sigma in perms}
    context.composites = []
    for sigma, tau in itertools.product(perms, repeat=2):
        composed = tuple(sigma[tau[k]] for k in range(n))
        lhs = compose(context.morphisms[sigma], context.morphisms[tau])
        context.composites.append(((sigma, tau), lhs, context.morphisms[composed]))


@then('every composite equals the morphism of the composed permutation')
def step_impl(context):
    for pair, lhs, rhs in context.composites:
        assert lhs.residual(rhs) <= 1e-12, f"{pair}: residual {lhs.residual(rhs):.3e}"


@then('every permutation morphism is deterministic')
def step_impl(context):
    for sigma, phi in context.morphisms.items():
        assert is_deterministic(phi), f"permutation {sigma} is not deterministic"


@when('I project onto every pair of slots and then onto one of them')
def step_impl(context):
    a, n = context.base, context.degree
    context.composites = []
    for pair in itertools.combinations(range(n), 2):
        outer = projection(a, n, pair)
        for j in range(2):
            lhs = compose(projection(a, 2, [j]), outer)
            context.composites.append(((pair, j), lhs, projection(a, n, [pair[j]])))


@then('every composite equals the direct projection onto the remaining slot')
def step_impl(context):
    for key, lhs, rhs in context.composites:
        assert lhs.residual(rhs) <= 1e-12, f"{key}: residual {lhs.residual(rhs):.3e}"


@given('the product power family of a pure state on M2 up to degree {n:d}')
def step_impl(context, n):
    context.family = product_power_family(pure_state(M2, [1, 0]), max_degree=n)


@given('a family on M2 whose degree 2 state is the product power of the orthogonal pure state')
def step_impl(context):
    up = product_power_family(pure_state(M2, [1, 0]), max_degree=2)
    down = product_power_family(pure_state(M2, [0, 1]), max_degree=2)
    context.family = ExchangeableFamily(up.base, up.side, up.states[:2] + (down.states[2],))


@when('I check the family')
def step_impl(context):
    context.family_report = family_check(context.family, context.settings.tol)


@then('the family is exchangeable')
def step_impl(context):
    assert context.family_report.exchangeable, context.family_report.rows


@then('the family is consistent')
def step_impl(context):
    assert context.family_report.consistent, context.family_report.rows


@then('the family is not consistent')
def step_impl(context):
    assert not context.family_report.consistent, context.family_report.rows


@then('the consistency residual at degree {n:d} is {value:g}')
def step_impl(context, n, value):
    got = context.family_report.rows[n]["consistency_residual"]
    assert abs(got - value) <= 1e-12, f"consistency residual {got}"


@when('I run the power check subcommand on the family')
def step_impl(context):
    argv = ["power", "check", "--family", json.dumps(encode_family(context.family))]
    with contextlib.redirect_stdout(io.StringIO()), contextlib.redirect_stderr(io.StringIO()) as err:
        context.exit_code, context.report = execute(argv, context.settings)
    context.stderr = err.getvalue()
