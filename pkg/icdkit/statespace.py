"""
icdkit - Symbolic state-space layer

Two polynomial rings over named generators:

- FreeStarPoly: noncommutative words, the distribution layer. Star reverses a
  word, stars every letter and conjugates the coefficient.
- CommPoly: commutative monomials in evaluation functions ev[x] and ev*[x],
  the state-space layer. A CommPoly is a function on states.

abelianize maps the first onto the second. delta_collapse multiplies words out
inside an algebra. phi_natural sends ev[x] to phi^op(x) for maps whose op-map
lands in a commutative algebra, which is how classical representability is
checked against the map itself.

Text syntax of CommPoly: 2.0*ev[x1]*ev[x2] + i*ev[x3]^2 - 0.5*ev*[x1]
"""

import itertools
import logging
import re
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from icdkit.algebra import AlgebraElement, BlockAlgebra, is_commutative, tensor_element
from icdkit.errors import (
    NonCommutativeError, PolynomialSyntaxError, ShapeMismatchError, UnresolvedGeneratorError,
)
from icdkit.morphism import UMap
from icdkit.states import StateOnAlgebra

logger = logging.getLogger(__name__)

COEFF_TOL = 1e-14
UNIT_NAME = "1"

Scalar = Union[int, float, complex]


class Letter(NamedTuple):
    name: str
    starred: bool = False

    def star(self) -> "Letter":
        return Letter(self.name, not self.starred)

    def __str__(self):
        return f"{self.name}*" if self.starred else self.name


Word = Tuple[Letter, ...]


def _order(word: Word):
    return len(word), word


def _clean(terms: Mapping[Word, complex]) -> Dict[Word, complex]:
    return {w: complex(c) for w, c in sorted(terms.items(), key=lambda t: _order(t[0])) if abs(c) >= COEFF_TOL}


class _Poly:
    """Shared linear structure of both polynomial rings."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Word, Scalar]] = None):
        self.terms = _clean(dict(terms or {}))

    @classmethod
    def constant(cls, c: Scalar):
        return cls({(): c})

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def one(cls):
        return cls.constant(1)

    def _key(self, word: Word) -> Word:
        return word

    def _lift(self, other):
        if isinstance(other, type(self)):
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return type(self).constant(complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return type(self)(out)

    __radd__ = __add__

    def __neg__(self):
        return type(self)({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out: Dict[Word, complex] = {}
        for (u, a), (v, b) in itertools.product(self.terms.items(), other.terms.items()):
            w = self._key(u + v)
            out[w] = out.get(w, 0) + a * b
        return type(self)(out)

    def __rmul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other * self

    def __pow__(self, n: int):
        out = type(self).one()
        for _ in range(int(n)):
            out = out * self
        return out

    def __iter__(self) -> Iterator[Tuple[Word, complex]]:
        """Terms in normal form: by degree, then lexicographically."""
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def is_zero(self, tol: float = COEFF_TOL) -> bool:
        return all(abs(c) < tol for c in self.terms.values())

    def allclose(self, other, tol: float = 1e-12) -> bool:
        return (self - other).is_zero(tol)

    def __eq__(self, other):
        if not isinstance(other, type(self)):
            return NotImplemented
        return self.allclose(other)

    __hash__ = None

    def generators(self) -> List[str]:
        return sorted({letter.name for w in self.terms for letter in w})


class FreeStarPoly(_Poly):
    """Linear combination of words in the free unital *-algebra."""

    __slots__ = ()

    @classmethod
    def letter(cls, name: str, starred: bool = False) -> "FreeStarPoly":
        return cls({(Letter(name, starred),): 1})

    @classmethod
    def word(cls, *names: str) -> "FreeStarPoly":
        return cls({tuple(Letter(n) for n in names): 1})

    def star(self) -> "FreeStarPoly":
        return FreeStarPoly({tuple(x.star() for x in reversed(w)): c.conjugate() for w, c in self.terms.items()})

    def __repr__(self):
        body = " + ".join(f"({c:.6g})*[{'.'.join(map(str, w))}]" for w, c in self.terms.items())
        return f"FreeStarPoly({body or '0'})"


class CommPoly(_Poly):
    """Commutative *-polynomial in evaluation functions; monomials are sorted letter tuples."""

    __slots__ = ()

    def __init__(self, terms: Optional[Mapping[Word, Scalar]] = None):
        merged: Dict[Word, complex] = {}
        for w, c in dict(terms or {}).items():
            key = tuple(sorted(w))
            merged[key] = merged.get(key, 0) + c
        super().__init__(merged)

    def _key(self, word: Word) -> Word:
        return tuple(sorted(word))

    @classmethod
    def ev(cls, name: str, starred: bool = False) -> "CommPoly":
        return cls({(Letter(name, starred),): 1})

    def star(self) -> "CommPoly":
        return CommPoly({tuple(x.star() for x in w): c.conjugate() for w, c in self.terms.items()})

    def to_text(self) -> str:
        return to_text(self)

    def __repr__(self):
        return f"CommPoly({to_text(self)})"


# ---------------------------------------------------------------------------
# Between the layers
# ---------------------------------------------------------------------------

def abelianize(p: FreeStarPoly) -> CommPoly:
    """Words become commutative monomials, extended linearly."""
    return CommPoly(p.terms)


def samp(name: str) -> FreeStarPoly:
    """The length-one word of a generator."""
    return FreeStarPoly.letter(name)


def _resolve(generators: Mapping[str, AlgebraElement], letter: Letter) -> AlgebraElement:
    if letter.name not in generators:
        raise UnresolvedGeneratorError(f"generator {letter.name!r} is not in the generator table")
    x = generators[letter.name]
    return x.star() if letter.starred else x


def _target(generators: Mapping[str, AlgebraElement], algebra: Optional[BlockAlgebra]) -> BlockAlgebra:
    if algebra is not None:
        return algebra
    if not generators:
        raise UnresolvedGeneratorError("an empty generator table needs an explicit algebra")
    parents = {x.parent for x in generators.values()}
    if len(parents) != 1:
        raise ShapeMismatchError("generators live in different algebras")
    return parents.pop()


def delta_collapse(p: FreeStarPoly, generators: Mapping[str, AlgebraElement],
                   algebra: Optional[BlockAlgebra] = None) -> AlgebraElement:
    """Multiply every word out inside the algebra."""
    a = _target(generators, algebra)
    out = a.zero()
    for w, c in p:
        x = a.unit()
        for letter in w:
            x = x @ _resolve(generators, letter)
        out = out + c * x
    return out


class TensorWordSum(NamedTuple):
    """Sum of c * [word in A] (x) [word in B]."""
    terms: Dict[Tuple[Word, Word], complex]


def laxator(p: FreeStarPoly, pairs: Mapping[str, Tuple[str, str]]) -> TensorWordSum:
    """A word in pair letters z_j = (x_j, y_j) goes to [x_1 ... x_n] (x) [y_1 ... y_n]."""
    out: Dict[Tuple[Word, Word], complex] = {}
    for w, c in p:
        left, right = [], []
        for letter in w:
            if letter.name not in pairs:
                raise UnresolvedGeneratorError(f"pair generator {letter.name!r} is not in the pair table")
            x, y = pairs[letter.name]
            left.append(Letter(x, letter.starred))
            right.append(Letter(y, letter.starred))
        key = (tuple(left), tuple(right))
        out[key] = out.get(key, 0) + c
    return TensorWordSum(out)


def delta_collapse_tensor(t: TensorWordSum, gens_a: Mapping[str, AlgebraElement],
                          gens_b: Mapping[str, AlgebraElement]) -> AlgebraElement:
    a, b = _target(gens_a, None), _target(gens_b, None)
    out = None
    for (u, v), c in t.terms.items():
        x = delta_collapse(FreeStarPoly({u: 1}), gens_a, a)
        y = delta_collapse(FreeStarPoly({v: 1}), gens_b, b)
        term = c * tensor_element(x, y)
        out = term if out is None else out + term
    if out is None:
        return tensor_element(a.zero(), b.zero())
    return out


# ---------------------------------------------------------------------------
# Evaluation on states and the natural map
# ---------------------------------------------------------------------------

def named_basis(a: BlockAlgebra) -> Dict[str, AlgebraElement]:
    """Matrix units named e{block}_{row}{col} (1-based) plus the unit named "1"."""
    table = {UNIT_NAME: a.unit()}
    for b, n in enumerate(a.blocks):
        sep = "_" if n > 9 else ""
        for p, q in itertools.product(range(n), repeat=2):
            table[f"e{b + 1}_{p + 1}{sep}{q + 1}"] = a.matrix_unit(b, p, q)
    return table


def _evaluate(p: CommPoly, value: Callable[[Letter], complex]) -> complex:
    total = 0j
    cache: Dict[Letter, complex] = {}
    for w, c in p:
        term = c
        for letter in w:
            if letter not in cache:
                cache[letter] = value(letter)
            term *= cache[letter]
        total += term
    return complex(total)


def evaluate_comm(p: CommPoly, psi: StateOnAlgebra,
                  generators: Optional[Mapping[str, AlgebraElement]] = None) -> complex:
    """Substitute ev[x] -> psi(x) and ev*[x] -> psi(x^*)."""
    generators = named_basis(psi.parent) if generators is None else generators
    return _evaluate(p, lambda letter: psi(_resolve(generators, letter)))


class NaturalMap:
    """The *-homomorphism ev[x] -> phi^op(x) into a commutative algebra."""

    def __init__(self, phi: UMap, generators: Mapping[str, AlgebraElement]):
        if not is_commutative(phi.dom):
            raise NonCommutativeError(f"the natural map needs a commutative target, {phi.dom} is not")
        for name, x in generators.items():
            if x.parent != phi.cod:
                raise ShapeMismatchError(f"generator {name!r} lives in {x.parent}, not in {phi.cod}")
        self.phi = phi
        self.generators = dict(generators)

    def image(self, letter: Letter) -> AlgebraElement:
        return self.phi.apply(_resolve(self.generators, letter))

    def __call__(self, p: CommPoly) -> AlgebraElement:
        out = self.phi.dom.zero()
        for w, c in p:
            x = self.phi.dom.unit()
            for letter in w:
                x = x @ self.image(letter)
            out = out + c * x
        return out


def phi_natural(phi: UMap, generators: Optional[Mapping[str, AlgebraElement]] = None) -> NaturalMap:
    return NaturalMap(phi, named_basis(phi.cod) if generators is None else generators)


def natural_residual(nat: NaturalMap, polys: Iterable[CommPoly]) -> float:
    """max |nat(p)_j - p evaluated at the j-th component functional of phi^op|.

    For a commutative target C^m the j-th coordinate of phi^op is a functional on
    the source algebra; the natural map must agree with evaluating at it.
    """
    op = nat.phi.op_matrix
    worst = 0.0
    for p in polys:
        image = nat(p).vector()
        for j, row in enumerate(op):
            direct = _evaluate(p, lambda letter, row=row: complex(row @ _resolve(nat.generators, letter).vector()))
            worst = max(worst, abs(image[j] - direct))
    return worst


def monomials(names: Iterable[str], max_degree: int, starred: bool = False) -> List[CommPoly]:
    """All commutative monomials up to the given degree, in normal-form order."""
    letters = sorted(Letter(n, s) for n in names for s in ((False, True) if starred else (False,)))
    out = []
    for d in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(letters, d):
            out.append(CommPoly({combo: 1}))
    return out


def separating_monomial(phi1: UMap, phi2: UMap, generators: Optional[Mapping[str, AlgebraElement]] = None,
                        max_degree: int = 2, tol: float = 1e-9) -> Optional[CommPoly]:
    """First monomial whose natural images under phi1 and phi2 differ, or None."""
    if phi1.dom != phi2.dom or phi1.cod != phi2.cod:
        raise ShapeMismatchError(f"{phi1} and {phi2} must have the same type")
    n1, n2 = phi_natural(phi1, generators), phi_natural(phi2, generators)
    for m in monomials(n1.generators, max_degree):
        if float(np.max(np.abs(n1(m).vector() - n2(m).vector()), initial=0.0)) > tol:
            return m
    return None


# ---------------------------------------------------------------------------
# Text syntax
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<ev>ev\*?\[(?P<name>[^\]]+)\])
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?[ij]?)
  | (?P<imag>[ij](?![\w\[]))
  | (?P<op>[-+*^()])
""", re.VERBOSE)


class _Token(NamedTuple):
    kind: str
    text: str
    column: int


def _tokenize(text: str) -> List[_Token]:
    out, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PolynomialSyntaxError(f"unexpected character {text[pos]!r}", 1, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Token(kind, m.group(0), pos + 1))
        pos = m.end()
    out.append(_Token("end", "", len(text) + 1))
    return out


class _PolyParser:
    """poly := ['-'] term (('+'|'-') term)*; term := power ('*' power)*; power := atom ['^' int]."""

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self, text: Optional[str] = None) -> _Token:
        tok = self.peek()
        if text is not None and tok.text != text:
            raise PolynomialSyntaxError(f"expected {text!r}, found {tok.text or 'end of input'!r}", 1, tok.column)
        self.pos += 1
        return tok

    def parse(self) -> CommPoly:
        p = self.poly()
        tok = self.peek()
        if tok.kind != "end":
            raise PolynomialSyntaxError(f"unexpected {tok.text!r}", 1, tok.column)
        return p

    def poly(self) -> CommPoly:
        sign = 1
        if self.peek().text in "+-" and self.peek().kind == "op":
            sign = -1 if self.take().text == "-" else 1
        out = sign * self.term()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            sign = -1 if self.take().text == "-" else 1
            out = out + sign * self.term()
        return out

    def term(self) -> CommPoly:
        out = self.power()
        while self.peek().text == "*" and self.peek().kind == "op":
            self.take()
            out = out * self.power()
        return out

    def power(self) -> CommPoly:
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            tok = self.take()
            if tok.kind != "num" or not tok.text.isdigit():
                raise PolynomialSyntaxError(f"exponent must be a non-negative integer, got {tok.text!r}", 1, tok.column)
            base = base ** int(tok.text)
        return base

    def atom(self) -> CommPoly:
        tok = self.peek()
        if tok.kind == "ev":
            self.take()
            starred = tok.text.startswith("ev*")
            name = tok.text[tok.text.index("[") + 1:-1].strip()
            if not name:
                raise PolynomialSyntaxError("empty generator name", 1, tok.column)
            return CommPoly.ev(name, starred)
        if tok.kind == "num":
            self.take()
            if tok.text[-1] in "ij":
                return CommPoly.constant(complex(0, float(tok.text[:-1])))
            return CommPoly.constant(float(tok.text))
        if tok.kind == "imag":
            self.take()
            return CommPoly.constant(1j)
        if tok.text == "(":
            self.take()
            inner = self.poly()
            self.take(")")
            return inner
        raise PolynomialSyntaxError(f"expected a coefficient, ev[...] or '(', found {tok.text or 'end of input'!r}",
                                    1, tok.column)


def parse_comm_poly(text: str) -> CommPoly:
    return _PolyParser(text).parse()


def _monomial_text(w: Word) -> str:
    parts = []
    for letter, group in itertools.groupby(w):
        k = len(list(group))
        head = f"ev*[{letter.name}]" if letter.starred else f"ev[{letter.name}]"
        parts.append(head if k == 1 else f"{head}^{k}")
    return "*".join(parts)


def to_text(p: CommPoly) -> str:
    """Printed form that parse_comm_poly reads back; real and imaginary parts are separate terms."""
    pieces = []
    for w, c in p:
        mono = _monomial_text(w)
        for value, imag in ((c.real, False), (c.imag, True)):
            if abs(value) < COEFF_TOL:
                continue
            coeff = f"{abs(value):.17g}" + ("*i" if imag else "")
            body = f"{coeff}*{mono}" if mono else coeff
            pieces.append(("-" if value < 0 else "+", body))
    if not pieces:
        return "0"
    first_sign, first = pieces[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text
