"""
icdkit - String diagrams

A small term language for diagrams over a signature of named algebras and
generator maps, evaluated strictly into the matrix backend (associators and
unitors are identities, the monoidal unit disappears from wire lists).

Grammar, ';' is diagrammatic order and binds weakest, both operators associate
to the left:

    seq   ::= tens (";" tens)*
    tens  ::= atom (("⊗" | "(x)") atom)*
    atom  ::= "id[" obj "]" | "copy[" obj "]" | "del[" obj "]"
            | "swap[" obj "," obj "]" | "inv(" seq ")" | ident | "(" seq ")"
    obj   ::= ident (("⊗" | "(x)") ident)*        with I naming the unit

"(x)" is read as a tensor sign only where an operator is expected.

The module also holds the comonoid axiom suite and the even/odd wrapper that
realizes a quantum CD-category from the involutive one.
"""

import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from icdkit.algebra import AlgebraElement, BlockAlgebra, DEFAULT_TOL, star, tensor_algebras, tensor_index_map
from icdkit.errors import (
    DiagramSyntaxError, DiagramTypeError, ParityError, ShapeMismatchError, UnknownIdentifierError,
)
from icdkit.morphism import (
    UMap, classicality_residual, compose, copy, delete, identity, involution, swap, tensor,
)

logger = logging.getLogger(__name__)

Wires = Tuple[str, ...]
UNIT_NAME = "I"
KEYWORDS = ("id", "copy", "del", "swap", "inv")


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Id:
    obj: Wires


@dataclass(frozen=True)
class Gen:
    name: str


@dataclass(frozen=True)
class Copy:
    obj: Wires


@dataclass(frozen=True)
class Del:
    obj: Wires


@dataclass(frozen=True)
class Swap:
    left: Wires
    right: Wires


@dataclass(frozen=True)
class Comp:
    """outer after inner; written "inner ; outer"."""
    outer: "DiagramTerm"
    inner: "DiagramTerm"


@dataclass(frozen=True)
class Tensor:
    left: "DiagramTerm"
    right: "DiagramTerm"


@dataclass(frozen=True)
class Invo:
    term: "DiagramTerm"


DiagramTerm = object


@dataclass(frozen=True)
class Generator:
    dom: Wires
    cod: Wires
    map: UMap


@dataclass(frozen=True)
class Signature:
    objects: Dict[str, BlockAlgebra]
    generators: Dict[str, Generator] = field(default_factory=dict)

    def __post_init__(self):
        for name in list(self.objects) + list(self.generators):
            if name in KEYWORDS or name == UNIT_NAME:
                raise DiagramSyntaxError(f"reserved name {name!r} cannot be declared")
        for name, gen in self.generators.items():
            for wire in gen.dom + gen.cod:
                if wire not in self.objects:
                    raise UnknownIdentifierError(f"generator {name} uses undeclared object {wire}")
            if gen.map.dom != self.algebra(gen.dom) or gen.map.cod != self.algebra(gen.cod):
                raise ShapeMismatchError(f"generator {name}: map {gen.map} does not match its wires")

    def algebra(self, wires: Wires) -> BlockAlgebra:
        return tensor_algebras([self.objects[w] for w in wires])


# ---------------------------------------------------------------------------
# Lexer and parser
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<alias>\(x\))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;⊗()\[\],])
""", re.VERBOSE)

_OPERAND_END = {"ident", ")", "]"}


def tokenize(src: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        col = pos - line_start + 1
        if m is None:
            raise DiagramSyntaxError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            line += text.count("\n")
            if "\n" in text:
                line_start = pos + text.rfind("\n") + 1
        elif kind == "alias":
            if tokens and tokens[-1].kind in _OPERAND_END:
                tokens.append(Token("⊗", text, line, col))
            else:
                # a parenthesized generator called x
                tokens.append(Token("(", "(", line, col))
                tokens.append(Token("ident", "x", line, col + 1))
                tokens.append(Token(")", ")", line, col + 2))
        elif kind == "ident":
            tokens.append(Token("ident", text, line, col))
        else:
            tokens.append(Token(text, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    """Recursive descent parser that type-checks while it builds the term."""

    def __init__(self, src: str, sig: Signature):
        self.tokens = tokenize(src)
        self.pos = 0
        self.sig = sig

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        if self.tok.kind != kind:
            shown = self.tok.text or "end of input"
            raise DiagramSyntaxError(f"expected {kind!r} but found {shown!r}", self.tok.line, self.tok.column)
        return self.advance()

    def parse(self) -> Tuple[DiagramTerm, Wires, Wires]:
        result = self.seq()
        if self.tok.kind != "eof":
            raise DiagramSyntaxError(f"unexpected {self.tok.text!r}", self.tok.line, self.tok.column)
        return result

    def seq(self):
        term, dom, cod = self.tens()
        while self.tok.kind == ";":
            op = self.advance()
            rhs, rdom, rcod = self.tens()
            if rdom != cod:
                raise DiagramTypeError(
                    f"cannot compose: left side ends in {_show(cod)} but right side starts at {_show(rdom)}",
                    op.line, op.column)
            term, cod = Comp(rhs, term), rcod
        return term, dom, cod

    def tens(self):
        term, dom, cod = self.atom()
        while self.tok.kind == "⊗":
            self.advance()
            rhs, rdom, rcod = self.atom()
            term, dom, cod = Tensor(term, rhs), dom + rdom, cod + rcod
        return term, dom, cod

    def obj(self) -> Wires:
        wires: List[str] = []
        while True:
            t = self.expect("ident")
            if t.text != UNIT_NAME:
                if t.text not in self.sig.objects:
                    raise UnknownIdentifierError(f"unknown object {t.text!r}", t.line, t.column)
                wires.append(t.text)
            if self.tok.kind != "⊗":
                return tuple(wires)
            self.advance()

    def atom(self):
        t = self.tok
        if t.kind == "(":
            self.advance()
            inner = self.seq()
            self.expect(")")
            return inner
        if t.kind != "ident":
            shown = t.text or "end of input"
            raise DiagramSyntaxError(f"expected a term but found {shown!r}", t.line, t.column)
        self.advance()
        if t.text == "inv" and self.tok.kind == "(":
            self.advance()
            term, dom, cod = self.seq()
            self.expect(")")
            return Invo(term), dom, cod
        if t.text in ("id", "copy", "del", "swap") and self.tok.kind == "[":
            self.advance()
            a = self.obj()
            if t.text == "swap":
                self.expect(",")
                b = self.obj()
                self.expect("]")
                return Swap(a, b), a + b, b + a
            self.expect("]")
            if t.text == "id":
                return Id(a), a, a
            if t.text == "copy":
                return Copy(a), a, a + a
            return Del(a), a, ()
        if t.text in KEYWORDS:
            raise DiagramSyntaxError(f"{t.text!r} must be followed by its argument", t.line, t.column)
        gen = self.sig.generators.get(t.text)
        if gen is None:
            raise UnknownIdentifierError(f"unknown generator {t.text!r}", t.line, t.column)
        return Gen(t.text), gen.dom, gen.cod


def _show(wires: Wires) -> str:
    return " ⊗ ".join(wires) if wires else UNIT_NAME


def parse(src: str, sig: Signature) -> DiagramTerm:
    """Parse and type-check a diagram term."""
    term, _, _ = _Parser(src, sig).parse()
    return term


def to_source(term: DiagramTerm) -> str:
    """Fully parenthesized text; parse(to_source(t)) == t."""
    if isinstance(term, Id):
        return f"id[{_show(term.obj)}]"
    if isinstance(term, Copy):
        return f"copy[{_show(term.obj)}]"
    if isinstance(term, Del):
        return f"del[{_show(term.obj)}]"
    if isinstance(term, Swap):
        return f"swap[{_show(term.left)}, {_show(term.right)}]"
    if isinstance(term, Gen):
        return term.name
    if isinstance(term, Invo):
        return f"inv({to_source(term.term)})"
    if isinstance(term, Comp):
        return f"({to_source(term.inner)} ; {to_source(term.outer)})"
    if isinstance(term, Tensor):
        return f"({to_source(term.left)} ⊗ {to_source(term.right)})"
    raise DiagramTypeError(f"not a diagram term: {term!r}")


def type_of(term: DiagramTerm, sig: Signature) -> Tuple[Wires, Wires]:
    if isinstance(term, Id):
        return term.obj, term.obj
    if isinstance(term, Copy):
        return term.obj, term.obj + term.obj
    if isinstance(term, Del):
        return term.obj, ()
    if isinstance(term, Swap):
        return term.left + term.right, term.right + term.left
    if isinstance(term, Gen):
        if term.name not in sig.generators:
            raise UnknownIdentifierError(f"unknown generator {term.name!r}")
        gen = sig.generators[term.name]
        return gen.dom, gen.cod
    if isinstance(term, Invo):
        return type_of(term.term, sig)
    if isinstance(term, Comp):
        idom, icod = type_of(term.inner, sig)
        odom, ocod = type_of(term.outer, sig)
        if icod != odom:
            raise DiagramTypeError(f"cannot compose {_show(icod)} into {_show(odom)}")
        return idom, ocod
    if isinstance(term, Tensor):
        ldom, lcod = type_of(term.left, sig)
        rdom, rcod = type_of(term.right, sig)
        return ldom + rdom, lcod + rcod
    raise DiagramTypeError(f"not a diagram term: {term!r}")


def evaluate(term: DiagramTerm, sig: Signature) -> UMap:
    """Strict evaluation into UMaps."""
    type_of(term, sig)
    return _evaluate(term, sig)


def _evaluate(term: DiagramTerm, sig: Signature) -> UMap:
    if isinstance(term, Id):
        return identity(sig.algebra(term.obj))
    if isinstance(term, Copy):
        return copy(sig.algebra(term.obj))
    if isinstance(term, Del):
        return delete(sig.algebra(term.obj))
    if isinstance(term, Swap):
        return swap(sig.algebra(term.left), sig.algebra(term.right))
    if isinstance(term, Gen):
        return sig.generators[term.name].map
    if isinstance(term, Invo):
        return involution(_evaluate(term.term, sig))
    if isinstance(term, Comp):
        return compose(_evaluate(term.outer, sig), _evaluate(term.inner, sig))
    return tensor(_evaluate(term.left, sig), _evaluate(term.right, sig))


def terms_equal(a: DiagramTerm, b: DiagramTerm, sig: Signature, tol: float = DEFAULT_TOL) -> Tuple[bool, float]:
    if type_of(a, sig) != type_of(b, sig):
        raise DiagramTypeError(f"terms of different types {type_of(a, sig)} and {type_of(b, sig)}")
    residual = evaluate(a, sig).residual(evaluate(b, sig))
    return residual <= tol, residual


# ---------------------------------------------------------------------------
# Axiom suite
# ---------------------------------------------------------------------------

def _interchange_columns(a: BlockAlgebra, b: BlockAlgebra) -> np.ndarray:
    """Column gather equal to composing with id (x) swap(A, B) (x) id into A (x) B (x) A (x) B.

    The op-map sends x1 (x) y1 (x) x2 (x) y2 to x1 (x) x2 (x) y1 (x) y2; the
    permutation is applied to indices instead of materializing the matrix."""
    da, db = a.dim, b.dim
    grouped = np.arange(da * da * db * db).reshape(da, da, db, db).transpose(0, 2, 1, 3).reshape(-1)
    idx = np.empty(da * db * da * db, dtype=np.intp)
    idx[tensor_index_map([a, b, a, b])] = tensor_index_map([a, a, b, b])[grouped]
    return idx


@dataclass
class AxiomReport:
    residuals: Dict[str, Optional[float]]
    classicality_residual: float
    classical: bool
    ok: bool

    def to_dict(self) -> dict:
        return {"residuals": dict(self.residuals), "classicality_residual": self.classicality_residual,
                "classical": self.classical, "ok": self.ok}


def check_axioms(a: BlockAlgebra, tol: float = 1e-10, b: Optional[BlockAlgebra] = None,
                 copy_map: Optional[UMap] = None, delete_map: Optional[UMap] = None) -> AxiomReport:
    """Comonoid, involution and monoidal laws of copy/delete as matrix identities.

    A custom comonoid on A may be supplied; the monoidal laws are then skipped
    because copy on A (x) B is only defined through the structural maps."""
    custom = copy_map is not None or delete_map is not None
    cp = copy_map if copy_map is not None else copy(a)
    dl = delete_map if delete_map is not None else delete(a)
    if cp.dom != a or cp.cod != tensor_algebras([a, a]) or dl.dom != a or dl.cod.dim != 1:
        raise ShapeMismatchError("custom comonoid maps have the wrong type")
    ident = identity(a)
    residuals: Dict[str, Optional[float]] = {
        "coassociativity": compose(tensor(cp, ident), cp).residual(compose(tensor(ident, cp), cp)),
        "counit_left": compose(tensor(dl, ident), cp).residual(ident),
        "counit_right": compose(tensor(ident, dl), cp).residual(ident),
        "involution_copy": involution(cp).residual(compose(swap(a, a), cp)),
        "involution_delete": involution(dl).residual(dl),
        "monoidal_copy": None,
        "monoidal_delete": None,
    }
    if not custom:
        b = a if b is None else b
        lhs = copy(tensor_algebras([a, b]))
        split = tensor(copy(a), copy(b))
        rhs = UMap(split.dom, lhs.cod, split.op_matrix[:, _interchange_columns(a, b)])
        residuals["monoidal_copy"] = lhs.residual(rhs)
        residuals["monoidal_delete"] = delete(tensor_algebras([a, b])).residual(tensor(delete(a), delete(b)))
    classical_res = compose(swap(a, a), cp).residual(cp) if custom else classicality_residual(a)
    ok = all(r <= tol for r in residuals.values() if r is not None)
    logger.info(f"Axiom check on {a}: ok={ok}")
    return AxiomReport(residuals, classical_res, classical_res <= tol, ok)


# ---------------------------------------------------------------------------
# Even/odd wrapper
# ---------------------------------------------------------------------------

class Parity(enum.IntEnum):
    EVEN = 0
    ODD = 1


@dataclass(frozen=True)
class EvenOddMorphism:
    """base (even) or base^* (odd): the odd map sends x to base^op(x)^*."""
    base: UMap
    parity: Parity

    @property
    def dom(self) -> BlockAlgebra:
        return self.base.dom

    @property
    def cod(self) -> BlockAlgebra:
        return self.base.cod


def qcd_wrap(phi: UMap) -> EvenOddMorphism:
    return EvenOddMorphism(phi, Parity.EVEN)


def qcd_unwrap(m: EvenOddMorphism) -> UMap:
    if m.parity != Parity.EVEN:
        raise ParityError("only even morphisms come from the underlying category")
    return m.base


def qcd_star(a: BlockAlgebra) -> EvenOddMorphism:
    """The odd identity id^*, i.e. the star operation of A."""
    return EvenOddMorphism(identity(a), Parity.ODD)


def qcd_compose(psi: EvenOddMorphism, phi: EvenOddMorphism) -> EvenOddMorphism:
    """psi after phi.

    psi . phi      = psi . phi
    psi . phi^*    = (psi . phi)^*
    psi^* . phi    = (psi . inv phi)^*
    psi^* . phi^*  = psi . inv phi
    """
    if psi.parity == Parity.EVEN:
        return EvenOddMorphism(compose(psi.base, phi.base), phi.parity)
    parity = Parity.EVEN if phi.parity == Parity.ODD else Parity.ODD
    return EvenOddMorphism(compose(psi.base, involution(phi.base)), parity)


def qcd_tensor(a: EvenOddMorphism, b: EvenOddMorphism) -> EvenOddMorphism:
    """phi (x) psi for two even maps, phi^* (x) psi^* = (phi (x) psi)^* for two odd ones."""
    if a.parity != b.parity:
        raise ParityError("an even and an odd morphism cannot be tensored")
    return EvenOddMorphism(tensor(a.base, b.base), a.parity)


def qcd_involution(m: EvenOddMorphism) -> EvenOddMorphism:
    """id^* . m . id^*."""
    return qcd_compose(qcd_star(m.cod), qcd_compose(m, qcd_star(m.dom)))


def qcd_apply(m: EvenOddMorphism, x: AlgebraElement) -> AlgebraElement:
    """The (anti)linear op-map of m applied to x."""
    y = m.base.apply(x)
    return star(y) if m.parity == Parity.ODD else y
