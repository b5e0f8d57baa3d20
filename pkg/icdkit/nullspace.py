"""
icdkit - Nullspaces and almost-sure equality

For a CPU map omega: X -> B the right nullspace {x : omega^op(x^* x) = 0} is a
left ideal of B, the left nullspace {x : omega^op(x x^*) = 0} a right ideal,
and the symmetric nullspace the largest two-sided ideal inside either. The four
almost-sure equality variants of phi, psi: B -> Y reduce to membership of the
differences phi^op(y) - psi^op(y) in these subspaces.

Kernels come from a single Hermitian Gram form: with tau = trace after omega^op,
omega^op(x^* x) = 0 exactly when tau(x^* x) = 0.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import scipy.linalg

from icdkit.algebra import AlgebraElement, BlockAlgebra, structure_constants, transpose_index
from icdkit.errors import NotCompletelyPositiveError, NotUnitalError, ShapeMismatchError, checked
from icdkit.morphism import (
    UMap, compose, copy, identity, is_completely_positive, is_unital, tensor,
)

logger = logging.getLogger(__name__)

NULLSPACE_TOL = 1e-10
MODES = ("left", "right", "both", "symmetric")


@dataclass(frozen=True, eq=False)
class NullspaceBasis:
    """Subspace of an algebra given by Hilbert-Schmidt orthonormal coordinate columns."""
    kind: str
    parent: BlockAlgebra
    columns: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.columns, dtype=complex).reshape(self.parent.dim, -1)
        q.setflags(write=False)
        object.__setattr__(self, "columns", q)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @property
    def basis(self) -> List[AlgebraElement]:
        return [self.parent.from_vector(c) for c in self.columns.T]

    @property
    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T

    def contains_vector(self, v: np.ndarray, tol: float = 1e-8) -> bool:
        v = np.asarray(v, dtype=complex)
        scale = max(1.0, float(np.linalg.norm(v)))
        return float(np.linalg.norm(v - self.projector @ v)) <= tol * scale

    def contains(self, x: AlgebraElement, tol: float = 1e-8) -> bool:
        return self.contains_vector(x.vector(), tol)

    def star(self) -> "NullspaceBasis":
        t = transpose_index(self.parent.blocks)
        kind = {"left": "right", "right": "left"}.get(self.kind, self.kind)
        return NullspaceBasis(kind, self.parent, self.columns[t, :].conj())

    def _closure_residual(self, mats: np.ndarray) -> float:
        """Largest component of M q outside the subspace, over the given maps M."""
        if self.dim == 0:
            return 0.0
        comp = np.eye(self.parent.dim) - self.projector
        return float(np.max(np.abs(np.einsum("ij,mjk,kl->mil", comp, mats, self.columns)), initial=0.0))

    def is_left_ideal(self, tol: float = 1e-8) -> bool:
        s = structure_constants(self.parent)
        # left multiplication by b_y: x -> b_y x
        return self._closure_residual(np.transpose(s, (1, 0, 2))) <= tol

    def is_right_ideal(self, tol: float = 1e-8) -> bool:
        s = structure_constants(self.parent)
        # right multiplication by b_y: x -> x b_y
        return self._closure_residual(np.transpose(s, (2, 0, 1))) <= tol

    def is_star_closed(self, tol: float = 1e-8) -> bool:
        return all(self.contains_vector(c, tol) for c in self.star().columns.T)

    def same_subspace(self, other: "NullspaceBasis", tol: float = 1e-8) -> bool:
        return self.parent == other.parent and self.dim == other.dim and \
            bool(np.max(np.abs(self.projector - other.projector), initial=0.0) <= tol)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


def _check_cpu(omega: UMap, tol: float = 1e-8):
    if not is_completely_positive(omega, tol):
        raise NotCompletelyPositiveError("nullspaces are defined for completely positive maps")
    if not is_unital(omega, tol):
        raise NotUnitalError("nullspaces are defined for unital maps; rescale omega first")


def gram_form(omega: UMap) -> np.ndarray:
    """G[i, j] = tau(b_i^* b_j) on the matrix units of the codomain."""
    b = omega.cod
    t = omega.dom.unit_vector() @ omega.op_matrix / max(1, sum(omega.dom.blocks))
    mats = []
    for i, n in enumerate(b.blocks):
        mats.append(np.kron(np.eye(n), t[b.block_slice(i)].reshape(n, n)))
    return scipy.linalg.block_diag(*mats) if mats else np.zeros((0, 0), dtype=complex)


@checked
def right_nullspace(omega: UMap, tol: float = NULLSPACE_TOL) -> NullspaceBasis:
    """{x in cod(omega) : omega^op(x^* x) = 0}."""
    _check_cpu(omega)
    g = gram_form(omega)
    if g.size == 0:
        return NullspaceBasis("right", omega.cod, np.zeros((0, 0)))
    vals, vecs = scipy.linalg.eigh((g + g.conj().T) / 2)
    cutoff = tol * (max(float(vals.max()), 0.0) + 1)
    out = NullspaceBasis("right", omega.cod, vecs[:, vals <= cutoff])
    logger.info(f"Right nullspace of {omega}: dimension {out.dim}")
    return out


def left_nullspace(omega: UMap, tol: float = NULLSPACE_TOL) -> NullspaceBasis:
    """{x : omega^op(x x^*) = 0}, the star of the right nullspace."""
    return right_nullspace(omega, tol).star()


@checked
def symmetric_nullspace(omega: UMap, tol: float = NULLSPACE_TOL) -> NullspaceBasis:
    """Largest two-sided ideal in the right nullspace: {x : x b in N for all basis b}."""
    right = right_nullspace(omega, tol)
    b = omega.cod
    if right.dim == 0 or b.dim == 0:
        return NullspaceBasis("symmetric", b, np.zeros((b.dim, 0)))
    comp = np.eye(b.dim) - right.projector
    s = structure_constants(b)
    # rows: (I - P) R_y for every basis y, R_y x = x b_y
    system = np.concatenate([comp @ s[:, :, y] for y in range(b.dim)], axis=0)
    kernel = scipy.linalg.null_space(system, rcond=max(tol, 1e-12))
    out = NullspaceBasis("symmetric", b, kernel)
    if not (out.is_left_ideal() and out.is_right_ideal() and out.is_star_closed()):
        logger.warning(f"Symmetric nullspace of {omega} failed the two-sided *-ideal verification")
    logger.info(f"Symmetric nullspace of {omega}: dimension {out.dim}")
    return out


def nullspace(omega: UMap, kind: str, tol: float = NULLSPACE_TOL) -> NullspaceBasis:
    if kind == "left":
        return left_nullspace(omega, tol)
    if kind == "right":
        return right_nullspace(omega, tol)
    if kind == "symmetric":
        return symmetric_nullspace(omega, tol)
    raise ShapeMismatchError(f"unknown nullspace kind {kind!r}")


def block_ideal(a: BlockAlgebra, blocks: Sequence[int]) -> NullspaceBasis:
    """The two-sided ideal made of the chosen blocks."""
    idx = [k for i in sorted(set(blocks)) for k in range(a.block_slice(i).start, a.block_slice(i).stop)]
    return NullspaceBasis("symmetric", a, np.eye(a.dim)[:, idx])


def block_ideals(a: BlockAlgebra) -> List[NullspaceBasis]:
    """All 2^k two-sided ideals of a k-block algebra."""
    k = len(a.blocks)
    return [block_ideal(a, subset) for r in range(k + 1) for subset in itertools.combinations(range(k), r)]


def largest_block_ideal_in_kernel(omega: UMap, tol: float = 1e-9) -> NullspaceBasis:
    """Brute force over block subsets: keep a block when omega^op kills all of its matrix units."""
    b = omega.cod
    keep = [i for i in range(len(b.blocks))
            if np.max(np.abs(omega.op_matrix[:, b.block_slice(i)]), initial=0.0) <= tol]
    return block_ideal(b, keep)


def _differences(phi: UMap, psi: UMap, omega: UMap) -> np.ndarray:
    if phi.dom != psi.dom or phi.cod != psi.cod:
        raise ShapeMismatchError(f"{phi} and {psi} must have the same type")
    if omega.cod != phi.dom:
        raise ShapeMismatchError(f"omega lands in {omega.cod} but the maps start at {phi.dom}")
    return phi.op_matrix - psi.op_matrix


def _spaces(omega: UMap, mode: str, tol: float) -> List[NullspaceBasis]:
    if mode == "left":
        return [left_nullspace(omega, tol)]
    if mode == "right":
        return [right_nullspace(omega, tol)]
    if mode == "both":
        right = right_nullspace(omega, tol)
        return [right.star(), right]
    if mode == "symmetric":
        return [symmetric_nullspace(omega, tol)]
    raise ShapeMismatchError(f"unknown mode {mode!r}, expected one of {MODES}")


@checked
def as_equal_residual(phi: UMap, psi: UMap, omega: UMap, mode: str, nullspace_tol: float = NULLSPACE_TOL) -> float:
    """Largest relative distance of a column of phi^op - psi^op from the relevant nullspace(s)."""
    diffs = _differences(phi, psi, omega)
    worst = 0.0
    for space in _spaces(omega, mode, nullspace_tol):
        comp = np.eye(space.parent.dim) - space.projector
        for d in diffs.T:
            worst = max(worst, float(np.linalg.norm(comp @ d)) / max(1.0, float(np.linalg.norm(d))))
    return worst


def as_equal(phi: UMap, psi: UMap, omega: UMap, mode: str, tol: float = 1e-9) -> bool:
    """Almost-sure equality with respect to omega, decided through nullspace membership."""
    return as_equal_residual(phi, psi, omega, mode) <= tol


@checked
def as_equal_direct_residual(phi: UMap, psi: UMap, omega: UMap, mode: str) -> float:
    """The same question asked of composite morphisms built from copy and omega.

    left:      (f (x) id) copy omega,  op y (x) z -> omega^op(f(y) z)
    right:     (id (x) f) copy omega,  op z (x) y -> omega^op(z f(y))
    symmetric: (id (x) f (x) id) (copy (x) id) copy omega
    """
    _differences(phi, psi, omega)
    b = phi.dom
    ident = identity(b)
    dup = compose(copy(b), omega)
    if mode == "left":
        return compose(tensor(phi, ident), dup).residual(compose(tensor(psi, ident), dup))
    if mode == "right":
        return compose(tensor(ident, phi), dup).residual(compose(tensor(ident, psi), dup))
    if mode == "both":
        return max(as_equal_direct_residual(phi, psi, omega, "left"),
                   as_equal_direct_residual(phi, psi, omega, "right"))
    if mode == "symmetric":
        triple = compose(tensor(copy(b), ident), dup)
        return compose(tensor(tensor(ident, phi), ident), triple).residual(
            compose(tensor(tensor(ident, psi), ident), triple))
    raise ShapeMismatchError(f"unknown mode {mode!r}, expected one of {MODES}")


def as_equal_direct(phi: UMap, psi: UMap, omega: UMap, mode: str, tol: float = 1e-9) -> bool:
    return as_equal_direct_residual(phi, psi, omega, mode) <= tol
