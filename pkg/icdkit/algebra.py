"""
icdkit - Finite-dimensional C*-algebras

A BlockAlgebra is a direct sum of full matrix blocks M_{n_1} + ... + M_{n_k}.
Elements are stored as one complex matrix per block. The canonical coordinates
of an element are its matrix-unit coefficients in block order, row-major inside
each block; every matrix representation in the package uses them.

Tensor products order their blocks lexicographically (n_i * m_j, i outer), so
A (x) C = A and (A (x) B) (x) C = A (x) (B (x) C) hold on the nose, coordinates
included. Kronecker-to-canonical index maps are cached per pair of algebras.
"""

import functools
import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from icdkit.errors import InvalidAlgebraError, ParentMismatchError, checked

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class BlockAlgebra:
    """Direct sum of matrix blocks; the label is cosmetic and ignored by equality."""
    blocks: Tuple[int, ...]
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        blocks = tuple(int(n) for n in self.blocks)
        if any(n < 1 for n in blocks):
            raise InvalidAlgebraError(f"block sizes must be positive, got {list(self.blocks)}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.blocks)

    @property
    def offsets(self) -> Tuple[int, ...]:
        return _offsets(self.blocks)

    @property
    def is_zero(self) -> bool:
        return not self.blocks

    def block_slice(self, i: int) -> slice:
        off = self.offsets[i]
        return slice(off, off + self.blocks[i] ** 2)

    def index(self, block: int, p: int, q: int) -> int:
        """Canonical coordinate of the matrix unit e_pq in the given block."""
        n = self.blocks[block]
        return self.offsets[block] + p * n + q

    def element(self, mats: Sequence) -> "AlgebraElement":
        return AlgebraElement(self, mats)

    def from_vector(self, v) -> "AlgebraElement":
        v = np.asarray(v, dtype=complex).reshape(-1)
        if v.shape[0] != self.dim:
            raise InvalidAlgebraError(f"vector of length {v.shape[0]} does not fit algebra of dim {self.dim}")
        return AlgebraElement(self, [v[self.block_slice(i)].reshape(n, n) for i, n in enumerate(self.blocks)])

    def unit(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.eye(n) for n in self.blocks])

    def zero(self) -> "AlgebraElement":
        return AlgebraElement(self, [np.zeros((n, n)) for n in self.blocks])

    def unit_vector(self) -> np.ndarray:
        return _unit_vector(self.blocks)

    def matrix_unit(self, block: int, p: int, q: int) -> "AlgebraElement":
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(block, p, q)] = 1.0
        return self.from_vector(v)

    def basis(self) -> List["AlgebraElement"]:
        """Matrix units in canonical order."""
        return [self.from_vector(v) for v in np.eye(self.dim, dtype=complex)]

    def random_element(self, rng: np.random.Generator) -> "AlgebraElement":
        return AlgebraElement(self, [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for n in self.blocks])

    def __str__(self):
        if self.label:
            return self.label
        if not self.blocks:
            return "0"
        return " + ".join("C" if n == 1 else f"M{n}" for n in self.blocks)


class AlgebraElement:
    """One complex matrix per block of the parent algebra. Treated as immutable."""

    __slots__ = ("parent", "mats")

    def __init__(self, parent: BlockAlgebra, mats: Sequence):
        mats = tuple(np.array(m, dtype=complex) for m in mats)
        if len(mats) != len(parent.blocks):
            raise InvalidAlgebraError(f"expected {len(parent.blocks)} blocks, got {len(mats)}")
        for m, n in zip(mats, parent.blocks):
            if m.shape != (n, n):
                raise InvalidAlgebraError(f"block of shape {m.shape} where ({n}, {n}) was expected")
            m.setflags(write=False)
        self.parent = parent
        self.mats = mats

    def vector(self) -> np.ndarray:
        if not self.mats:
            return np.zeros(0, dtype=complex)
        return np.concatenate([m.reshape(-1) for m in self.mats])

    def _check(self, other: "AlgebraElement"):
        if other.parent != self.parent:
            raise ParentMismatchError(f"elements of {self.parent} and {other.parent} cannot be combined")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.parent, [a + b for a, b in zip(self.mats, other.mats)])

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        return AlgebraElement(self.parent, [a - b for a, b in zip(self.mats, other.mats)])

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.parent, [-a for a in self.mats])

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return mul(self, other)
        return AlgebraElement(self.parent, [a * other for a in self.mats])

    def __rmul__(self, other):
        return AlgebraElement(self.parent, [other * a for a in self.mats])

    def __matmul__(self, other: "AlgebraElement") -> "AlgebraElement":
        return mul(self, other)

    def star(self) -> "AlgebraElement":
        return star(self)

    def allclose(self, other: "AlgebraElement", tol: float = 1e-12) -> bool:
        self._check(other)
        return all(np.allclose(a, b, rtol=0.0, atol=tol) for a, b in zip(self.mats, other.mats))

    def __repr__(self):
        return f"AlgebraElement({self.parent}, {[m.tolist() for m in self.mats]})"


@dataclass(frozen=True)
class Spectrum:
    """Union of the block eigenvalue multisets."""
    eigenvalues: Tuple[complex, ...]

    def is_real(self, tol: float = DEFAULT_TOL) -> bool:
        return all(abs(z.imag) <= tol for z in self.eigenvalues)

    def __len__(self):
        return len(self.eigenvalues)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def make_algebra(blocks: Iterable[int], label: Optional[str] = None) -> BlockAlgebra:
    """Create an algebra from its block sizes; [] is the zero algebra."""
    return BlockAlgebra(tuple(blocks), label)


def unit_algebra() -> BlockAlgebra:
    """The complex numbers, the monoidal unit."""
    return BlockAlgebra((1,))


def direct_sum(a: BlockAlgebra, b: BlockAlgebra) -> BlockAlgebra:
    return BlockAlgebra(a.blocks + b.blocks)


# ---------------------------------------------------------------------------
# Element operations
# ---------------------------------------------------------------------------

def mul(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    x._check(y)
    return AlgebraElement(x.parent, [a @ b for a, b in zip(x.mats, y.mats)])


def star(x: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(x.parent, [a.conj().T for a in x.mats])


def norm(x: AlgebraElement) -> float:
    """Operator norm: largest singular value over all blocks (0 on the zero algebra)."""
    return max((float(np.linalg.norm(a, 2)) for a in x.mats), default=0.0)


@checked
def spectrum(x: AlgebraElement) -> Spectrum:
    values: List[complex] = []
    for a in x.mats:
        values.extend(complex(z) for z in scipy.linalg.eigvals(a))
    return Spectrum(tuple(values))


def is_selfadjoint(x: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    return all(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol for a in x.mats)


@checked
def hermitian_eigenvalues(x: AlgebraElement) -> np.ndarray:
    """Eigenvalues of the Hermitian part of x, all blocks concatenated."""
    parts = [scipy.linalg.eigvalsh((a + a.conj().T) / 2) for a in x.mats]
    return np.concatenate(parts) if parts else np.zeros(0)


def min_eigenvalue(x: AlgebraElement) -> float:
    values = hermitian_eigenvalues(x)
    return float(values.min()) if values.size else 0.0


def is_positive(x: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    """Self-adjoint with smallest eigenvalue >= -tol."""
    return is_selfadjoint(x, tol) and min_eigenvalue(x) >= -tol


def in_unit_interval(x: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    """0 <= x <= 1 in the operator order."""
    if not is_selfadjoint(x, tol):
        return False
    values = hermitian_eigenvalues(x)
    return bool(np.all(values >= -tol) and np.all(values <= 1 + tol))


def hs_inner(x: AlgebraElement, y: AlgebraElement) -> complex:
    """Hilbert-Schmidt inner product sum_i tr(x_i^* y_i)."""
    x._check(y)
    return complex(np.vdot(x.vector(), y.vector()))


def is_commutative(a: BlockAlgebra) -> bool:
    return all(n == 1 for n in a.blocks)


def center_basis(a: BlockAlgebra) -> List[AlgebraElement]:
    """Block identity projections; they span the center."""
    out = []
    for i in range(len(a.blocks)):
        mats = [np.eye(n) if j == i else np.zeros((n, n)) for j, n in enumerate(a.blocks)]
        out.append(AlgebraElement(a, mats))
    return out


def norm_via_states(x: AlgebraElement, rng: np.random.Generator, samples: int = 2000) -> float:
    """Max of |psi(x)| over sampled pure vector states plus the eigenvector states.

    For self-adjoint x this reaches the norm; the random part only serves as a
    sanity lower bound."""
    best = 0.0
    for a in x.mats:
        h = (a + a.conj().T) / 2
        _, vecs = scipy.linalg.eigh(h)
        n = a.shape[0]
        cands = np.concatenate([vecs.T, rng.normal(size=(samples, n)) + 1j * rng.normal(size=(samples, n))])
        cands = cands / np.linalg.norm(cands, axis=1, keepdims=True)
        vals = np.abs(np.einsum("ki,ij,kj->k", cands.conj(), a, cands))
        best = max(best, float(vals.max()))
    return best


# ---------------------------------------------------------------------------
# Tensor products
# ---------------------------------------------------------------------------

def tensor_algebra(a: BlockAlgebra, b: BlockAlgebra) -> BlockAlgebra:
    return BlockAlgebra(tuple(n * m for n in a.blocks for m in b.blocks))


def tensor_algebras(factors: Sequence[BlockAlgebra]) -> BlockAlgebra:
    """Left fold of tensor_algebra; the empty product is C."""
    return functools.reduce(tensor_algebra, factors, unit_algebra())


def tensor_element(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    mats = [np.kron(a, b) for a in x.mats for b in y.mats]
    return AlgebraElement(tensor_algebra(x.parent, y.parent), mats)


def tensor_elements(xs: Sequence[AlgebraElement]) -> AlgebraElement:
    if not xs:
        return unit_algebra().unit()
    return functools.reduce(tensor_element, xs)


@functools.lru_cache(maxsize=None)
def _offsets(blocks: Tuple[int, ...]) -> Tuple[int, ...]:
    out, off = [], 0
    for n in blocks:
        out.append(off)
        off += n * n
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _unit_vector(blocks: Tuple[int, ...]) -> np.ndarray:
    v = np.concatenate([np.eye(n).reshape(-1) for n in blocks]) if blocks else np.zeros(0)
    v = v.astype(complex)
    v.setflags(write=False)
    return v


@functools.lru_cache(maxsize=None)
def transpose_index(blocks: Tuple[int, ...]) -> np.ndarray:
    """Permutation t with t[index(e_pq)] = index(e_qp); star is v -> conj(v[t])."""
    parts = []
    for off, n in zip(_offsets(blocks), blocks):
        p, q = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        parts.append((off + q * n + p).reshape(-1))
    t = np.concatenate(parts) if parts else np.zeros(0, dtype=np.intp)
    t = t.astype(np.intp)
    t.setflags(write=False)
    return t


@functools.lru_cache(maxsize=None)
def pair_index_map(a: BlockAlgebra, b: BlockAlgebra) -> np.ndarray:
    """T with T[k] = canonical index in a (x) b of Kronecker coordinate k of vec(a) (x) vec(b)."""
    out = np.empty(a.dim * b.dim, dtype=np.intp)
    off = 0
    for i, n in enumerate(a.blocks):
        for j, m in enumerate(b.blocks):
            p, q, r, s = np.meshgrid(np.arange(n), np.arange(n), np.arange(m), np.arange(m), indexing="ij")
            kron_idx = (a.offsets[i] + p * n + q) * b.dim + (b.offsets[j] + r * m + s)
            out[kron_idx.reshape(-1)] = (off + (p * m + r) * (n * m) + (q * m + s)).reshape(-1)
            off += (n * m) ** 2
    out.setflags(write=False)
    return out


def tensor_index_map(factors: Sequence[BlockAlgebra]) -> np.ndarray:
    """Kronecker coordinates of a list of factors to canonical coordinates of their product."""
    t = np.zeros(1, dtype=np.intp)
    acc = unit_algebra()
    for f in factors:
        pair = pair_index_map(acc, f)
        k = np.arange(acc.dim * f.dim)
        t = pair[t[k // f.dim] * f.dim + k % f.dim] if f.dim else np.zeros(0, dtype=np.intp)
        acc = tensor_algebra(acc, f)
    return t


def kron_to_canonical(vec_kron: np.ndarray, factors: Sequence[BlockAlgebra]) -> np.ndarray:
    out = np.zeros_like(vec_kron, dtype=complex)
    out[tensor_index_map(factors)] = vec_kron
    return out


@functools.lru_cache(maxsize=None)
def structure_constants(a: BlockAlgebra) -> np.ndarray:
    """Array S with S[c, x, y] = coefficient of basis c in b_x * b_y."""
    d = a.dim
    s = np.zeros((d, d, d))
    for off, n in zip(a.offsets, a.blocks):
        p, q, r = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        # e_pq e_qr = e_pr
        s[(off + p * n + r).reshape(-1), (off + p * n + q).reshape(-1), (off + q * n + r).reshape(-1)] = 1.0
    s.setflags(write=False)
    return s


# ---------------------------------------------------------------------------
# Distinguished bases
# ---------------------------------------------------------------------------

def self_adjoint_basis(a: BlockAlgebra) -> List[AlgebraElement]:
    """Per block: identity, e_pp for p < n-1, then e_pq + e_qp and i(e_pq - e_qp) for p < q."""
    out = []
    for b, n in enumerate(a.blocks):
        def put(mat, b=b):
            mats = [mat if j == b else np.zeros((m, m)) for j, m in enumerate(a.blocks)]
            out.append(AlgebraElement(a, mats))
        put(np.eye(n))
        for p in range(n - 1):
            m = np.zeros((n, n), dtype=complex)
            m[p, p] = 1
            put(m)
        for p, q in itertools.combinations(range(n), 2):
            m = np.zeros((n, n), dtype=complex)
            m[p, q] = m[q, p] = 1
            put(m)
            m = np.zeros((n, n), dtype=complex)
            m[p, q], m[q, p] = 1j, -1j
            put(m)
    return out


def positive_spanning_set(a: BlockAlgebra) -> List[AlgebraElement]:
    """Rank-one projections spanning A: diagonal units and the four phase combinations per pair."""
    out = []
    for b, n in enumerate(a.blocks):
        vecs = [np.eye(n)[p] for p in range(n)]
        for p, q in itertools.combinations(range(n), 2):
            for phase in (1, -1, 1j, -1j):
                v = np.zeros(n, dtype=complex)
                v[p], v[q] = 1, phase
                vecs.append(v / np.sqrt(2))
        for v in vecs:
            mats = [np.outer(v, v.conj()) if j == b else np.zeros((m, m)) for j, m in enumerate(a.blocks)]
            out.append(AlgebraElement(a, mats))
    return out
