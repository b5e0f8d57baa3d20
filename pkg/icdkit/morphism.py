"""
icdkit - Morphisms

A morphism A -> B of the involutive Markov category is stored through its
operator-algebra map phi^op: B ~> A, as a dim(A) x dim(B) matrix on canonical
coordinates. The categorical API (dom/cod, compose(psi, phi) = psi after phi)
is kept while all reversals happen on the matrices.

Unitality is a predicate, not a construction requirement: generalized maps
such as x -> diag(x, tr x, tr x) must be representable. Structural maps are
unital by construction.

Organization:
1. UMap and ChoiMatrix value types
2. Structure: identity, copy, delete, swap, compose, tensor, involution
3. Constructors: from functions, Kraus operators, random CPU maps, effects
4. Positivity: Choi test and the plain positivity witness search
5. Predicates: determinism, compatibility, non-invasiveness, Kadison-Schwarz
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from icdkit.algebra import (
    AlgebraElement, BlockAlgebra, DEFAULT_TOL, in_unit_interval, make_algebra,
    min_eigenvalue, norm, pair_index_map, positive_spanning_set, star, structure_constants,
    tensor_algebra, transpose_index, unit_algebra,
)
from icdkit.config import Settings
from icdkit.errors import (
    EffectRangeError, ShapeMismatchError, checked,
)

logger = logging.getLogger(__name__)

WITNESS_BATCH = 50


@dataclass(frozen=True, eq=False)
class UMap:
    """Categorical morphism dom -> cod, held as the op-matrix of cod ~> dom."""
    dom: BlockAlgebra
    cod: BlockAlgebra
    op_matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.op_matrix, dtype=complex)
        if m.shape != (self.dom.dim, self.cod.dim):
            raise ShapeMismatchError(
                f"op-matrix of shape {m.shape} for a map {self.dom} -> {self.cod} "
                f"(expected {(self.dom.dim, self.cod.dim)})")
        m.setflags(write=False)
        object.__setattr__(self, "op_matrix", m)

    def apply(self, x: AlgebraElement) -> AlgebraElement:
        """phi^op(x) for x in the categorical codomain."""
        if x.parent != self.cod:
            raise ShapeMismatchError(f"element of {x.parent} fed to op-map of {self.cod} -> {self.dom}")
        return self.dom.from_vector(self.op_matrix @ x.vector())

    def residual(self, other: "UMap") -> float:
        if self.dom != other.dom or self.cod != other.cod:
            raise ShapeMismatchError(f"cannot compare {self} with {other}")
        if self.op_matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.op_matrix - other.op_matrix)))

    def allclose(self, other: "UMap", tol: float = 1e-12) -> bool:
        return self.residual(other) <= tol

    def __repr__(self):
        return f"UMap({self.dom} -> {self.cod})"


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi blocks keyed by (cod block j, dom block i): sum_rs e_rs (x) phi^op(e_rs)_i."""
    blocks: Dict[Tuple[int, int], np.ndarray]

    @property
    def psd_block(self) -> np.ndarray:
        mats = [self.blocks[k] for k in sorted(self.blocks)]
        return scipy.linalg.block_diag(*mats) if mats else np.zeros((0, 0), dtype=complex)

    def hermiticity_residual(self) -> float:
        return max((float(np.max(np.abs(c - c.conj().T))) for c in self.blocks.values()), default=0.0)

    @checked
    def min_eigenvalue(self) -> float:
        values = [scipy.linalg.eigvalsh((c + c.conj().T) / 2).min() for c in self.blocks.values() if c.size]
        return float(min(values)) if values else 0.0


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------

def _tensor_matrix(a: np.ndarray, b: np.ndarray, rows: Tuple[BlockAlgebra, BlockAlgebra],
                   cols: Tuple[BlockAlgebra, BlockAlgebra]) -> np.ndarray:
    """Kronecker product of two op-matrices moved to canonical row/column coordinates."""
    out = np.zeros((a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]), dtype=complex)
    out[np.ix_(pair_index_map(*rows), pair_index_map(*cols))] = np.kron(a, b)
    return out


class Structure:
    """Category structure: identities, composition, tensor, involution and the comonoid maps."""

    @staticmethod
    def identity(a: BlockAlgebra) -> UMap:
        return UMap(a, a, np.eye(a.dim))

    @staticmethod
    def compose(psi: UMap, phi: UMap) -> UMap:
        """psi after phi; op-matrices multiply in reverse."""
        if phi.cod != psi.dom:
            raise ShapeMismatchError(f"cannot compose {psi} after {phi}")
        return UMap(phi.dom, psi.cod, phi.op_matrix @ psi.op_matrix)

    @staticmethod
    def tensor(phi: UMap, psi: UMap) -> UMap:
        m = _tensor_matrix(phi.op_matrix, psi.op_matrix, (phi.dom, psi.dom), (phi.cod, psi.cod))
        return UMap(tensor_algebra(phi.dom, psi.dom), tensor_algebra(phi.cod, psi.cod), m)

    @staticmethod
    def involution(phi: UMap) -> UMap:
        """The map x -> phi^op(x^*)^*."""
        t_dom = transpose_index(phi.dom.blocks)
        t_cod = transpose_index(phi.cod.blocks)
        return UMap(phi.dom, phi.cod, phi.op_matrix[np.ix_(t_dom, t_cod)].conj())

    @staticmethod
    def copy(a: BlockAlgebra) -> UMap:
        """op: x (x) y -> xy."""
        d = a.dim
        m = np.zeros((d, d * d), dtype=complex)
        m[:, pair_index_map(a, a)] = structure_constants(a).reshape(d, d * d)
        return UMap(a, tensor_algebra(a, a), m)

    @staticmethod
    def delete(a: BlockAlgebra) -> UMap:
        """op: lambda -> lambda 1."""
        return UMap(a, unit_algebra(), a.unit_vector().reshape(-1, 1))

    @staticmethod
    def swap(a: BlockAlgebra, b: BlockAlgebra) -> UMap:
        """Categorical A (x) B -> B (x) A; op: y (x) x -> x (x) y."""
        m = np.zeros((a.dim * b.dim, a.dim * b.dim), dtype=complex)
        i, j = np.meshgrid(np.arange(a.dim), np.arange(b.dim), indexing="ij")
        m[pair_index_map(a, b)[(i * b.dim + j).reshape(-1)],
          pair_index_map(b, a)[(j * a.dim + i).reshape(-1)]] = 1.0
        return UMap(tensor_algebra(a, b), tensor_algebra(b, a), m)

    @staticmethod
    def product_map(phi: UMap, psi: UMap) -> UMap:
        """<phi, psi> = (phi (x) psi) after copy; op: x (x) y -> phi^op(x) psi^op(y)."""
        if phi.dom != psi.dom:
            raise ShapeMismatchError(f"<phi, psi> needs a common domain, got {phi.dom} and {psi.dom}")
        return Structure.compose(Structure.tensor(phi, psi), Structure.copy(phi.dom))

    @staticmethod
    def power(phi: UMap, n: int) -> UMap:
        """phi^(n) = <phi^(n-1), phi>, phi^(0) = delete."""
        if n < 0:
            raise ShapeMismatchError(f"negative power {n}")
        out = Structure.delete(phi.dom)
        for _ in range(n):
            out = Structure.product_map(out, phi)
        return out


identity = Structure.identity
compose = Structure.compose
tensor = Structure.tensor
involution = Structure.involution
copy = Structure.copy
delete = Structure.delete
swap = Structure.swap
product_map = Structure.product_map
power = Structure.power


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def from_op_function(dom: BlockAlgebra, cod: BlockAlgebra,
                     fn: Callable[[AlgebraElement], AlgebraElement]) -> UMap:
    """Tabulate a linear op-map cod ~> dom given as a Python function on elements."""
    cols = [fn(b).vector() for b in cod.basis()]
    m = np.stack(cols, axis=1) if cols else np.zeros((dom.dim, 0), dtype=complex)
    return UMap(dom, cod, m)


def _embed(a: BlockAlgebra, x: AlgebraElement) -> np.ndarray:
    return scipy.linalg.block_diag(*x.mats) if x.mats else np.zeros((0, 0), dtype=complex)


def _compress(a: BlockAlgebra, big: np.ndarray) -> AlgebraElement:
    mats, off = [], 0
    for n in a.blocks:
        mats.append(big[off:off + n, off:off + n])
        off += n
    return AlgebraElement(a, mats)


def from_kraus(dom: BlockAlgebra, cod: BlockAlgebra, kraus: Sequence[np.ndarray]) -> UMap:
    """op: x -> compress_dom(sum_k K_k^* x K_k), K_k of shape (sum cod blocks) x (sum dom blocks)."""
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    shape = (sum(cod.blocks), sum(dom.blocks))
    for k in kraus:
        if k.shape != shape:
            raise ShapeMismatchError(f"Kraus operator of shape {k.shape}, expected {shape}")

    def op(x: AlgebraElement) -> AlgebraElement:
        big = _embed(cod, x)
        start = np.zeros((shape[1], shape[1]), dtype=complex)
        return _compress(dom, sum((k.conj().T @ big @ k for k in kraus), start))
    return from_op_function(dom, cod, op)


@checked
def random_cpu_map(dom: BlockAlgebra, cod: BlockAlgebra, rng: np.random.Generator,
                   rank: int = 2) -> UMap:
    """Random CPU map from normalized random Kraus operators."""
    shape = (sum(cod.blocks), sum(dom.blocks))
    kraus = [rng.normal(size=shape) + 1j * rng.normal(size=shape) for _ in range(max(1, rank))]
    total = _compress(dom, sum(k.conj().T @ k for k in kraus))
    fix = []
    for s in total.mats:
        w, v = scipy.linalg.eigh((s + s.conj().T) / 2)
        fix.append(v @ np.diag(w ** -0.5) @ v.conj().T)
    d = scipy.linalg.block_diag(*fix)
    return from_kraus(dom, cod, [k @ d for k in kraus])


def transpose_map(a: BlockAlgebra) -> UMap:
    """Blockwise transpose x -> x^T."""
    return from_op_function(a, a, lambda x: AlgebraElement(a, [m.T for m in x.mats]))


def conjugation_map(a: BlockAlgebra, u: AlgebraElement) -> UMap:
    """op: x -> u^* x u."""
    return from_op_function(a, a, lambda x: star(u) @ x @ u)


def block_projection(a: BlockAlgebra, blocks: Sequence[int]) -> UMap:
    """Categorical map from the sub-sum of the chosen blocks into A; op restricts x to those blocks."""
    blocks = list(blocks)
    sub = make_algebra([a.blocks[i] for i in blocks])
    return from_op_function(sub, a, lambda x: AlgebraElement(sub, [x.mats[i] for i in blocks]))


def effect_pair_algebra() -> BlockAlgebra:
    return make_algebra([1, 1])


def morphism_of_effect(a: AlgebraElement, require_cpu: bool = False, tol: float = DEFAULT_TOL) -> UMap:
    """Map A -> C^2 with op (b0, b1) -> b0 (1 - a) + b1 a; the image of (0, 1) is a."""
    if require_cpu and not in_unit_interval(a, tol):
        raise EffectRangeError("effect is not in the unit interval [0, 1]")
    alg = a.parent
    m = np.stack([(alg.unit() - a).vector(), a.vector()], axis=1)
    return UMap(alg, effect_pair_algebra(), m)


def effect_of(phi: UMap) -> AlgebraElement:
    if phi.cod != effect_pair_algebra():
        raise ShapeMismatchError(f"effects are maps into C^2, got codomain {phi.cod}")
    return phi.dom.from_vector(phi.op_matrix[:, 1])


# ---------------------------------------------------------------------------
# Positivity
# ---------------------------------------------------------------------------

def choi_matrix(phi: UMap) -> ChoiMatrix:
    out = {}
    for j, m in enumerate(phi.cod.blocks):
        for i, n in enumerate(phi.dom.blocks):
            images = phi.op_matrix[phi.dom.block_slice(i), phi.cod.block_slice(j)]
            out[(j, i)] = images.reshape(n, n, m, m).transpose(2, 0, 3, 1).reshape(m * n, m * n)
    return ChoiMatrix(out)


def is_completely_positive(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    choi = choi_matrix(phi)
    return choi.hermiticity_residual() <= tol and choi.min_eigenvalue() >= -tol


def is_unital(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    if phi.dom.dim == 0:
        return True
    return bool(np.max(np.abs(phi.op_matrix @ phi.cod.unit_vector() - phi.dom.unit_vector())) <= tol)


def is_total(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    """delete after phi equals delete; the same as unitality."""
    return compose(delete(phi.cod), phi).allclose(delete(phi.dom), tol)


def is_selfadjoint(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    return involution(phi).allclose(phi, tol)


@dataclass(frozen=True)
class PositivityWitness:
    """phi^op(v v^*) has <w, . w> = value < 0 (or a non-Hermitian part of size value)."""
    cod_block: int
    v: np.ndarray
    dom_block: int
    w: np.ndarray
    value: float
    kind: str = "negative"


@dataclass(frozen=True)
class PositivityVerdict:
    status: str  # positive | not_positive | unknown
    certified: bool
    witness: Optional[PositivityWitness] = None
    best_value: Optional[float] = None

    @property
    def positive(self) -> Optional[bool]:
        return {"positive": True, "not_positive": False}.get(self.status)


def _block_image(phi: UMap, j: int, i: int, v: np.ndarray) -> np.ndarray:
    """(phi^op(v v^*))_i for a vector v in cod block j."""
    n = phi.dom.blocks[i]
    x = np.outer(v, v.conj()).reshape(-1)
    return (phi.op_matrix[phi.dom.block_slice(i), phi.cod.block_slice(j)] @ x).reshape(n, n)


def _hermiticity_witness(phi: UMap, tol: float) -> Optional[PositivityWitness]:
    for j, m in enumerate(phi.cod.blocks):
        for v in _spanning_vectors(m):
            for i in range(len(phi.dom.blocks)):
                img = _block_image(phi, j, i, v)
                gap = float(np.max(np.abs(img - img.conj().T)))
                if gap > tol:
                    return PositivityWitness(j, v, i, np.zeros(phi.dom.blocks[i]), gap, "non_hermitian")
    return None


def _spanning_vectors(m: int) -> List[np.ndarray]:
    alg = make_algebra([m])
    out = []
    for p in positive_spanning_set(alg):
        w, v = scipy.linalg.eigh(p.mats[0])
        out.append(v[:, -1])
    return out


def _witness_batch(phi: UMap, seed: np.random.SeedSequence, samples: int, steps: int,
                   tol: float) -> Tuple[Optional[PositivityWitness], float]:
    """Alternating minimization of <w, phi^op(v v^*) w> from random starts."""
    rng = np.random.default_rng(seed)
    best = np.inf
    pairs = [(j, i) for j in range(len(phi.cod.blocks)) for i in range(len(phi.dom.blocks))]
    for s in range(samples):
        j, i = pairs[s % len(pairs)]
        m, n = phi.cod.blocks[j], phi.dom.blocks[i]
        block = phi.op_matrix[phi.dom.block_slice(i), phi.cod.block_slice(j)].reshape(n, n, m, m)
        v = rng.normal(size=m) + 1j * rng.normal(size=m)
        v /= np.linalg.norm(v)
        value, w = np.inf, None
        for _ in range(max(1, steps)):
            img = _block_image(phi, j, i, v)
            vals, vecs = scipy.linalg.eigh((img + img.conj().T) / 2)
            w = vecs[:, 0]
            value = float(vals[0])
            if value < -tol:
                break
            # c_rs = <w, phi^op(e_rs) w>; <w, phi^op(v v^*) w> = v^* C^T v
            c = np.einsum("a,abrs,b->rs", w.conj(), block, w)
            h = c.T
            _, hvecs = scipy.linalg.eigh((h + h.conj().T) / 2)
            v = hvecs[:, 0]
        best = min(best, value)
        if value < -tol:
            return PositivityWitness(j, v, i, w, value), best
    return None, best


@checked
def is_positive(phi: UMap, settings: Optional[Settings] = None) -> PositivityVerdict:
    """Semi-decide plain positivity: certified for CP maps and for found witnesses."""
    settings = settings or Settings()
    tol = settings.tol
    if is_completely_positive(phi, tol):
        return PositivityVerdict("positive", True)
    witness = _hermiticity_witness(phi, tol)
    if witness is not None:
        return PositivityVerdict("not_positive", True, witness)
    if settings.positivity_samples == 0 or not phi.cod.blocks or not phi.dom.blocks:
        return PositivityVerdict("unknown", False)
    sizes = [WITNESS_BATCH] * (settings.positivity_samples // WITNESS_BATCH)
    if settings.positivity_samples % WITNESS_BATCH:
        sizes.append(settings.positivity_samples % WITNESS_BATCH)
    seeds = np.random.SeedSequence(settings.seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        results = list(pool.map(lambda args: _witness_batch(phi, args[0], args[1], settings.positivity_steps, tol),
                                zip(seeds, sizes)))
    best = min(r[1] for r in results)
    for witness, _ in results:
        if witness is not None:
            logger.info(f"Positivity witness found: value {witness.value:.3e}")
            return PositivityVerdict("not_positive", True, witness, witness.value)
    return PositivityVerdict("positive", False, None, best)


# ---------------------------------------------------------------------------
# Predicates
# ---------------------------------------------------------------------------

def _op_norm(phi: UMap) -> float:
    return float(np.linalg.norm(phi.op_matrix, 2)) if phi.op_matrix.size else 0.0


def multiplicativity_residual(phi: UMap) -> float:
    """max |phi(xy) - phi(x)phi(y)| over basis pairs, i.e. copy after phi against (phi (x) phi) after copy."""
    lhs = compose(copy(phi.cod), phi)
    rhs = compose(tensor(phi, phi), copy(phi.dom))
    return lhs.residual(rhs)


def is_deterministic(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    """Self-adjoint, total and multiplicative: phi^op is a unital *-homomorphism."""
    if phi.dom.is_zero:
        return True
    scale = max(tol, 1e-9 * (1 + _op_norm(phi)))
    return (is_selfadjoint(phi, tol) and is_unital(phi, tol)
            and multiplicativity_residual(phi) <= scale)


def classicality_residual(a: BlockAlgebra) -> float:
    return compose(swap(a, a), copy(a)).residual(copy(a))


def is_classical(a: BlockAlgebra, tol: float = DEFAULT_TOL) -> bool:
    """swap after copy equals copy."""
    return classicality_residual(a) <= tol


def _range_blocks(phi: UMap, i: int) -> np.ndarray:
    n = phi.dom.blocks[i]
    return phi.op_matrix[phi.dom.block_slice(i), :].T.reshape(-1, n, n)


def compatibility_residual(phi: UMap, psi: UMap) -> float:
    if phi.dom != psi.dom:
        raise ShapeMismatchError(f"compatibility needs a common domain, got {phi.dom} and {psi.dom}")
    worst = 0.0
    for i in range(len(phi.dom.blocks)):
        a, b = _range_blocks(phi, i), _range_blocks(psi, i)
        if not a.size or not b.size:
            continue
        comm = np.einsum("xij,yjk->xyik", a, b) - np.einsum("yij,xjk->xyik", b, a)
        worst = max(worst, float(np.max(np.abs(comm))))
    return worst


def is_compatible(phi: UMap, psi: UMap, tol: float = DEFAULT_TOL) -> bool:
    """Ranges of the op-maps commute elementwise."""
    return compatibility_residual(phi, psi) <= tol


def is_autocompatible(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    return is_compatible(phi, phi, tol)


def is_noninvasive(phi: UMap, tol: float = DEFAULT_TOL) -> bool:
    """Compatible with the identity, i.e. the range lies in the center."""
    return is_compatible(phi, identity(phi.dom), tol)


def displays_compatibility(phi: UMap, psi: UMap, tol: float = 1e-8) -> bool:
    """Compatible CP maps have a CP product map."""
    if not is_compatible(phi, psi, tol):
        return True
    return is_completely_positive(product_map(phi, psi), tol)


def kadison_schwarz_gap(phi: UMap, x: AlgebraElement) -> float:
    """Smallest eigenvalue of phi^op(x^* x) - phi^op(x)^* phi^op(x)."""
    fx = phi.apply(x)
    return min_eigenvalue(phi.apply(star(x) @ x) - star(fx) @ fx)


def kadison_schwarz_check(phi: UMap, x: AlgebraElement, tol: float = DEFAULT_TOL) -> bool:
    if not is_completely_positive(phi, tol):
        logger.warning("Kadison-Schwarz check on a map that is not completely positive")
    return kadison_schwarz_gap(phi, x) >= -tol


def find_kadison_schwarz_violation(phi: UMap, tol: float = DEFAULT_TOL) -> Optional[Tuple[AlgebraElement, float]]:
    """Search the matrix units for an element violating the inequality."""
    for x in phi.cod.basis():
        gap = kadison_schwarz_gap(phi, x)
        if gap < -tol:
            return x, gap
    return None


def op_norm_on_selfadjoints(phi: UMap, rng: np.random.Generator, samples: int = 200) -> float:
    """Sampled lower bound of sup ||phi^op(x)|| / ||x|| over self-adjoint x."""
    best = 0.0
    for _ in range(samples):
        y = phi.cod.random_element(rng)
        x = y + star(y)
        nx = norm(x)
        if nx > 0:
            best = max(best, norm(phi.apply(x)) / nx)
    return best


def classify(phi: UMap, settings: Optional[Settings] = None) -> Dict[str, dict]:
    """All predicates of a single map with the residuals behind them."""
    settings = settings or Settings()
    tol = settings.tol
    choi = choi_matrix(phi)
    positivity = is_positive(phi, settings)
    unit_res = float(np.max(np.abs(phi.op_matrix @ phi.cod.unit_vector() - phi.dom.unit_vector()), initial=0.0))
    verdicts = {
        "selfadjoint": is_selfadjoint(phi, tol),
        "unital": is_unital(phi, tol),
        "total": is_total(phi, tol),
        "cp": is_completely_positive(phi, tol),
        "positive": positivity.status,
        "deterministic": is_deterministic(phi, tol),
        "autocompatible": is_autocompatible(phi, tol),
        "noninvasive": is_noninvasive(phi, tol),
    }
    residuals = {
        "selfadjoint": involution(phi).residual(phi),
        "unital": unit_res,
        "choi_min_eigenvalue": choi.min_eigenvalue(),
        "choi_hermiticity": choi.hermiticity_residual(),
        "multiplicativity": multiplicativity_residual(phi),
        "autocompatibility": compatibility_residual(phi, phi),
        "noninvasiveness": compatibility_residual(phi, identity(phi.dom)),
    }
    if positivity.best_value is not None:
        residuals["positivity_best_value"] = float(positivity.best_value)
    return {"verdicts": verdicts, "residuals": residuals}
