"""
icdkit - de Finetti toolkit

Desk-scale machinery around exchangeable families of states:

- the Bloch ball parameterization of states on M2
- conditioning an exchangeable state on a positive element of its first slot
- the extremality identity phi(a (x) y) = phi(a (x) 1) phi(y)
- moment matrices of word moments (PSD is necessary for a product-state mixture)
- the QA seminorm sup_psi |psi^(k)(x)| by multi-start projected gradient ascent
- finite mixing measures: forward construction, verification and, for
  commutative base algebras, Prony reconstruction from moments
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from icdkit.algebra import (
    AlgebraElement, BlockAlgebra, DEFAULT_TOL, is_commutative, is_positive, make_algebra,
    pair_index_map, positive_spanning_set, self_adjoint_basis, tensor_index_map, unit_algebra,
)
from icdkit.config import Settings
from icdkit.errors import (
    EffectRangeError, InsufficientDegreeError, MomentSequenceError, NonCommutativeError,
    ShapeMismatchError, checked,
)
from icdkit.power import (
    ExchangeableFamily, is_exchangeable_state, marginal, mixture_family, tensor_power,  # noqa: F401
)
from icdkit.states import (  # noqa: F401  (re-exported)
    StateOnAlgebra, classical_state, map_to_state, maximally_mixed, mix_states, point_state, product_state,
    pure_state, random_state, state_to_map,
)

logger = logging.getLogger(__name__)

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


# ---------------------------------------------------------------------------
# Bloch ball
# ---------------------------------------------------------------------------

def qubit_algebra() -> BlockAlgebra:
    return make_algebra([2])


def bloch(r: Sequence[float]) -> StateOnAlgebra:
    """rho = (1 + r . sigma) / 2 on M2."""
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ShapeMismatchError(f"a Bloch vector has 3 components, got shape {r.shape}")
    if np.linalg.norm(r) > 1 + 1e-12:
        raise EffectRangeError(f"Bloch vector of norm {np.linalg.norm(r):.6g} lies outside the unit ball")
    rho = (np.eye(2) + sum(c * s for c, s in zip(r, PAULI))) / 2
    return StateOnAlgebra(qubit_algebra(), [rho], [1.0])


def bloch_inverse(psi: StateOnAlgebra) -> np.ndarray:
    if psi.parent != qubit_algebra():
        raise ShapeMismatchError(f"Bloch coordinates exist for states on M2, not on {psi.parent}")
    rho = psi.densities[0]
    return np.array([float(np.trace(rho @ s).real) for s in PAULI])


def purity(psi: StateOnAlgebra) -> float:
    """sum_i w_i^2 tr(rho_i^2); equals 1 exactly for pure states."""
    return float(sum(w * w * np.trace(d @ d).real for w, d in zip(psi.weights, psi.densities)))


def is_pure(psi: StateOnAlgebra, tol: float = DEFAULT_TOL) -> bool:
    return 1 - purity(psi) <= tol


# ---------------------------------------------------------------------------
# Conditioning and extremality
# ---------------------------------------------------------------------------

def _split_first_slot(fam_state: StateOnAlgebra, a: BlockAlgebra, rest: BlockAlgebra) -> np.ndarray:
    """F[x, l] = phi(b_x (x) b_l) for basis b_x of A and b_l of the remaining slots."""
    if fam_state.parent.dim != a.dim * rest.dim:
        raise ShapeMismatchError(f"state on {fam_state.parent} does not split as {a} (x) {rest}")
    return fam_state.functional[pair_index_map(a, rest)].reshape(a.dim, rest.dim)


class ConditionalState(NamedTuple):
    weight: float
    state: Optional[StateOnAlgebra]


def conditional_state(phi: StateOnAlgebra, a: AlgebraElement, n: int, side: Optional[BlockAlgebra] = None,
                      tol: float = 1e-10) -> ConditionalState:
    """lambda = phi(a (x) 1) and y -> phi(a (x) y) / lambda on the remaining n-1 slots."""
    base = a.parent
    if not is_positive(a, DEFAULT_TOL):
        raise EffectRangeError("conditioning needs a positive element")
    if n < 1:
        raise InsufficientDegreeError("conditioning needs at least one slot")
    side = unit_algebra() if side is None else side
    if phi.parent != tensor_power(base, n, side):
        raise ShapeMismatchError(f"state on {phi.parent} is not on the degree {n} power of {base}")
    rest = tensor_power(base, n - 1, side)
    f = a.vector() @ _split_first_slot(phi, base, rest)
    weight = float((f @ rest.unit_vector()).real)
    if weight <= tol:
        worst = float(np.max(np.abs(f), initial=0.0))
        if worst > tol:
            raise MomentSequenceError(f"phi(a (x) 1) vanishes but phi(a (x) y) reaches {worst:.3e}")
        return ConditionalState(max(weight, 0.0), None)
    cond = StateOnAlgebra.from_functional(rest, f / weight)
    if n - 1 >= 2 and not is_exchangeable_state(cond, base, n - 1, side, 1e-8):
        logger.warning("Conditional state is not exchangeable; the input state was not exchangeable either")
    return ConditionalState(weight, cond)


def extremality_identity_residual(fam: ExchangeableFamily, k: int) -> float:
    """max |phi(a (x) y) - phi(a (x) 1) phi(y)| over positive spanning a and basis y of A^k (x) B."""
    if k + 1 > fam.max_degree:
        raise InsufficientDegreeError(f"the extremality identity at degree {k} needs degree {k + 1}, "
                                      f"family stops at {fam.max_degree}")
    a = fam.base
    rest = tensor_power(a, k, fam.side)
    table = _split_first_slot(fam.state(k + 1), a, rest)
    marg = a.unit_vector() @ table
    worst = 0.0
    for p in positive_spanning_set(a):
        row = p.vector() @ table
        scale = row @ rest.unit_vector()
        worst = max(worst, float(np.max(np.abs(row - scale * marg), initial=0.0)))
    return worst


def distinguishing_observable(psi1: StateOnAlgebra, psi2: StateOnAlgebra,
                              tol: float = 1e-12) -> Optional[Tuple[AlgebraElement, float]]:
    """Self-adjoint a with psi1(a) - psi2(a) > 0, or None for equal states."""
    if psi1.parent != psi2.parent:
        raise ShapeMismatchError("states on different algebras")
    basis = self_adjoint_basis(psi1.parent)
    coeffs = [float((psi1(b) - psi2(b)).real) for b in basis]
    gap = sum(c * c for c in coeffs)
    if gap <= tol:
        return None
    a = psi1.parent.zero()
    for c, b in zip(coeffs, basis):
        a = a + c * b
    return a, gap


# ---------------------------------------------------------------------------
# Moment matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentMatrix:
    degree: int
    words: Tuple[Tuple[int, ...], ...]
    matrix: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return moment_psd_certificate(self)[0]


def words_up_to(letters: int, d: int) -> List[Tuple[int, ...]]:
    """All words of length <= d, by length then lexicographically."""
    return [w for n in range(d + 1) for w in itertools.product(range(letters), repeat=n)]


def _kron_functionals(fam: ExchangeableFamily, upto: int) -> List[np.ndarray]:
    out = []
    for m in range(upto + 1):
        t = tensor_index_map([fam.base] * m + [fam.side])
        out.append(fam.state(m).functional[t])
    return out


def moment_matrix(fam: ExchangeableFamily, d: int) -> MomentMatrix:
    """M[u, v] = phi_{|u|+|v|}(reversed(u) (x) v (x) 1_B) over a self-adjoint letter basis."""
    if 2 * d > fam.max_degree:
        raise InsufficientDegreeError(f"moment matrix of degree {d} needs family degree {2 * d}, "
                                      f"got {fam.max_degree}")
    letters = [b.vector() for b in self_adjoint_basis(fam.base)]
    side_unit = fam.side.unit_vector()
    funcs = _kron_functionals(fam, 2 * d)
    words = words_up_to(len(letters), d)
    m = np.zeros((len(words), len(words)), dtype=complex)
    for i, u in enumerate(words):
        for j, v in enumerate(words):
            vec = np.ones(1, dtype=complex)
            for letter in tuple(reversed(u)) + v:
                vec = np.kron(vec, letters[letter])
            m[i, j] = funcs[len(u) + len(v)] @ np.kron(vec, side_unit)
    return MomentMatrix(d, tuple(words), m)


@checked
def moment_psd_certificate(mm: MomentMatrix) -> Tuple[float, np.ndarray]:
    """Smallest eigenvalue of the Hermitian moment matrix and its eigenvector."""
    h = (mm.matrix + mm.matrix.conj().T) / 2
    vals, vecs = scipy.linalg.eigh(h)
    return float(vals[0]), vecs[:, 0]


def moment_psd_check(mm: MomentMatrix, tol: float = DEFAULT_TOL) -> bool:
    return moment_psd_certificate(mm)[0] >= -tol


# ---------------------------------------------------------------------------
# QA seminorm
# ---------------------------------------------------------------------------

class QAResult(NamedTuple):
    value: float
    psi: StateOnAlgebra
    omega: Optional[StateOnAlgebra]


def _functional(dens: List[np.ndarray]) -> np.ndarray:
    return np.concatenate([d.T.reshape(-1) for d in dens])


def _project_states(dens: List[np.ndarray]) -> List[np.ndarray]:
    """Nearest block-diagonal density matrix with total trace one."""
    decomp = [scipy.linalg.eigh((d + d.conj().T) / 2) for d in dens]
    values = np.concatenate([w for w, _ in decomp])
    u = np.sort(values)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - (css - 1) / ks > 0)[0][-1]
    theta = (css[rho] - 1) / (rho + 1)
    out = []
    for w, v in decomp:
        out.append((v * np.maximum(w - theta, 0)) @ v.conj().T)
    return out


class _PowerObjective:
    """psi^(k) (x) omega evaluated on a fixed tensor, with slot gradients."""

    def __init__(self, x: AlgebraElement, base: BlockAlgebra, k: int, side: Optional[BlockAlgebra]):
        factors = [base] * k + ([side] if side is not None else [])
        self.tensor = x.vector()[tensor_index_map(factors)].reshape([f.dim for f in factors])
        self.slots = [0] * k + ([1] if side is not None else [])

    def _contract(self, rows: List[np.ndarray], skip: int) -> np.ndarray:
        t = self.tensor
        for axis in reversed(range(len(self.slots))):
            if axis != skip:
                t = np.tensordot(t, rows[self.slots[axis]], axes=([axis], [0]))
        return t

    def value(self, rows: List[np.ndarray]) -> complex:
        return complex(self._contract(rows, -1))

    def gradients(self, rows: List[np.ndarray]) -> List[np.ndarray]:
        grads = [np.zeros_like(r) for r in rows]
        for s, var in enumerate(self.slots):
            grads[var] = grads[var] + self._contract(rows, s)
        return grads


def _ascent(obj: _PowerObjective, algebras: List[BlockAlgebra], seed: np.random.SeedSequence,
            steps: int, step_size: float) -> Tuple[float, List[List[np.ndarray]]]:
    rng = np.random.default_rng(seed)
    state = []
    for alg in algebras:
        mats = [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)) for n in alg.blocks]
        mats = [m.conj().T @ m for m in mats]
        total = sum(np.trace(m).real for m in mats)
        state.append([m / total for m in mats])
    rows = [_functional(s) for s in state]
    current = obj.value(rows)
    eta = step_size
    for _ in range(steps):
        phase = np.exp(-1j * np.angle(current)) if abs(current) > 0 else 1.0
        grads = obj.gradients(rows)
        moves = []
        for alg, g in zip(algebras, grads):
            blocks = [phase * g[alg.block_slice(i)].reshape(n, n) for i, n in enumerate(alg.blocks)]
            moves.append([(b + b.conj().T) / 2 for b in blocks])
        while eta > 1e-12:
            cand = [_project_states([d + eta * m for d, m in zip(s, mv)]) for s, mv in zip(state, moves)]
            cand_rows = [_functional(s) for s in cand]
            value = obj.value(cand_rows)
            if abs(value) >= abs(current) - 1e-15:
                state, rows, current = cand, cand_rows, value
                eta = min(eta * 1.5, step_size)
                break
            eta /= 2
        else:
            break
    return abs(current), state


def _to_state(alg: BlockAlgebra, dens: List[np.ndarray]) -> StateOnAlgebra:
    return StateOnAlgebra.from_functional(alg, _functional(dens))


@checked
def maximize_power_expectation(x: AlgebraElement, base: BlockAlgebra, k: int, settings: Optional[Settings] = None,
                               side: Optional[BlockAlgebra] = None) -> QAResult:
    """Best |(psi^(k) (x) omega)(x)| found over all restarts, with the maximizing states."""
    settings = settings or Settings()
    if k < 1:
        raise InsufficientDegreeError("the seminorm needs k >= 1")
    if x.parent != tensor_power(base, k, side):
        raise ShapeMismatchError(f"element of {x.parent} is not in the degree {k} power of {base}")
    obj = _PowerObjective(x, base, k, side)
    algebras = [base] + ([side] if side is not None else [])
    seeds = np.random.SeedSequence(settings.seed).spawn(settings.opt_restarts)
    with ThreadPoolExecutor(max_workers=settings.workers) as pool:
        results = list(pool.map(
            lambda s: _ascent(obj, algebras, s, settings.opt_steps, settings.opt_step_size), seeds))
    best_value, best_state = max(results, key=lambda r: r[0])
    logger.info(f"QA seminorm at degree {k}: best value {best_value:.6g} over {len(results)} restarts")
    psi = _to_state(base, best_state[0])
    omega = _to_state(side, best_state[1]) if side is not None else None
    return QAResult(best_value, psi, omega)


def qa_seminorm(x: AlgebraElement, base: BlockAlgebra, k: int, settings: Optional[Settings] = None,
                side: Optional[BlockAlgebra] = None) -> float:
    """Lower bound of sup over product powers |psi^(k)(x)| (with omega on a side factor)."""
    return maximize_power_expectation(x, base, k, settings, side).value


# ---------------------------------------------------------------------------
# Mixing measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MixingAtom:
    weight: float
    psi: StateOnAlgebra
    omega: Optional[StateOnAlgebra] = None


@dataclass(frozen=True, eq=False)
class MixingMeasure:
    atoms: Tuple[MixingAtom, ...]

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))

    @property
    def weights(self) -> List[float]:
        return [a.weight for a in self.atoms]

    def family(self, max_degree: int) -> ExchangeableFamily:
        omegas = None
        if any(a.omega is not None for a in self.atoms):
            omegas = [a.omega for a in self.atoms]
        return mixture_family(self.weights, [a.psi for a in self.atoms], omegas, max_degree)


def verify_measure(fam: ExchangeableFamily, measure: MixingMeasure) -> float:
    """Largest functional deviation between the family and the one generated by the measure."""
    generated = measure.family(fam.max_degree)
    if generated.base != fam.base or generated.side != fam.side:
        raise ShapeMismatchError("measure and family live on different algebras")
    return max(s.residual(g) for s, g in zip(fam.states, generated.states))


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    measure: MixingMeasure
    requested: int
    rank: int
    hankel_min_eigenvalue: float
    moment_error: float
    direction: np.ndarray

    def to_dict(self) -> dict:
        return {
            "requested_atoms": self.requested,
            "atoms": self.rank,
            "hankel_min_eigenvalue": self.hankel_min_eigenvalue,
            "moment_error": self.moment_error,
            "weights": [a.weight for a in self.measure.atoms],
            "points": [list(a.psi.weights)
                       for a in self.measure.atoms],
        }


def _direction(m: int, settings: Settings) -> np.ndarray:
    if m <= 2:
        return np.eye(m)[0]
    return np.random.default_rng(settings.seed).uniform(0.5, 1.5, size=m)


def _power_moments(funcs: List[np.ndarray], vec: np.ndarray, head: Optional[np.ndarray] = None) -> np.ndarray:
    """phi_k(vec^(x)k) or, with a head, phi_{k+1}(head (x) vec^(x)k)."""
    out = []
    for k, f in enumerate(funcs):
        if head is not None and k == 0:
            continue
        v = np.ones(1, dtype=complex) if head is None else head.astype(complex)
        for _ in range(k if head is None else k - 1):
            v = np.kron(v, vec)
        out.append(f @ v)
    return np.array(out)


@checked
def reconstruct_report(fam: ExchangeableFamily, d: int, settings: Optional[Settings] = None) -> ReconstructionReport:
    """Prony-type recovery of a finite mixing measure from the moments of a classical family."""
    settings = settings or Settings()
    a = fam.base
    if not is_commutative(a):
        raise NonCommutativeError("reconstruction needs a commutative base algebra; use verify_measure")
    if fam.side.dim != 1:
        raise ShapeMismatchError("reconstruction needs a trivial side factor")
    if d < 1 or 2 * d - 1 > fam.max_degree:
        raise InsufficientDegreeError(f"{d} atoms need moments up to degree {2 * d - 1}, "
                                      f"family stops at {fam.max_degree}")
    m = a.dim
    ell = _direction(m, settings)
    funcs = _kron_functionals(fam, fam.max_degree)
    s = _power_moments(funcs, ell).real
    hankel = scipy.linalg.hankel(s[:d], s[d - 1:2 * d - 1])
    hmin = float(scipy.linalg.eigvalsh(hankel).min())
    if hmin < -1e-6:
        raise MomentSequenceError(f"not a moment sequence (Hankel eigenvalue {hmin:.3e})")
    sv = scipy.linalg.svdvals(hankel)
    rank = int(np.sum(sv > 1e-9 * max(sv[0], 1.0)))
    if rank < d:
        logger.warning(f"Moment Hankel matrix has rank {rank}; reconstructing {rank} atoms instead of {d}")
    h0 = scipy.linalg.hankel(s[:rank], s[rank - 1:2 * rank - 1])
    h1 = scipy.linalg.hankel(s[1:rank + 1], s[rank:2 * rank])
    nodes = np.sort(scipy.linalg.eigvals(h1, h0).real)
    vander = np.vander(nodes, len(s), increasing=True).T
    weights = scipy.linalg.lstsq(vander, s)[0].real
    if np.any(weights <= 0):
        raise MomentSequenceError(f"not a moment sequence (weights {weights.tolist()})")
    mixed = np.stack([_power_moments(funcs, ell, head=np.eye(m)[i]).real for i in range(m)], axis=1)
    coords = scipy.linalg.lstsq(vander[:len(mixed)], mixed)[0] / weights[:, None]
    coords = np.clip(coords, 0.0, None)
    coords = coords / coords.sum(axis=1, keepdims=True)
    atoms = [MixingAtom(float(w), classical_state(a, c)) for w, c in zip(weights, coords)]
    measure = MixingMeasure(atoms)
    error = verify_measure(fam, measure)
    logger.info(f"Reconstructed {rank} atoms, moment error {error:.3e}")
    return ReconstructionReport(measure, d, rank, hmin, error, ell)


def reconstruct(fam: ExchangeableFamily, d: int, settings: Optional[Settings] = None,
                tol: float = 1e-6) -> MixingMeasure:
    report = reconstruct_report(fam, d, settings)
    if report.moment_error > tol:
        raise MomentSequenceError(f"reconstructed measure misses the moments by {report.moment_error:.3e}")
    return report.measure
