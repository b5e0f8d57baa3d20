"""
icdkit - Finite tensor powers

Kolmogorov powers are handled through their finite truncations: the algebras
A^(x)n (x) B with the side factor B always in the last slot, slot permutations,
slot projections, and degree-indexed families of states that are consistent
under projections and invariant under permutations of the A slots.

Permutations are 0-based tuples: sigma[k] is the slot read into slot k, so the
op-map sends x_0 (x) ... (x) x_{n-1} to x_sigma(0) (x) ... (x) x_sigma(n-1).
"""

import functools
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from icdkit.algebra import (
    BlockAlgebra, DEFAULT_TOL, tensor_algebras, tensor_index_map, unit_algebra,
)
from icdkit.errors import (
    InsufficientDegreeError, PermutationError, ShapeMismatchError, SlotError, WeightError,
)
from icdkit.morphism import UMap, compose
from icdkit.states import StateOnAlgebra, mix_states, product_state, state_to_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TensorPower:
    base: BlockAlgebra
    degree: int
    side: Optional[BlockAlgebra] = None

    @property
    def factors(self) -> List[BlockAlgebra]:
        return [self.base] * self.degree + ([self.side] if self.side is not None else [])

    @property
    def algebra(self) -> BlockAlgebra:
        return tensor_algebras(self.factors)


def tensor_power(a: BlockAlgebra, n: int, side: Optional[BlockAlgebra] = None) -> BlockAlgebra:
    if n < 0:
        raise SlotError(f"negative degree {n}")
    return TensorPower(a, n, side).algebra


def _side(side: Optional[BlockAlgebra]) -> BlockAlgebra:
    return unit_algebra() if side is None else side


def _check_permutation(sigma: Sequence[int], n: int) -> Tuple[int, ...]:
    sigma = tuple(int(s) for s in sigma)
    if sorted(sigma) != list(range(n)):
        raise PermutationError(f"{list(sigma)} is not a permutation of 0..{n - 1}")
    return sigma


@functools.lru_cache(maxsize=256)
def _permutation_matrix(a: BlockAlgebra, n: int, sigma: Tuple[int, ...], side: BlockAlgebra) -> np.ndarray:
    factors = [a] * n + [side]
    dims = (a.dim,) * n + (side.dim,)
    idx = np.arange(int(np.prod(dims))).reshape(dims)
    source = idx.transpose(tuple(sigma) + (n,)).reshape(-1)
    t = tensor_index_map(factors)
    m = np.zeros((len(source), len(source)))
    m[t, t[source]] = 1.0
    m.setflags(write=False)
    return m


def permutation_morphism(a: BlockAlgebra, n: int, sigma: Sequence[int],
                         side: Optional[BlockAlgebra] = None) -> UMap:
    """Deterministic map permuting the A slots; A_sigma after A_tau = A_(sigma o tau)."""
    sigma = _check_permutation(sigma, n)
    alg = tensor_power(a, n, side)
    return UMap(alg, alg, _permutation_matrix(a, n, sigma, _side(side)))


def adjacent_transpositions(n: int) -> List[Tuple[int, ...]]:
    out = []
    for k in range(n - 1):
        s = list(range(n))
        s[k], s[k + 1] = s[k + 1], s[k]
        out.append(tuple(s))
    return out


def projection(a: BlockAlgebra, n: int, slots: Sequence[int], side: Optional[BlockAlgebra] = None) -> UMap:
    """A^(x)n (x) B -> A^(x)|F'| (x) B; the op-map puts units into the deleted slots."""
    slots = [int(s) for s in slots]
    kept = sorted(set(slots))
    if len(kept) != len(slots) or any(s < 0 or s >= n for s in kept):
        raise SlotError(f"bad slot selection {list(slots)} for degree {n}")
    side = _side(side)
    unit = a.unit_vector().reshape(-1, 1)
    m = np.ones((1, 1), dtype=complex)
    for k in range(n):
        m = np.kron(m, np.eye(a.dim) if k in kept else unit)
    m = np.kron(m, np.eye(side.dim))
    rows = tensor_index_map([a] * n + [side])
    cols = tensor_index_map([a] * len(kept) + [side])
    out = np.zeros_like(m)
    out[np.ix_(rows, cols)] = m
    return UMap(tensor_power(a, n, side), tensor_power(a, len(kept), side), out)


def marginal(state: StateOnAlgebra, a: BlockAlgebra, n: int, slots: Sequence[int],
             side: Optional[BlockAlgebra] = None) -> StateOnAlgebra:
    """Restriction of a state on A^(x)n (x) B to the kept slots."""
    p = projection(a, n, slots, side)
    if state.parent != p.dom:
        raise ShapeMismatchError(f"state on {state.parent} is not a state on the degree {n} power")
    return StateOnAlgebra.from_functional(p.cod, state.functional @ p.op_matrix)


def exchangeability_residual(phi: UMap, a: BlockAlgebra, n: int, side: Optional[BlockAlgebra] = None) -> float:
    if phi.cod != tensor_power(a, n, side):
        raise ShapeMismatchError(f"{phi} does not land in the degree {n} power of {a}")
    worst = 0.0
    for sigma in adjacent_transpositions(n):
        worst = max(worst, compose(permutation_morphism(a, n, sigma, side), phi).residual(phi))
    return worst


def is_exchangeable(phi: UMap, a: BlockAlgebra, n: int, side: Optional[BlockAlgebra] = None,
                    tol: float = DEFAULT_TOL) -> bool:
    """Invariance under adjacent transpositions of the A slots, which generate S_n."""
    return exchangeability_residual(phi, a, n, side) <= tol


def is_exchangeable_state(state: StateOnAlgebra, a: BlockAlgebra, n: int,
                          side: Optional[BlockAlgebra] = None, tol: float = DEFAULT_TOL) -> bool:
    return is_exchangeable(state_to_map(state), a, n, side, tol)


@dataclass(frozen=True, eq=False)
class ExchangeableFamily:
    """States phi_n on A^(x)n (x) B for n = 0..max_degree."""
    base: BlockAlgebra
    side: BlockAlgebra
    states: Tuple[StateOnAlgebra, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        for n, s in enumerate(self.states):
            if s.parent != tensor_power(self.base, n, self.side):
                raise ShapeMismatchError(f"degree {n} state lives on {s.parent}")

    @property
    def max_degree(self) -> int:
        return len(self.states) - 1

    def state(self, n: int) -> StateOnAlgebra:
        if n > self.max_degree:
            raise InsufficientDegreeError(f"degree {n} requested from a family of maximal degree {self.max_degree}")
        return self.states[n]

    def truncate(self, n: int) -> "ExchangeableFamily":
        self.state(n)
        return ExchangeableFamily(self.base, self.side, self.states[:n + 1])


@dataclass
class FamilyReport:
    exchangeable: bool
    consistent: bool
    rows: List[Dict[str, float]]

    @property
    def max_exchangeability_residual(self) -> float:
        return max((r["exchangeability_residual"] for r in self.rows), default=0.0)

    @property
    def max_consistency_residual(self) -> float:
        return max((r["consistency_residual"] for r in self.rows), default=0.0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows).set_index("degree")


def family_check(fam: ExchangeableFamily, tol: float = DEFAULT_TOL) -> FamilyReport:
    """Permutation invariance at every degree and consistency along every slot deletion."""
    rows = []
    for n, s in enumerate(fam.states):
        exch = exchangeability_residual(state_to_map(s), fam.base, n, fam.side) if n >= 2 else 0.0
        cons = 0.0
        if n >= 1:
            lower = fam.states[n - 1]
            for drop in range(n):
                p = projection(fam.base, n, [k for k in range(n) if k != drop], fam.side)
                cons = max(cons, float(np.max(np.abs(s.functional @ p.op_matrix - lower.functional), initial=0.0)))
        rows.append({"degree": n, "exchangeability_residual": exch, "consistency_residual": cons})
    report = FamilyReport(
        exchangeable=all(r["exchangeability_residual"] <= tol for r in rows),
        consistent=all(r["consistency_residual"] <= tol for r in rows),
        rows=rows,
    )
    logger.info(f"Family check up to degree {fam.max_degree}: exchangeable={report.exchangeable}, "
                f"consistent={report.consistent}")
    return report


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or np.any(w <= 0) or abs(w.sum() - 1) > 1e-9:
        raise WeightError(f"weights {w.tolist()} must be positive and sum to 1")
    return w


def mixture_family(weights: Sequence[float], psis: Sequence[StateOnAlgebra],
                   omegas: Optional[Sequence[StateOnAlgebra]] = None, max_degree: int = 2) -> ExchangeableFamily:
    """Degree n member sum_j lambda_j psi_j^(n) (x) omega_j."""
    w = _check_weights(weights)
    if len(psis) != len(w) or (omegas is not None and len(omegas) != len(w)):
        raise ShapeMismatchError("one state pair per weight is required")
    base = psis[0].parent
    if omegas is None:
        trivial = StateOnAlgebra(unit_algebra(), [np.ones((1, 1))], [1.0])
        omegas = [trivial] * len(w)
    side = omegas[0].parent
    states = []
    for n in range(max_degree + 1):
        members = [product_state([psi] * n + [omega]) for psi, omega in zip(psis, omegas)]
        states.append(mix_states(members, w) if len(members) > 1 else members[0])
    return ExchangeableFamily(base, side, states)


def product_power_family(psi: StateOnAlgebra, omega: Optional[StateOnAlgebra] = None,
                         max_degree: int = 2) -> ExchangeableFamily:
    return mixture_family([1.0], [psi], None if omega is None else [omega], max_degree)


def convex_combination(families: Sequence[ExchangeableFamily], weights: Sequence[float]) -> ExchangeableFamily:
    w = _check_weights(weights)
    first = families[0]
    for f in families:
        if f.base != first.base or f.side != first.side or f.max_degree != first.max_degree:
            raise ShapeMismatchError("families of a convex combination must share base, side and degree")
    states = [mix_states([f.states[n] for f in families], w) for n in range(first.max_degree + 1)]
    return ExchangeableFamily(first.base, first.side, states)


def family_from_top_state(state: StateOnAlgebra, base: BlockAlgebra, max_degree: int,
                          side: Optional[BlockAlgebra] = None) -> ExchangeableFamily:
    """Truncations of one state on A^(x)N (x) B to the leading slots of every lower degree."""
    side = _side(side)
    states = [marginal(state, base, max_degree, range(n), side) for n in range(max_degree)]
    states.append(state)
    return ExchangeableFamily(base, side, states)
