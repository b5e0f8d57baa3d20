"""
icdkit - States

A state on a block algebra is a weighted family of density matrices,
psi(x) = sum_i w_i tr(rho_i x_i). As a morphism it is a map C -> A whose
op-matrix is the single row of the functional.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from icdkit.algebra import (
    AlgebraElement, BlockAlgebra, kron_to_canonical, tensor_algebras, unit_algebra,
)
from icdkit.errors import InvalidAlgebraError, ShapeMismatchError, WeightError
from icdkit.morphism import UMap

logger = logging.getLogger(__name__)

STATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateOnAlgebra:
    parent: BlockAlgebra
    densities: tuple
    weights: tuple

    def __post_init__(self):
        dens = tuple(np.array(d, dtype=complex) for d in self.densities)
        weights = tuple(float(w) for w in self.weights)
        if len(dens) != len(self.parent.blocks) or len(weights) != len(self.parent.blocks):
            raise InvalidAlgebraError(f"a state on {self.parent} needs {len(self.parent.blocks)} blocks")
        if any(w < -STATE_TOL for w in weights) or abs(sum(weights) - 1) > 1e-9:
            raise WeightError(f"block weights {weights} are not a probability vector")
        for d, n in zip(dens, self.parent.blocks):
            if d.shape != (n, n):
                raise InvalidAlgebraError(f"density of shape {d.shape} in a block of size {n}")
            if np.max(np.abs(d - d.conj().T)) > 1e-9 or abs(np.trace(d) - 1) > 1e-9:
                raise InvalidAlgebraError("density matrices must be Hermitian with unit trace")
            if scipy.linalg.eigvalsh((d + d.conj().T) / 2).min() < -1e-8:
                raise InvalidAlgebraError("density matrices must be positive semidefinite")
            d.setflags(write=False)
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "weights", weights)
        row = np.concatenate([w * d.T.reshape(-1) for w, d in zip(weights, dens)]) if dens else np.zeros(0)
        row = row.astype(complex)
        row.setflags(write=False)
        object.__setattr__(self, "_functional", row)

    @property
    def functional(self) -> np.ndarray:
        """Row r with psi(x) = r . vector(x)."""
        return self._functional

    @classmethod
    def from_functional(cls, parent: BlockAlgebra, row) -> "StateOnAlgebra":
        row = np.asarray(row, dtype=complex).reshape(-1)
        if row.shape[0] != parent.dim:
            raise ShapeMismatchError(f"functional of length {row.shape[0]} on algebra of dim {parent.dim}")
        dens, weights = [], []
        for i, n in enumerate(parent.blocks):
            m = row[parent.block_slice(i)].reshape(n, n).T
            m = (m + m.conj().T) / 2
            w = float(np.trace(m).real)
            if w > STATE_TOL:
                dens.append(m / w)
                weights.append(w)
            else:
                dens.append(np.eye(n) / n)
                weights.append(0.0)
        total = sum(weights)
        if total <= 0:
            raise WeightError("functional has zero total weight")
        return cls(parent, dens, [w / total for w in weights])

    @classmethod
    def from_block_densities(cls, parent: BlockAlgebra, mats, tol: float = 1e-9) -> "StateOnAlgebra":
        """Inverse of block_densities. Unlike from_functional, nothing is symmetrized or rescaled."""
        mats = [np.asarray(m, dtype=complex) for m in mats]
        if len(mats) != len(parent.blocks):
            raise InvalidAlgebraError(f"a state on {parent} needs {len(parent.blocks)} blocks")
        for i, (m, n) in enumerate(zip(mats, parent.blocks)):
            if m.shape != (n, n):
                raise ShapeMismatchError(f"block {i}: matrix of shape {m.shape} in a block of size {n}")
            if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
                raise InvalidAlgebraError(f"block {i}: matrix is not Hermitian")
            if scipy.linalg.eigvalsh((m + m.conj().T) / 2).min() < -tol:
                raise InvalidAlgebraError(f"block {i}: matrix is not positive semidefinite")
        total = sum(float(np.trace(m).real) for m in mats)
        if abs(total - 1) > tol:
            raise WeightError(f"block traces sum to {total:.6g}, not 1")
        return cls.from_functional(parent, np.concatenate([m.T.reshape(-1) for m in mats]))

    def __call__(self, x: AlgebraElement) -> complex:
        return self.evaluate(x)

    def evaluate(self, x: AlgebraElement) -> complex:
        if x.parent != self.parent:
            raise ShapeMismatchError(f"state on {self.parent} evaluated on {x.parent}")
        return complex(self.functional @ x.vector())

    def block_densities(self) -> list:
        """w_i rho_i per block."""
        return [w * d for w, d in zip(self.weights, self.densities)]

    def residual(self, other: "StateOnAlgebra") -> float:
        if other.parent != self.parent:
            raise ShapeMismatchError(f"cannot compare states on {self.parent} and {other.parent}")
        return float(np.max(np.abs(self.functional - other.functional), initial=0.0))

    def __repr__(self):
        return f"StateOnAlgebra({self.parent}, weights={list(self.weights)})"


def state_to_map(psi: StateOnAlgebra) -> UMap:
    return UMap(unit_algebra(), psi.parent, psi.functional.reshape(1, -1))


def map_to_state(phi: UMap) -> StateOnAlgebra:
    if phi.dom != unit_algebra():
        raise ShapeMismatchError(f"states are maps out of C, got domain {phi.dom}")
    return StateOnAlgebra.from_functional(phi.cod, phi.op_matrix[0])


def maximally_mixed(a: BlockAlgebra) -> StateOnAlgebra:
    """Normalized trace."""
    total = sum(a.blocks)
    return StateOnAlgebra(a, [np.eye(n) / n for n in a.blocks], [n / total for n in a.blocks])


def pure_state(a: BlockAlgebra, vector, block: int = 0) -> StateOnAlgebra:
    v = np.asarray(vector, dtype=complex)
    if v.shape != (a.blocks[block],):
        raise ShapeMismatchError(f"vector of shape {v.shape} in block of size {a.blocks[block]}")
    v = v / np.linalg.norm(v)
    dens = [np.outer(v, v.conj()) if i == block else np.eye(n) / n for i, n in enumerate(a.blocks)]
    return StateOnAlgebra(a, dens, [1.0 if i == block else 0.0 for i in range(len(a.blocks))])


def point_state(a: BlockAlgebra, block: int) -> StateOnAlgebra:
    """Evaluation at one coordinate of a commutative algebra."""
    return pure_state(a, np.eye(a.blocks[block])[0], block)


def classical_state(a: BlockAlgebra, probabilities: Sequence[float]) -> StateOnAlgebra:
    """Probability vector on C^m."""
    return StateOnAlgebra(a, [np.eye(n) / n for n in a.blocks], list(probabilities))


def random_state(a: BlockAlgebra, rng: np.random.Generator, rank: Optional[int] = None) -> StateOnAlgebra:
    mats = []
    for n in a.blocks:
        k = n if rank is None else max(1, min(rank, n))
        g = rng.normal(size=(n, k)) + 1j * rng.normal(size=(n, k))
        mats.append(g @ g.conj().T)
    total = sum(float(np.trace(m).real) for m in mats)
    return StateOnAlgebra(a, [m / np.trace(m).real for m in mats], [np.trace(m).real / total for m in mats])


def product_state(states: Sequence[StateOnAlgebra]) -> StateOnAlgebra:
    """psi_1 (x) ... (x) psi_k on the left-folded tensor product."""
    factors = [s.parent for s in states]
    row = np.ones(1, dtype=complex)
    for s in states:
        row = np.kron(row, s.functional)
    return StateOnAlgebra.from_functional(tensor_algebras(factors), kron_to_canonical(row, factors))


def mix_states(states: Sequence[StateOnAlgebra], weights: Sequence[float]) -> StateOnAlgebra:
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise WeightError(f"mixture weights {weights.tolist()} are not a probability vector")
    parent = states[0].parent
    if any(s.parent != parent for s in states):
        raise ShapeMismatchError("states of a mixture must live on one algebra")
    return StateOnAlgebra.from_functional(parent, sum(w * s.functional for w, s in zip(weights, states)))

