"""
icdkit - involutive Markov categories of finite-dimensional C*-algebras.

Objects are block algebras, morphisms are completely positive unital maps held
in the operator direction, and the structure maps (copy, delete, swap, the
involution) are exact matrices. On top sit a string-diagram language, the
nullspace characterization of almost-sure equality, finite tensor powers with
exchangeable families, de Finetti tooling and a symbolic state-space layer.
"""

from icdkit.algebra import (
    AlgebraElement, BlockAlgebra, make_algebra, tensor_algebra, tensor_algebras, tensor_element, unit_algebra,
)
from icdkit.config import Settings, load_settings
from icdkit.errors import IcdKitError
from icdkit.morphism import (
    UMap, compose, copy, delete, identity, involution, is_completely_positive, random_cpu_map, swap, tensor,
)
from icdkit.states import StateOnAlgebra

__version__ = "0.1.0"

__all__ = [
    "AlgebraElement", "BlockAlgebra", "IcdKitError", "Settings", "StateOnAlgebra", "UMap",
    "compose", "copy", "delete", "identity", "involution", "is_completely_positive", "load_settings",
    "make_algebra", "random_cpu_map", "swap", "tensor", "tensor_algebra", "tensor_algebras",
    "tensor_element", "unit_algebra",
]
