"""
icdkit - Error types

Every failure raised by the library derives from IcdKitError so that callers
(the CLI in particular) can map domain errors to a single exit code. Numerical
failures coming out of numpy/scipy are wrapped by the ``checked`` decorator.
"""

import functools
import logging
from typing import Callable, Optional, TypeVar

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable)


class IcdKitError(Exception):
    """Base class for all icdkit errors."""


class InvalidAlgebraError(IcdKitError):
    """Block sizes or element shapes do not describe a valid algebra."""


class ParentMismatchError(IcdKitError):
    """Elements from different algebras were combined."""


class ShapeMismatchError(IcdKitError):
    """Domain/codomain or matrix shapes do not line up."""


class NotCompletelyPositiveError(IcdKitError):
    """An operation that needs a CP map received a map that is not CP."""


class NotUnitalError(IcdKitError):
    """An operation that needs a unital map received a non-unital one."""


class EffectRangeError(IcdKitError):
    """An effect lies outside the unit interval."""


class PositionalError(IcdKitError):
    """Error that carries a line/column position in some source text."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class DiagramSyntaxError(PositionalError):
    """Lexical or grammatical error in a diagram term."""


class UnknownIdentifierError(PositionalError):
    """A diagram term names an object or generator missing from the signature."""


class DiagramTypeError(PositionalError):
    """Wire lists of a composite diagram do not match."""


class PolynomialSyntaxError(PositionalError):
    """Malformed textual polynomial."""


class ParityError(IcdKitError):
    """Even/odd bookkeeping was violated."""


class PermutationError(IcdKitError):
    """A sequence is not a permutation of the expected size."""


class SlotError(IcdKitError):
    """Invalid tensor slot selection."""


class WeightError(IcdKitError):
    """Mixture weights are not a probability vector."""


class InsufficientDegreeError(IcdKitError):
    """A family does not reach the degree an operation needs."""


class MomentSequenceError(IcdKitError):
    """Supplied moments cannot come from a mixing measure."""


class NonCommutativeError(IcdKitError):
    """An operation restricted to commutative algebras got a noncommutative one."""


class UnresolvedGeneratorError(IcdKitError):
    """A symbolic generator has no element bound to it."""


class SerializationError(IcdKitError):
    """A JSON document does not match the expected format."""


class ConfigurationError(IcdKitError):
    """Invalid configuration value."""


class NumericalError(IcdKitError):
    """A linear algebra routine failed to converge."""


def checked(func: F) -> F:
    """Decorator for numerical entry points.

    Domain errors pass through unchanged, linear algebra failures are logged and
    re-raised as NumericalError."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except IcdKitError as e:
            logger.debug(f"{type(e).__name__} in {func.__name__}: {str(e)}")
            raise
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
            logger.error(f"Numerical error in {func.__name__}: {str(e)}")
            raise NumericalError(f"{func.__name__}: {str(e)}") from e
    return wrapper
