"""Exception types shared across the library.

The CLI maps these onto its exit codes: parse failures exit 1, violated
mathematical preconditions exit 2, and numerical non-convergence exits 3.
"""

from __future__ import annotations

import math


class FracineqError(Exception):
    """Base class for all library-specific errors."""


class ExpressionError(FracineqError, ValueError):
    """Base class for expression-layer errors (parsing, evaluation)."""


class ParseError(ExpressionError):
    """Malformed expression or instance text.

    ``offset`` is the byte offset of the offending token; ``expected`` is the
    set of token kinds that would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(sorted(expected))
        detail = f"{message} at offset {offset}"
        if self.expected:
            detail += " (expected: " + ", ".join(self.expected) + ")"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    """An identifier other than ``x`` or a known function name."""

    def __init__(self, name: str, offset: int):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset)


class EvalDomainError(ExpressionError):
    """Evaluation left the expression's real domain (log of a non-positive
    number, division by zero, fractional power of a negative base, overflow).
    A NaN/inf result is always reported through this error, never returned."""


class NonDifferentiableError(ExpressionError):
    """Symbolic differentiation hit a node it refuses (``abs``)."""


class HypothesisError(FracineqError, ValueError):
    """A mathematical precondition failed: non-monotone map, order below the
    supported floor, invalid interval, terminal outside the validated range,
    or a rejected function property."""


class NonConvergenceError(FracineqError, RuntimeError):
    """Adaptive quadrature exhausted its evaluation budget.

    Carries the best value and error estimate reached so far.
    """

    def __init__(
        self,
        message: str,
        value: float = math.nan,
        error_estimate: float = math.inf,
        evaluations: int = 0,
    ):
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations
        super().__init__(
            f"{message} (best value {value!r}, error estimate {error_estimate!r}, "
            f"{evaluations} evaluations)"
        )
