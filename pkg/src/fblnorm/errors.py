"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: input problems exit 2,
capacity and exponent-domain problems exit 3, verification failures
exit 1.
"""

from __future__ import annotations


class FBLNormError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionError(FBLNormError, ValueError):
    """Vector length does not match the expression or space dimension."""


class ExponentDomainError(FBLNormError, ValueError):
    """An exponent lies outside the domain of the requested quantity."""


class ParseError(FBLNormError, ValueError):
    """Syntax error in the expression language.

    Carries enough position information to point at the offending token.
    """

    def __init__(self, message: str, line: int, column: int, expected: str | None = None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"line {line}, column {column}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class CapacityError(FBLNormError, RuntimeError):
    """The requested exact computation exceeds a configured size cap."""


class DegenerateFamilyError(FBLNormError, ValueError):
    """A functional family with zero constraint norm cannot be normalized."""


class CertificationError(FBLNormError, RuntimeError):
    """A certificate failed its own internal consistency checks."""


class SpecFileError(FBLNormError, ValueError):
    """An experiment description file is malformed; names the bad field."""
