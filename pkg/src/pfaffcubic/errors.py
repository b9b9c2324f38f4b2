"""Exception and warning types shared across the package."""

from __future__ import annotations


class PfaffError(Exception):
    """Base class for every error raised by pfaffcubic."""


# numerics
class NumericalZeroDivision(PfaffError, ZeroDivisionError):
    pass


class LeadingZero(PfaffError, ValueError):
    pass


class NoConvergence(PfaffError, ArithmeticError):
    pass


# multipoly
class ArityMismatch(PfaffError, ValueError):
    pass


class SingularTransform(PfaffError, ValueError):
    pass


# cubic_io
class InputError(PfaffError, ValueError):
    """Malformed user input. Maps to CLI exit code 1."""


class CubicSyntaxError(InputError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        caret = ""
        if text:
            caret = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} at position {position}{caret}")


class NotHomogeneousDegree3(InputError):
    def __init__(self, monomial: str, degree: int):
        self.monomial = monomial
        self.degree = degree
        super().__init__(
            f"expression is not a homogeneous cubic: monomial {monomial} has degree {degree}"
        )


class ZeroPolynomial(InputError):
    pass


class SchemaError(InputError):
    pass


# ternary_canon
class NoFlexFound(PfaffError):
    pass


class DegenerateTangent(PfaffError):
    pass


# quaternary_builder
class CertificationFailed(PfaffError):
    def __init__(self, message: str, residual=None):
        self.residual = residual
        super().__init__(message)


class SignIndeterminate(PfaffError):
    pass


class RotationExhausted(PfaffError):
    pass


class NotSplit(PfaffError):
    pass


# verifier
class NotSkew(InputError):
    pass


# pipeline
class RepresentationFailed(PfaffError):
    def __init__(self, message: str, stage: str, diagnostics: dict | None = None):
        self.stage = stage
        self.diagnostics = diagnostics or {}
        super().__init__(f"[{stage}] {message}")


class IllConditionedWarning(UserWarning):
    """A candidate sat just above the certification threshold."""
