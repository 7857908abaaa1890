"""Exception hierarchy shared across the package."""


class VibNTFError(Exception):
    """Base class for all package errors."""


class InputError(VibNTFError):
    """Bad user input; the CLI maps these to exit code 1."""


class FormatError(InputError, ValueError):
    """Unsupported or malformed file encoding."""


class DegenerateInputError(InputError, ValueError):
    """Input is well-formed but the operation is undefined for it."""


class ShapeError(InputError, ValueError):
    """Array dimensions disagree."""


class NumericalError(VibNTFError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy result."""
