"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class InputFormatError(ValueError):
    """An input file or string does not match the expected format."""
