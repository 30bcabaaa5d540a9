"""
Error types raised by the sharedsr library.

Library code raises these; the command layer translates them into exit codes.
"""


class SharedSRError(Exception):
    """Base error for all sharedsr failures."""

    pass


class ExpressionParseError(SharedSRError):
    """Expression text could not be parsed."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position


class DatasetError(SharedSRError):
    """Input data is missing, malformed or inconsistent with its schema."""

    pass


class BindingShapeError(SharedSRError):
    """Parameter values do not match the expression and category schema."""

    pass


class FitError(SharedSRError):
    """Parameter identification could not produce a finite evaluation."""

    pass


class ConfigError(SharedSRError):
    """Run configuration is invalid or names unknown keys."""

    pass
