"""Exception hierarchy shared by every stage of the pipeline."""


class ClawError(Exception):
    """Base class for all errors raised by claw."""


class CyclicBinding(ClawError):
    pass


class UnboundSymbol(ClawError):
    pass


class DomainError(ClawError):
    """An evaluation hit a pole or left the admissible domain."""


class NonFinite(ClawError):
    pass


class JetOrderExceeded(ClawError):
    pass


class MissingAdjoint(ClawError):
    pass


class NotASymmetry(ClawError):
    def __init__(self, message, residuals=()):
        super().__init__(message)
        self.residuals = tuple(residuals)


class InvarianceTestFailed(ClawError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CertificateFailed(ClawError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DslError(ClawError):
    """A diagnostic tied to a location in DSL source text."""

    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ParseError(DslError):
    def __init__(self, message, line, column, expected=()):
        if expected:
            message = f"{message} (expected one of: {', '.join(sorted(expected))})"
        super().__init__(message, line, column)
        self.expected = frozenset(expected)


class UndeclaredName(DslError):
    pass


class ArityError(DslError):
    pass
