"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations


class TptError(Exception):
    """Base class. ``line``/``column`` are 1-based and optional."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class LexError(TptError):
    pass


class PreprocessError(TptError):
    pass


class ParseError(TptError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.expected = tuple(expected)
        super().__init__(message, line, column)


class SemanticError(TptError):
    """Raised when ``check_semantics`` finds errors; carries every diagnostic."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        errors = [d for d in self.diagnostics if d.severity == "error"]
        first = errors[0] if errors else None
        msg = f"{len(errors)} semantic error(s)"
        if first is not None:
            msg += f"; first: [{first.code}] {first.message}"
        super().__init__(msg, first.line if first else None, first.column if first else None)


class UnrollError(TptError):
    pass


class TabulationError(TptError):
    pass


class GraphError(TptError):
    pass


class NumericError(TptError):
    """A non-finite value appeared during marginal propagation."""

    def __init__(self, message, site=None):
        self.site = site
        super().__init__(message)


class SolverError(TptError):
    """External solver failed or produced output we could not read."""

    def __init__(self, message, output: str = ""):
        self.output = output
        super().__init__(message)


class SmtVerificationError(SolverError):
    """The solver returned a model that the interpreter rejects.

    This always means the translation and the reference semantics disagree.
    """
