"""Exception hierarchy shared across the package."""

from dataclasses import dataclass


class ProvqlError(Exception):
    """Base class for all provql errors."""


class IngestError(ProvqlError):
    """Raised when audit-log input cannot be turned into store content."""


class ValidationError(ProvqlError):
    """A precondition on input data was violated (e.g. unsorted events)."""


class StoreError(ProvqlError):
    """Store-level failures: unknown ids, bad snapshots, write conflicts."""


class SnapshotError(StoreError):
    """Snapshot file is missing, truncated, or has the wrong version."""


@dataclass
class SourceLocation:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class LexError(ProvqlError):
    def __init__(self, message: str, loc: SourceLocation):
        super().__init__(f"{message} at {loc}")
        self.message = message
        self.loc = loc


class ParseError(ProvqlError):
    def __init__(self, message: str, loc: SourceLocation):
        super().__init__(f"{message} at {loc}")
        self.message = message
        self.loc = loc


@dataclass
class Diagnostic:
    """One semantic-analysis finding, anchored to a source location."""

    message: str
    loc: SourceLocation

    def __str__(self) -> str:
        return f"{self.loc}: {self.message}"


class SemanticError(ProvqlError):
    """Carries every diagnostic collected for a statement batch."""

    def __init__(self, diagnostics: list):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


class ExecutionError(ProvqlError):
    """Statement failed at run time (unbound variable, missing source, ...)."""


class BudgetExceeded(ExecutionError):
    """A statement ran past the configured wall-clock budget."""
