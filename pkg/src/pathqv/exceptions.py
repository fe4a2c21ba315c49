"""Exception types."""


class PathError(ValueError):
    """Invalid path data (bad CSV, broken invariants)."""


class InvariantViolation(AssertionError):
    """A mathematical identity failed on valid input, i.e. a bug."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
