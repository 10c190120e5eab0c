"""Exception hierarchy shared by every module."""


class CatfixError(Exception):
    """Base class for all library errors."""


class GeometryError(CatfixError, ValueError):
    """Invalid geometric input: off-sheet points, degenerate vertices, bad parameters."""


class TreeFormatError(CatfixError, ValueError):
    """Malformed tree description file. Messages carry the offending line number."""


class ConvergenceError(CatfixError, RuntimeError):
    """An iterative routine ran out of budget before meeting its stopping rule."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class AuditError(CatfixError, RuntimeError):
    """A sampled audit (nonexpansiveness, contraction factor) failed."""

    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class ConfigError(CatfixError, ValueError):
    """Scenario or campaign configuration rejected during validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
