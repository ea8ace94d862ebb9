"""Exception types raised across the package."""


class CVForgeError(Exception):
    """Base class for all package errors."""


class DataError(CVForgeError, ValueError):
    """Malformed or unusable input data."""


class ConfigError(CVForgeError, ValueError):
    """Invalid pipeline, scheme or run configuration."""


class StepError(CVForgeError, ValueError):
    """A pipeline step failed; ``step`` names the offending step."""

    def __init__(self, step, message):
        super().__init__(f"step {step!r}: {message}")
        self.step = step


class FoldError(CVForgeError, RuntimeError):
    """A cross-validation fold failed to fit or score."""

    def __init__(self, repeat, fold, message):
        super().__init__(f"repeat {repeat}, fold {fold}: {message}")
        self.repeat = repeat
        self.fold = fold


class FoldPlanMismatch(CVForgeError, ValueError):
    """Two results were not produced on the same fold plan."""


class NotRetained(CVForgeError, LookupError):
    """Requested inspection artifacts were not kept, or the fold does not exist."""
