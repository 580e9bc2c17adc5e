"""Exceptions shared by the library, the CLI and the HTTP service."""


class InputError(ValueError):
    """Malformed data, files or violated preconditions."""


class NonConvergenceError(RuntimeError):
    """A coordinate update cannot proceed (degenerate data)."""


class TuningError(RuntimeError):
    """Every hyperparameter tuple of a search failed."""
