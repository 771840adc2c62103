"""Exception types shared across the package."""


class SolverError(RuntimeError):
    """An iterative linear solve failed to reach its tolerance.

    Carries the relative residual that was achieved so callers can report it.
    """

    def __init__(self, message: str, achieved_residual: float | None = None):
        super().__init__(message)
        self.achieved_residual = achieved_residual


class EmptyLevelSetError(RuntimeError):
    """The zero level set is empty (the tracked inclusion vanished)."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or violates an invariant."""
