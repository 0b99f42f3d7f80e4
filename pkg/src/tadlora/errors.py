"""Exception types shared across the package."""


class TadLoraError(ValueError):
    """Base class for all package-specific errors."""


class InvalidInputError(TadLoraError):
    """A numeric argument violates an operation's contract."""


class InvalidConfigError(TadLoraError):
    """A configuration document or run setup is invalid."""


class NonConvergedError(TadLoraError):
    """An iterative routine hit its round budget before converging."""

    def __init__(self, message: str, rounds: int, grad_norm: float):
        super().__init__(message)
        self.rounds = rounds
        self.grad_norm = grad_norm
