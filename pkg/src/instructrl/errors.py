"""Exception hierarchy shared across the package."""


class ConfigError(ValueError):
    """An environment, training, or run configuration is invalid."""


class IllegalAction(RuntimeError):
    """An action violated the environment's preconditions (never ignored)."""


class ContractViolation(RuntimeError):
    """A caller broke an operation contract (wrong player, missing data, ...)."""


class BackendError(RuntimeError):
    """A language-backend query failed.

    ``retryable`` distinguishes transient transport failures (timeouts,
    rate limits) from permanent ones (bad credentials, malformed response).
    """

    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable
