"""Exception types shared across the package."""


class CpheatError(Exception):
    """Base class for all package errors."""


class PreconditionError(CpheatError, ValueError):
    """An operation was called with inputs violating its contract."""


class ConfigError(CpheatError, ValueError):
    """A run-config file failed to parse or validate."""


class SamplingError(CpheatError, RuntimeError):
    """A rejection sampler degenerated (acceptance rate below its floor)."""


class AcceptanceRateError(CpheatError, RuntimeError):
    """A conditional Monte Carlo estimate aborted: the conditioning event is
    too rare to sample at the requested depth."""
