"""Exception taxonomy shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the mathematical domain of an operation."""


class DegeneracyError(DomainError):
    """The diffusion exponent hits an unsupported degeneracy (beta = 1, beta >= 2, ...)."""


class ResolutionError(RuntimeError):
    """A requested accuracy or mode count cannot be met at the given resolution."""


class RegimeError(RuntimeError):
    """An operation was invoked outside the regime (classical/weak) where it is defined."""


class SolverError(RuntimeError):
    """A linear solve or eigenvalue computation failed to converge."""


class ConfigError(ValueError):
    """A run configuration is malformed (unknown key, bad value, missing file)."""


class VerificationError(RuntimeError):
    """One or more verification suites failed their tolerance."""
