"""Exception hierarchy shared by all smallscat modules."""


class SmallscatError(Exception):
    """Base class for every error raised by the package."""


class MeshError(SmallscatError):
    """Malformed, degenerate or non-closed triangle mesh."""


class DomainError(SmallscatError, ValueError):
    """Argument outside the domain of a function (pole, bad radius, point inside a ball)."""


class AssemblyError(SmallscatError):
    """Non-finite entry produced while assembling a boundary-element matrix."""


class SolverError(SmallscatError):
    """Dense linear solve failed."""


class NumericHealthError(SmallscatError):
    """A numerical sanity check (residual, imaginary residue, positivity) failed."""


class ConfigError(SmallscatError):
    """Inconsistent or incomplete experiment configuration."""
