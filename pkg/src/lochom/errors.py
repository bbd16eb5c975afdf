"""Exception hierarchy.

Every error raised by the library derives from :class:`LochomError` so callers
(the CLI in particular) can map failures to exit codes in one place.
"""


class LochomError(Exception):
    pass


class ArgumentError(LochomError, ValueError):
    """Bad argument: unknown id, out-of-range parameter, mismatched objects."""


class DomainError(LochomError, ValueError):
    """Operation undefined on its input, e.g. averaging over a null set."""


class ConfigurationError(LochomError):
    """The local structure is malformed or lacks a required level."""


class PreconditionError(LochomError):
    """A documented precondition of an operation does not hold."""


class ScaleError(LochomError):
    """A dyadic scale is incompatible with the exhaustion."""

    def __init__(self, message, minimal_k=None):
        super().__init__(message)
        self.minimal_k = minimal_k


class ForestGeometryError(LochomError):
    """Inner/outer balls of a cube do not nest as required."""


class ConstructionError(LochomError):
    """An iterative construction cannot proceed."""


class UsageError(LochomError):
    """Invalid CLI or experiment configuration."""
