"""Shared exception types."""


class SkewlabError(Exception):
    """Base class for package errors."""


class EigenConvergenceError(SkewlabError):
    """Power iteration failed to converge within the iteration cap."""


class WindowCoverageError(SkewlabError):
    """A symbolic window does not cover the coordinates an operation needs."""


class HolonomyUndefinedError(SkewlabError):
    """Conditional-measure ratio is undefined for the given pair of pasts."""


class ResourceLimitError(SkewlabError):
    """An operation would exceed its configured resource budget."""


class BufferExhaustedError(SkewlabError):
    """A deterministic future buffer ran out of symbols."""


class RationalAngleError(SkewlabError):
    """The rotation angle is rational at float resolution."""


class MatchFeasibilityError(SkewlabError):
    """No admissible parameters or buckets exist for a matching run."""


class ConfigError(SkewlabError):
    """Invalid or incomplete experiment configuration."""
