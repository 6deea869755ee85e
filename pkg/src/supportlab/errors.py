"""Exception types shared across the package."""


class SupportLabError(Exception):
    """Base class for errors raised by this package."""


class GuardExceededError(SupportLabError):
    """A requested computation is larger than the configured safety guard.

    Raised before any heavy allocation or enumeration happens, so callers can
    shrink the problem or raise the guard deliberately instead of discovering
    an out-of-memory kill an hour in.
    """


class DegenerateColumnError(SupportLabError):
    """A column lies (numerically) inside the span it is being tested against.

    The incremental gain of such a column is 0/0 and no sensible value can be
    returned; the caller has to decide what a rank-deficient candidate means.
    """


class ConfigError(SupportLabError):
    """A sweep configuration failed validation."""
