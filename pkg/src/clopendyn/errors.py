"""Exception hierarchy shared by all modules."""


class ClopenDynError(Exception):
    """Base class for every error raised by :mod:`clopendyn`."""


class InputError(ClopenDynError, ValueError):
    """Malformed or out-of-range input."""


class InvariantError(InputError):
    """An input set or partition violates a required invariance property."""


class DepthExceededError(InputError):
    """A finite tower is too shallow for the requested scale.

    This is never a nonexistence claim: a deeper tower may succeed.
    """


class HypothesisError(InputError):
    """A mathematical hypothesis of the check fails, so it refuses to run."""


class InternalError(ClopenDynError, RuntimeError):
    """A post-condition of the library itself failed."""
