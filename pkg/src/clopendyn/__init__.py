"""Finite-resolution tools for dynamics on Cantor-type spaces.

Systems come in three presentations: a map on a finite set
(:class:`FiniteSystem`), a tower of finite systems with commuting bonds
(:class:`InverseSystem`), and a one-sided vertex shift (:class:`ShiftSpace`).
"""

from ._version import __version__
from .cech import coboundary_solve, eigenvalue_certificate, spectrum
from .core_dynamics import FiniteSystem
from .errors import (
    ClopenDynError,
    DepthExceededError,
    HypothesisError,
    InputError,
    InternalError,
    InvariantError,
)
from .expansion import Lambda, r_of_lambda, uniqueness_bruteforce
from .inverse_limit import InverseSystem, odometer
from .partitions import find_dynamical_epsilon_partition, is_dynamical, refine_from_itineraries
from .symbolic import ClopenSet, ShiftSpace, entropy, itinerary_finiteness

__all__ = [
    "ClopenDynError",
    "ClopenSet",
    "DepthExceededError",
    "FiniteSystem",
    "HypothesisError",
    "InputError",
    "InternalError",
    "InvariantError",
    "InverseSystem",
    "Lambda",
    "ShiftSpace",
    "__version__",
    "coboundary_solve",
    "eigenvalue_certificate",
    "entropy",
    "find_dynamical_epsilon_partition",
    "is_dynamical",
    "itinerary_finiteness",
    "odometer",
    "r_of_lambda",
    "refine_from_itineraries",
    "spectrum",
    "uniqueness_bruteforce",
]
