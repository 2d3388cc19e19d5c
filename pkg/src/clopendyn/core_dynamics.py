"""Dynamics of a self-map on a finite set (a functional graph).

States are the dense integers ``0 .. size-1``. Every orbit is eventually
periodic, which is all the structure the rest of the package needs:
cycles, preperiods, the eventual image and first-entry times.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import InputError, InvariantError

__all__ = [
    "FiniteSystem",
    "HittingTime",
    "as_state_set",
    "cycles",
    "eventual_image",
    "eventual_period",
    "hitting_time_bound",
    "image",
    "is_invariant",
    "orbit",
    "periodic_points",
    "preimage",
    "restrict",
    "stable_clopen_neighborhood",
]


@dataclass(frozen=True)
class FiniteSystem:
    """A map ``tau`` on ``{0, ..., size-1}`` stored as the tuple of images."""

    map: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(t) for t in self.map)
        object.__setattr__(self, "map", m)
        if len(m) < 1:
            raise InputError("a finite system needs at least one state")
        n = len(m)
        for i, t in enumerate(m):
            if not 0 <= t < n:
                raise InputError(f"map[{i}] = {t} is outside [0, {n})")

    @property
    def size(self) -> int:
        return len(self.map)

    @property
    def states(self) -> range:
        return range(len(self.map))

    def __call__(self, p: int) -> int:
        return self.map[p]

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteSystem":
        try:
            size, m = obj["size"], obj["map"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"finite system needs 'size' and 'map': {exc}") from None
        if len(m) != size:
            raise InputError(f"'size' is {size} but 'map' has {len(m)} entries")
        return cls(tuple(m))

    def to_json(self) -> dict:
        return {"size": self.size, "map": list(self.map)}

    @classmethod
    def identity(cls, n: int) -> "FiniteSystem":
        return cls(tuple(range(n)))


class HittingTime(NamedTuple):
    """First-entry data for a positively invariant set ``P``.

    ``basin`` is the set of states whose orbit meets ``P``; it equals
    ``tau^{-n0}(P)``. ``never`` holds the remaining states.
    """

    n0: int
    basin: frozenset[int]
    never: frozenset[int]
    entry_times: tuple[int | None, ...]


def _check_state(sys: FiniteSystem, p) -> int:
    try:
        p = operator.index(p)
    except TypeError:
        raise InputError(f"state {p!r} is not an integer") from None
    if not 0 <= p < sys.size:
        raise InputError(f"state {p} is outside [0, {sys.size})")
    return p


def as_state_set(sys: FiniteSystem, states: Iterable[int]) -> frozenset[int]:
    """Validate ``states`` against ``sys`` and return them as a frozenset."""
    return frozenset(_check_state(sys, p) for p in states)


def orbit(sys: FiniteSystem, p: int, n: int) -> list[int]:
    """Return ``[p, tau(p), ..., tau^n(p)]``."""
    p = _check_state(sys, p)
    if n < 0:
        raise InputError("orbit length must be nonnegative")
    out = [p]
    for _ in range(n):
        p = sys.map[p]
        out.append(p)
    return out


def eventual_period(sys: FiniteSystem, p: int) -> tuple[int, int]:
    """Return ``(k, s)``: ``tau^k(p)`` is the first orbit point on a cycle of length ``s``."""
    p = _check_state(sys, p)
    seen: dict[int, int] = {}
    i = 0
    while p not in seen:
        seen[p] = i
        p = sys.map[p]
        i += 1
    k = seen[p]
    return k, i - k


def cycles(sys: FiniteSystem) -> list[tuple[int, ...]]:
    """All cycles of the functional graph, each rotated to start at its least state.

    Uses visit stamps, so the cost is linear in ``size``. Cycles are listed in
    order of their least state.
    """
    stamp = [0] * sys.size
    found = []
    for start in sys.states:
        if stamp[start]:
            continue
        path = []
        p = start
        while not stamp[p]:
            stamp[p] = start + 1
            path.append(p)
            p = sys.map[p]
        if stamp[p] == start + 1:
            cyc = path[path.index(p):]
            j = cyc.index(min(cyc))
            found.append(tuple(cyc[j:] + cyc[:j]))
    found.sort()
    return found


def periodic_points(sys: FiniteSystem, r: int) -> frozenset[int]:
    """States lying on a cycle of length at most ``r``."""
    if r < 1:
        raise InputError("the period bound r must be at least 1")
    return frozenset(p for c in cycles(sys) if len(c) <= r for p in c)


def eventual_image(sys: FiniteSystem) -> frozenset[int]:
    """The stabilized image ``tau^k(states)``, i.e. the union of all cycles."""
    return frozenset(p for c in cycles(sys) for p in c)


def image(sys: FiniteSystem, states: Iterable[int]) -> frozenset[int]:
    return frozenset(sys.map[p] for p in states)


def preimage(sys: FiniteSystem, states: Iterable[int]) -> frozenset[int]:
    target = set(states)
    return frozenset(p for p in sys.states if sys.map[p] in target)


def is_invariant(sys: FiniteSystem, states: Iterable[int]) -> bool:
    """True when ``tau(states)`` is contained in ``states`` (positive invariance)."""
    s = set(states)
    return all(sys.map[p] in s for p in s)


def restrict(sys: FiniteSystem, states: Iterable[int]) -> tuple[FiniteSystem, tuple[int, ...]]:
    """Restrict ``sys`` to a positively invariant set.

    Returns the restricted system on ``0 .. len(states)-1`` and the sorted
    tuple of original labels, so ``labels[i]`` is the state behind new index ``i``.
    """
    labels = tuple(sorted(as_state_set(sys, states)))
    if not labels:
        raise InputError("cannot restrict to an empty set")
    index = {p: i for i, p in enumerate(labels)}
    try:
        m = tuple(index[sys.map[p]] for p in labels)
    except KeyError as exc:
        raise InvariantError(f"set is not positively invariant: tau escapes to {exc.args[0]}") from None
    return FiniteSystem(m), labels


def hitting_time_bound(sys: FiniteSystem, P: Iterable[int]) -> HittingTime:
    """First-entry times into a positively invariant set ``P``.

    ``n0`` is the largest finite entry time; every state of the basin lies in
    ``P`` after ``n0`` steps. States whose orbit never meets ``P`` are
    reported in ``never`` rather than treated as an error.
    """
    P = as_state_set(sys, P)
    if not is_invariant(sys, P):
        bad = min(p for p in P if sys.map[p] not in P)
        raise InvariantError(f"P is not positively invariant: tau({bad}) = {sys.map[bad]} leaves P")
    back: list[list[int]] = [[] for _ in sys.states]
    for p in sys.states:
        back[sys.map[p]].append(p)
    times: list[int | None] = [None] * sys.size
    frontier = sorted(P)
    for p in frontier:
        times[p] = 0
    t = 0
    while frontier:
        t += 1
        nxt = []
        for q in frontier:
            for p in back[q]:
                if times[p] is None:
                    times[p] = t
                    nxt.append(p)
        frontier = nxt
    basin = frozenset(p for p in sys.states if times[p] is not None)
    n0 = max((times[p] for p in basin), default=0)
    return HittingTime(n0, basin, frozenset(sys.states) - basin, tuple(times))


def stable_clopen_neighborhood(sys: FiniteSystem, Y: Iterable[int], O: Iterable[int]) -> frozenset[int]:
    """A positively invariant ``O'`` with ``Y <= O' <= O``.

    ``O'`` collects the states whose first ``n0`` iterates stay in ``O``,
    where ``n0`` is the least time with ``tau^{n0}(states) <= O``.
    """
    Y, O = as_state_set(sys, Y), as_state_set(sys, O)
    if not Y <= O:
        raise InputError("Y must be contained in O")
    if not is_invariant(sys, Y):
        raise InvariantError("Y is not positively invariant")
    if not eventual_image(sys) <= O:
        raise InvariantError("the eventual image is not contained in O, so no n0 exists")
    current = frozenset(sys.states)
    n0 = 0
    while not current <= O:
        current = image(sys, current)
        n0 += 1
    result = frozenset(sys.states)
    for _ in range(n0):
        result = O & preimage(sys, result)
    return result
