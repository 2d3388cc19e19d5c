"""Finite towers of finite dynamical systems.

A tower ``F_1 <- F_2 <- ... <- F_N`` with commuting bonding maps presents
(a depth-``N`` truncation of) its inverse limit. Levels are numbered from 1
as in the usual notation; ``bonds[n - 1]`` maps level ``n + 1`` onto level ``n``.

Points of the truncated space are the threads, and a thread is determined
by its top entry, so the depth-``N`` space is identified with the states of
``F_N``. The metric is ``d(x, y) = 2**-(n - 1)`` where ``n`` is the first
level at which the threads differ; a level-``n`` block then has diameter at
most ``2**-n``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from operator import mul
from typing import Iterable, Sequence

from . import core_dynamics as cd
from .core_dynamics import FiniteSystem
from .errors import InputError, InvariantError

__all__ = [
    "InverseSystem",
    "LevelClopen",
    "OmegaClass",
    "OmegaKind",
    "Thread",
    "ValidationReport",
    "Violation",
    "as_tower",
    "cylinder_partition",
    "level_mesh",
    "odometer",
    "odometer_step",
    "omega_limit_class",
    "project",
    "stable_basis",
    "thread_from_top",
    "validate",
]


@dataclass(frozen=True)
class InverseSystem:
    levels: tuple[FiniteSystem, ...]
    bonds: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        bonds = tuple(tuple(int(x) for x in b) for b in self.bonds)
        if not levels:
            raise InputError("an inverse system needs at least one level")
        if len(bonds) != len(levels) - 1:
            raise InputError(f"{len(levels)} levels need {len(levels) - 1} bonds, got {len(bonds)}")
        for n, b in enumerate(bonds, start=1):
            if len(b) != levels[n].size:
                raise InputError(f"bond {n + 1}->{n} has {len(b)} entries, level {n + 1} has {levels[n].size} states")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "bonds", bonds)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, n: int) -> FiniteSystem:
        return self.levels[self._check_level(n) - 1]

    def _check_level(self, n: int) -> int:
        if not 1 <= n <= self.depth:
            raise InputError(f"level {n} is outside [1, {self.depth}]")
        return n

    @classmethod
    def from_json(cls, obj: dict) -> "InverseSystem":
        try:
            levels = tuple(FiniteSystem.from_json(lv) for lv in obj["levels"])
            bonds = obj.get("bonds", [])
        except (KeyError, TypeError) as exc:
            raise InputError(f"inverse system needs 'levels' and 'bonds': {exc}") from None
        return cls(levels, tuple(tuple(b) for b in bonds))

    def to_json(self) -> dict:
        return {"levels": [lv.to_json() for lv in self.levels], "bonds": [list(b) for b in self.bonds]}


def as_tower(system: InverseSystem | FiniteSystem) -> InverseSystem:
    """View a finite system as a one-level tower."""
    if isinstance(system, FiniteSystem):
        return InverseSystem((system,), ())
    if isinstance(system, InverseSystem):
        return system
    raise InputError(f"expected a FiniteSystem or InverseSystem, got {type(system).__name__}")


def level_mesh(n: int) -> Fraction:
    """Upper bound on the diameter of a level-``n`` block."""
    return Fraction(1, 2**n)


def project(sys: InverseSystem, state: int, from_level: int, to_level: int) -> int:
    """Image of ``state`` of ``F_from_level`` under the composed bonds down to ``to_level``."""
    sys._check_level(from_level)
    sys._check_level(to_level)
    if to_level > from_level:
        raise InputError("projections only go down the tower")
    for n in range(from_level, to_level, -1):
        state = sys.bonds[n - 2][state]
    return state


def lift_states(sys: InverseSystem, states: Iterable[int], from_level: int, to_level: int) -> frozenset[int]:
    """Preimage of a level set under the composed bonds ``to_level -> from_level``."""
    target = frozenset(states)
    if to_level < from_level:
        raise InputError("lifting only goes up the tower")
    top = sys.level(to_level)
    return frozenset(x for x in top.states if project(sys, x, to_level, from_level) in target)


# --- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # "range" | "commutation" | "surjectivity"
    level: int  # the bond maps level + 1 onto level
    state: int
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    surjective: tuple[bool, ...]

    @property
    def ok(self) -> bool:
        """Range and commutation hold. Non-surjective bonds are reported separately."""
        return not any(v.kind != "surjectivity" for v in self.violations)

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "bonds_surjective": list(self.surjective),
            "violations": [vars(v) for v in self.violations],
        }


def validate(sys: InverseSystem) -> ValidationReport:
    """Check the bonds: into range, commuting with the level maps, and surjective.

    Violations are returned, never raised. For each bond only the first
    offending state of each kind is listed.
    """
    out = []
    surj = []
    for n, bond in enumerate(sys.bonds, start=1):
        lower, upper = sys.levels[n - 1], sys.levels[n]
        bad = next((x for x, e in enumerate(bond) if not 0 <= e < lower.size), None)
        if bad is not None:
            out.append(Violation("range", n, bad, f"bond value {bond[bad]} outside [0, {lower.size})"))
            surj.append(False)
            continue
        for x in upper.states:
            lhs, rhs = bond[upper.map[x]], lower.map[bond[x]]
            if lhs != rhs:
                out.append(Violation("commutation", n, x, f"bond(tau(x)) = {lhs} but tau(bond(x)) = {rhs}"))
                break
        missing = sorted(set(lower.states) - set(bond))
        surj.append(not missing)
        if missing:
            out.append(Violation("surjectivity", n, missing[0], "state has no preimage under the bond"))
    return ValidationReport(tuple(out), tuple(surj))


def require_valid(sys: InverseSystem) -> None:
    report = validate(sys)
    if not report.ok:
        v = next(v for v in report.violations if v.kind != "surjectivity")
        raise InputError(f"invalid tower: {v.kind} violation at bond {v.level + 1}->{v.level}, state {v.state}: {v.detail}")


# --- odometers --------------------------------------------------------------


def odometer_step(bases: Sequence[int], digits: Sequence[int]) -> tuple[int, ...]:
    """Add one unit to a mixed-radix digit tuple ``(a_1, ..., a_n)``.

    With ``k`` the first position where ``a_k + 1 < b_k``, positions before
    ``k`` reset to zero and ``a_k`` increases. If no such position exists the
    tuple wraps to all zeros.
    """
    out = list(digits)
    for i, (a, b) in enumerate(zip(digits, bases)):
        if a + 1 < b:
            out[i] = a + 1
            return tuple(out)
        out[i] = 0
    return tuple(out)


def digits_of(bases: Sequence[int], x: int) -> tuple[int, ...]:
    """Little-endian mixed-radix digits of ``x``."""
    out = []
    for b in bases:
        x, a = divmod(x, b)
        out.append(a)
    return tuple(out)


def index_of(bases: Sequence[int], digits: Sequence[int]) -> int:
    x = 0
    for a, b in zip(reversed(digits), reversed(bases)):
        x = x * b + a
    return x


def odometer(bases: Sequence[int]) -> InverseSystem:
    """Tower of the adding machine with the given bases.

    Level ``n`` has ``b_1 * ... * b_n`` states, state ``x`` standing for the
    digit tuple ``digits_of(bases[:n], x)``. Bonds drop the last digit.
    """
    bases = [int(b) for b in bases]
    if not bases:
        raise InputError("odometer needs at least one base")
    if any(b < 1 for b in bases):
        raise InputError(f"odometer bases must be >= 1, got {bases}")
    sizes = list(accumulate(bases, mul))
    levels = []
    for n in range(1, len(bases) + 1):
        bs = bases[:n]
        levels.append(FiniteSystem(tuple(index_of(bs, odometer_step(bs, digits_of(bs, x))) for x in range(sizes[n - 1]))))
    bonds = [tuple(x % sizes[n - 1] for x in range(sizes[n])) for n in range(1, len(bases))]
    return InverseSystem(tuple(levels), tuple(bonds))


# --- threads and omega-limits -----------------------------------------------


@dataclass(frozen=True)
class Thread:
    entries: tuple[int, ...]

    def check(self, sys: InverseSystem) -> None:
        if len(self.entries) != sys.depth:
            raise InputError(f"thread has {len(self.entries)} entries, tower depth is {sys.depth}")
        for n, e in enumerate(self.entries, start=1):
            if not 0 <= e < sys.level(n).size:
                raise InputError(f"thread entry {e} outside level {n}")
        for n, bond in enumerate(sys.bonds, start=1):
            if bond[self.entries[n]] != self.entries[n - 1]:
                raise InputError(f"thread is inconsistent between levels {n} and {n + 1}")


def thread_from_top(sys: InverseSystem, top_state: int) -> Thread:
    """The thread whose depth-``N`` entry is ``top_state``."""
    top = sys.depth
    return Thread(tuple(project(sys, top_state, top, n) for n in range(1, top + 1)))


class OmegaKind(str, enum.Enum):
    PERIODIC = "PERIODIC"
    ADDING_MACHINE = "ADDING_MACHINE"


@dataclass(frozen=True)
class OmegaClass:
    """Verdict on the omega-limit of a thread, valid at the tower's depth only.

    ``periods[n - 1]`` is the length of the cycle eventually followed at level
    ``n``. The verdict is PERIODIC when the last two periods agree.
    """

    kind: OmegaKind
    periods: tuple[int, ...]
    preperiods: tuple[int, ...]
    depth: int
    stabilized_from: int | None = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "periods": list(self.periods),
            "preperiods": list(self.preperiods),
            "verdict_at_depth": self.depth,
            "stabilized_from": self.stabilized_from,
        }


def omega_limit_class(sys: InverseSystem, t: Thread) -> OmegaClass:
    t.check(sys)
    pre, periods = [], []
    for n, e in enumerate(t.entries, start=1):
        k, s = cd.eventual_period(sys.level(n), e)
        pre.append(k)
        periods.append(s)
    N = sys.depth
    if N == 1 or periods[-1] == periods[-2]:
        start = N
        while start > 1 and periods[start - 2] == periods[-1]:
            start -= 1
        return OmegaClass(OmegaKind.PERIODIC, tuple(periods), tuple(pre), N, start)
    return OmegaClass(OmegaKind.ADDING_MACHINE, tuple(periods), tuple(pre), N)


# --- clopen sets and stable neighbourhoods ----------------------------------


@dataclass(frozen=True)
class LevelClopen:
    """The clopen set ``pi_n^{-1}(states)`` for a set of level-``n`` states."""

    level: int
    states: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(int(s) for s in self.states))

    def lift(self, sys: InverseSystem, to_level: int) -> "LevelClopen":
        return LevelClopen(to_level, lift_states(sys, self.states, self.level, to_level))

    def to_json(self) -> dict:
        return {"level": self.level, "states": sorted(self.states)}


def stable_basis(sys: InverseSystem, L: Sequence[Iterable[int]]) -> list[LevelClopen]:
    """Nested positively invariant clopen neighbourhoods ``pi_n^{-1}(L_n)``.

    ``L[n - 1]`` is the level-``n`` set. Each ``L_n`` must be positively
    invariant and the bonds must carry ``L_{n+1}`` into ``L_n``.
    """
    require_valid(sys)
    if len(L) != sys.depth:
        raise InputError(f"need one set per level ({sys.depth}), got {len(L)}")
    sets = [cd.as_state_set(sys.level(n), s) for n, s in enumerate(L, start=1)]
    for n, s in enumerate(sets, start=1):
        if not cd.is_invariant(sys.level(n), s):
            raise InvariantError(f"L_{n} is not positively invariant")
        if n < sys.depth:
            bond = sys.bonds[n - 1]
            if any(bond[x] not in s for x in sets[n]):
                raise InvariantError(f"bond {n + 1}->{n} does not carry L_{n + 1} into L_{n}")
    return [LevelClopen(n, s) for n, s in enumerate(sets, start=1)]


def cylinder_partition(sys: InverseSystem, n: int):
    """The level-``n`` partition into the sets ``pi_n^{-1}(e)``."""
    from .partitions import LevelPartition

    sys = as_tower(sys)
    sys._check_level(n)
    return LevelPartition(sys, n, tuple(frozenset([e]) for e in sys.level(n).states))
