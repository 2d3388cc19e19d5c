"""One-sided vertex subshifts of finite type.

A point is a right-infinite walk in the transition graph; the dynamics is
the shift. Clopen sets are finite unions of cylinders ``[w]`` and are stored
as a set of allowed words of one common length.

Itineraries with respect to a clopen partition are read off a deterministic
automaton obtained by subset construction from the graph of ``m``-blocks.
Every state of that automaton has an outgoing edge, and its infinite label
paths are exactly the realized itineraries. It has finitely many infinite
paths iff every state lying on a cycle has exactly one outgoing edge: a
branching cycle state can be looped around any number of times before
leaving, while without one every path is fixed by its prefix through the
acyclic part.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .core_dynamics import FiniteSystem
from .errors import InputError, InternalError

__all__ = [
    "BranchWitness",
    "ClopenSet",
    "Finiteness",
    "ItineraryAutomaton",
    "ItineraryReport",
    "ShiftSpace",
    "binary_itinerary_finiteness",
    "canonical_itinerary",
    "cylinder",
    "cylinder_mesh",
    "entropy",
    "finite_points",
    "full_shift",
    "golden_mean_shift",
    "image",
    "itinerary_automaton",
    "itinerary_finiteness",
    "permutation_shift",
    "preimage",
    "s_r_cylinder",
    "s_r_decode",
    "s_r_shift",
    "s_r_symbols",
    "separation_check",
    "shift_itinerary",
]

Word = tuple[int, ...]


@dataclass(frozen=True)
class ShiftSpace:
    alphabet_size: int
    adjacency: tuple[tuple[int, ...], ...]
    _words: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        A = int(self.alphabet_size)
        if A < 1:
            raise InputError("alphabet size must be at least 1")
        try:
            adj = tuple(tuple(int(bool(v)) if v in (0, 1, True, False) else _bad_entry(v) for v in row) for row in self.adjacency)
        except TypeError:
            raise InputError("adjacency must be a square 0/1 matrix") from None
        if len(adj) != A or any(len(row) != A for row in adj):
            raise InputError(f"adjacency must be {A}x{A}")
        object.__setattr__(self, "alphabet_size", A)
        object.__setattr__(self, "adjacency", adj)
        # forward trimming: a symbol carries a point iff it starts an infinite walk
        live = set(range(A))
        changed = True
        while changed:
            changed = False
            for a in sorted(live):
                if not any(adj[a][b] and b in live for b in range(A)):
                    live.discard(a)
                    changed = True
        object.__setattr__(self, "_live", frozenset(live))
        ess = set(live)
        changed = True
        while changed:
            changed = False
            for b in sorted(ess):
                if not any(adj[a][b] for a in ess):
                    ess.discard(b)
                    changed = True
        object.__setattr__(self, "_essential", frozenset(ess))
        object.__setattr__(
            self, "_succ", tuple(tuple(b for b in range(A) if adj[a][b] and b in live) for a in range(A))
        )

    @property
    def live_symbols(self) -> frozenset[int]:
        """Symbols that begin at least one point."""
        return self._live

    @property
    def essential_symbols(self) -> frozenset[int]:
        """Symbols surviving two-sided trimming (no sources, no sinks)."""
        return self._essential

    @property
    def is_empty(self) -> bool:
        return not self._live

    @property
    def is_surjective(self) -> bool:
        """The shift maps the space onto itself iff every live symbol has a live predecessor."""
        return self._live == self._essential

    def successors(self, a: int) -> tuple[int, ...]:
        return self._succ[a]

    def words(self, m: int) -> tuple[Word, ...]:
        """Allowed words of length ``m`` (those with nonempty cylinder), in lexicographic order."""
        if m < 1:
            raise InputError("word length must be at least 1")
        if m not in self._words:
            if m == 1:
                out = tuple((a,) for a in sorted(self._live))
            else:
                out = tuple(w + (b,) for w in self.words(m - 1) for b in self._succ[w[-1]])
            self._words[m] = out
        return self._words[m]

    def is_allowed(self, w: Sequence[int]) -> bool:
        if not w or any(not 0 <= a < self.alphabet_size for a in w) or w[0] not in self._live:
            return False
        return all(b in self._succ[a] for a, b in zip(w, w[1:]))

    def matrix(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=np.int64)

    @classmethod
    def from_json(cls, obj: dict) -> "ShiftSpace":
        try:
            return cls(obj["alphabet"], tuple(tuple(r) for r in obj["adjacency"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"shift space needs 'alphabet' and 'adjacency': {exc}") from None

    def to_json(self) -> dict:
        return {"alphabet": self.alphabet_size, "adjacency": [list(r) for r in self.adjacency]}


def _bad_entry(v):
    raise InputError(f"adjacency entries must be 0 or 1, got {v!r}")


def full_shift(A: int = 2) -> ShiftSpace:
    return ShiftSpace(A, tuple(tuple(1 for _ in range(A)) for _ in range(A)))


def golden_mean_shift() -> ShiftSpace:
    """Binary sequences without two consecutive ones."""
    return ShiftSpace(2, ((1, 1), (1, 0)))


def permutation_shift(perm: Sequence[int]) -> ShiftSpace:
    """Shift whose only transitions are ``a -> perm[a]``; its points are periodic."""
    A = len(perm)
    if sorted(perm) != list(range(A)):
        raise InputError("not a permutation")
    return ShiftSpace(A, tuple(tuple(int(perm[a] == b) for b in range(A)) for a in range(A)))


def finite_points(space: ShiftSpace) -> tuple[FiniteSystem, tuple[int, ...]] | None:
    """The shift as a map on its points when there are finitely many of them.

    That happens exactly when every live symbol has one live successor; a
    point is then fixed by its first symbol. Returns the system on the live
    symbols (in increasing order) with those symbols as labels, else None.
    """
    live = sorted(space.live_symbols)
    if not live or any(len(space.successors(a)) != 1 for a in live):
        return None
    index = {a: i for i, a in enumerate(live)}
    return FiniteSystem(tuple(index[space.successors(a)[0]] for a in live)), tuple(live)


def cylinder_mesh(m: int) -> Fraction:
    """Upper bound on the diameter of a length-``m`` cylinder."""
    return Fraction(1, 2 ** (m - 1))


# --- clopen sets ------------------------------------------------------------


@dataclass(frozen=True)
class ClopenSet:
    """Union of the cylinders ``[w]`` over ``words``, all of length ``length``."""

    length: int
    words: frozenset[Word] = frozenset()

    def __post_init__(self):
        if self.length < 1:
            raise InputError("clopen set word length must be at least 1")
        ws = frozenset(tuple(int(a) for a in w) for w in self.words)
        if any(len(w) != self.length for w in ws):
            raise InputError(f"all words must have length {self.length}")
        object.__setattr__(self, "words", ws)

    def __len__(self) -> int:
        return len(self.words)

    def is_empty(self) -> bool:
        return not self.words

    def contains(self, point: Sequence[int]) -> bool:
        """Whether a point (given by a long enough prefix) lies in the set."""
        return tuple(point[: self.length]) in self.words

    def sorted_words(self) -> list[Word]:
        return sorted(self.words)

    def to_json(self, alphabet_size: int = 10) -> dict:
        return {"length": self.length, "words": [_word_str(w, alphabet_size) for w in self.sorted_words()]}

    @classmethod
    def from_json(cls, obj: dict) -> "ClopenSet":
        try:
            return cls(int(obj["length"]), frozenset(_parse_word(w) for w in obj["words"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"clopen set needs 'length' and 'words': {exc}") from None


def _word_str(w: Word, alphabet_size: int):
    return "".join(map(str, w)) if alphabet_size <= 10 else list(w)


def _parse_word(w) -> Word:
    if isinstance(w, str):
        if not w.isdigit():
            raise InputError(f"word {w!r} must be a string of digits")
        return tuple(int(c) for c in w)
    return tuple(int(a) for a in w)


def cylinder(space: ShiftSpace, word: Sequence[int] | str) -> ClopenSet:
    w = _parse_word(word)
    if not space.is_allowed(w):
        raise InputError(f"word {w} is not allowed")
    return ClopenSet(len(w), frozenset([w]))


def check_clopen(space: ShiftSpace, U: ClopenSet) -> ClopenSet:
    bad = [w for w in U.words if not space.is_allowed(w)]
    if bad:
        raise InputError(f"word {min(bad)} is not an allowed word of the shift")
    return U


def whole(space: ShiftSpace, m: int = 1) -> ClopenSet:
    return ClopenSet(m, frozenset(space.words(m)))


def lift(space: ShiftSpace, U: ClopenSet, m: int) -> ClopenSet:
    """Rewrite ``U`` with words of length ``m >= U.length``, appending all allowed continuations."""
    if m < U.length:
        raise InputError(f"cannot lift a length-{U.length} set to length {m}")
    if m == U.length:
        return U
    return ClopenSet(m, frozenset(w for w in space.words(m) if w[: U.length] in U.words))


def complement(space: ShiftSpace, U: ClopenSet) -> ClopenSet:
    return ClopenSet(U.length, frozenset(space.words(U.length)) - U.words)


def _common(space: ShiftSpace, sets: Sequence[ClopenSet]) -> list[ClopenSet]:
    m = max(U.length for U in sets)
    return [lift(space, U, m) for U in sets]


def union(space: ShiftSpace, *sets: ClopenSet) -> ClopenSet:
    sets = _common(space, sets)
    return ClopenSet(sets[0].length, frozenset().union(*(U.words for U in sets)))


def intersection(space: ShiftSpace, *sets: ClopenSet) -> ClopenSet:
    sets = _common(space, sets)
    return ClopenSet(sets[0].length, frozenset.intersection(*(U.words for U in sets)))


def difference(space: ShiftSpace, U: ClopenSet, V: ClopenSet) -> ClopenSet:
    U, V = _common(space, [U, V])
    return ClopenSet(U.length, U.words - V.words)


def same_set(space: ShiftSpace, U: ClopenSet, V: ClopenSet) -> bool:
    U, V = _common(space, [U, V])
    return U.words == V.words


def is_subset(space: ShiftSpace, U: ClopenSet, V: ClopenSet) -> bool:
    U, V = _common(space, [U, V])
    return U.words <= V.words


def preimage(space: ShiftSpace, U: ClopenSet) -> ClopenSet:
    """``f^{-1}(U)``: words ``a + w`` with ``w`` in ``U`` and ``a -> w[0]`` allowed."""
    live = space.live_symbols
    words = frozenset(
        (a,) + w for w in U.words for a in live if w[0] in space.successors(a)
    )
    return ClopenSet(U.length + 1, words)


def image(space: ShiftSpace, U: ClopenSet) -> ClopenSet:
    """``f(U)``. The image of ``[w]`` is ``[w[1:]]``, or the union of successor cylinders when ``len(w) == 1``."""
    if U.length == 1:
        return ClopenSet(1, frozenset((b,) for (a,) in U.words for b in space.successors(a)))
    return ClopenSet(U.length - 1, frozenset(w[1:] for w in U.words))


def separation_check(space: ShiftSpace, V: ClopenSet, r: int) -> bool:
    """True iff ``V`` is disjoint from ``f^k(V)`` for ``k = 1 .. r``."""
    if r < 1:
        raise InputError("r must be at least 1")
    m = V.length
    for u in space.words(m + r):
        if u[:m] in V.words and any(u[k:k + m] in V.words for k in range(1, r + 1)):
            return False
    return True


# --- itinerary automaton ----------------------------------------------------


class Finiteness(str, enum.Enum):
    FINITE = "FINITE"
    INFINITE = "INFINITE"


@dataclass(frozen=True)
class ItineraryAutomaton:
    """Deterministic automaton whose infinite label paths from state 0 are the itineraries.

    ``nodes`` are the allowed ``m``-words, ``node_label[i]`` the block holding
    node ``i``. Each automaton state is a set of nodes; states are numbered in
    breadth-first discovery order and ``delta[q]`` maps a label to a state.
    """

    nodes: tuple[Word, ...]
    node_label: tuple[int, ...]
    states: tuple[frozenset[int], ...]
    delta: tuple[dict, ...]

    @property
    def n_states(self) -> int:
        return len(self.states)

    def run(self, labels: Iterable[int], q: int = 0) -> int | None:
        for c in labels:
            q = self.delta[q].get(c)
            if q is None:
                return None
        return q

    def accepts_lasso(self, pre: Sequence[int], per: Sequence[int]) -> bool:
        """Whether the eventually periodic sequence ``pre + per + per + ...`` is realized."""
        q = self.run(pre)
        if q is None:
            return False
        if not per:
            raise InputError("period word must be nonempty")
        seen = set()
        while q not in seen:
            seen.add(q)
            q = self.run(per, q)
            if q is None:
                return False
        return True

    def graph(self) -> nx.DiGraph:
        G = nx.DiGraph()
        G.add_nodes_from(range(self.n_states))
        for q, d in enumerate(self.delta):
            for c, t in d.items():
                G.add_edge(q, t)
        return G

    def cycle_states(self) -> frozenset[int]:
        G = self.graph()
        out = set()
        for comp in nx.strongly_connected_components(G):
            if len(comp) > 1 or any(G.has_edge(q, q) for q in comp):
                out |= comp
        return frozenset(out)


def _blocks_of(P) -> list[ClopenSet]:
    blocks = getattr(P, "blocks", P)
    return list(blocks)


def _node_labels(space: ShiftSpace, blocks: Sequence[ClopenSet]) -> tuple[int, tuple[Word, ...], tuple[int, ...]]:
    if not blocks:
        raise InputError("a partition needs at least one block")
    for U in blocks:
        check_clopen(space, U)
    m = max(U.length for U in blocks)
    nodes = space.words(m)
    label: dict[Word, int] = {}
    for i, U in enumerate(blocks):
        for w in lift(space, U, m).words:
            if w in label:
                raise InputError(f"blocks {label[w]} and {i} overlap on cylinder {w}")
            label[w] = i
    gap = [w for w in nodes if w not in label]
    if gap:
        raise InputError(f"blocks do not cover the cylinder {gap[0]}")
    return m, nodes, tuple(label[w] for w in nodes)


def itinerary_automaton(space: ShiftSpace, P) -> ItineraryAutomaton:
    """Subset construction on the ``m``-block graph labelled by partition blocks.

    ``P`` is a partition (anything with ``.blocks``) or a sequence of clopen
    sets; blocks are lifted to their common length. Empty blocks are allowed
    here; their labels simply never occur.
    """
    if space.is_empty:
        raise InputError("the shift space is empty")
    m, nodes, labels = _node_labels(space, _blocks_of(P))
    index = {w: i for i, w in enumerate(nodes)}
    succ_mask = []
    for w in nodes:
        mask = 0
        for b in space.successors(w[-1]):
            mask |= 1 << index[w[1:] + (b,)]
        succ_mask.append(mask)
    n_labels = max(labels) + 1
    label_mask = [0] * n_labels
    for i, c in enumerate(labels):
        label_mask[c] |= 1 << i

    start = (1 << len(nodes)) - 1
    found = {start: 0}
    order = [start]
    delta: list[dict] = []
    head = 0
    while head < len(order):
        S = order[head]
        head += 1
        d = {}
        for c in range(n_labels):
            sel = S & label_mask[c]
            if not sel:
                continue
            T = 0
            while sel:
                low = sel & -sel
                T |= succ_mask[low.bit_length() - 1]
                sel ^= low
            if T not in found:
                found[T] = len(order)
                order.append(T)
            d[c] = found[T]
        delta.append(d)
    states = tuple(frozenset(i for i in range(len(nodes)) if S >> i & 1) for S in order)
    return ItineraryAutomaton(nodes, labels, states, tuple(delta))


@dataclass(frozen=True)
class BranchWitness:
    """A reachable automaton state on a cycle that has two outgoing labels."""

    state: int
    labels: tuple[int, int]
    cycle_word: tuple[int, ...]
    access_word: tuple[int, ...]

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "labels": list(self.labels),
            "cycle_word": list(self.cycle_word),
            "access_word": list(self.access_word),
        }


Itinerary = tuple[tuple[int, ...], tuple[int, ...]]


def canonical_itinerary(pre: Sequence[int], per: Sequence[int]) -> Itinerary:
    """Shortest ``(preperiod, period)`` describing ``pre + per^infinity``."""
    pre, per = list(pre), list(per)
    if not per:
        raise InputError("period word must be nonempty")
    n = len(per)
    for d in range(1, n + 1):
        if n % d == 0 and per == per[:d] * (n // d):
            per = per[:d]
            break
    while pre and pre[-1] == per[-1]:
        pre.pop()
        per = per[-1:] + per[:-1]
    return tuple(pre), tuple(per)


def shift_itinerary(it: Itinerary) -> Itinerary:
    pre, per = it
    if pre:
        return canonical_itinerary(pre[1:], per)
    return canonical_itinerary((), per[1:] + per[:1])


@dataclass(frozen=True)
class ItineraryReport:
    kind: Finiteness
    itineraries: tuple[Itinerary, ...] = ()
    witness: BranchWitness | None = None
    automaton_states: int = 0

    @property
    def finite(self) -> bool:
        return self.kind is Finiteness.FINITE

    def stabilization(self) -> tuple[int, int]:
        """``(k, s)`` such that every itinerary is ``s``-periodic after ``k`` steps."""
        if not self.finite:
            raise InputError("only a finite itinerary set stabilizes")
        k = max(len(pre) for pre, _ in self.itineraries)
        s = math.lcm(*(len(per) for _, per in self.itineraries))
        return k, s

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "automaton_states": self.automaton_states}
        if self.finite:
            out["itineraries"] = [{"preperiod": list(a), "period": list(b)} for a, b in self.itineraries]
        else:
            out["witness"] = self.witness.to_json()
        return out


def _access_words(aut: ItineraryAutomaton) -> list[tuple[int, ...]]:
    words: list = [None] * aut.n_states
    words[0] = ()
    for q in range(aut.n_states):
        for c, t in sorted(aut.delta[q].items()):
            if words[t] is None:
                words[t] = words[q] + (c,)
    return words


def _cycle_word(aut: ItineraryAutomaton, q: int, first: int) -> tuple[int, ...]:
    # shortest label word leading from q back to q, starting with `first`
    start = aut.delta[q][first]
    prev = {start: None}
    queue = [start]
    head = 0
    while head < len(queue):
        p = queue[head]
        head += 1
        if p == q:
            break
        for c, t in sorted(aut.delta[p].items()):
            if t not in prev:
                prev[t] = (p, c)
                queue.append(t)
    if q not in prev:
        return ()
    word = []
    p = q
    while prev[p] is not None:
        p, c = prev[p]
        word.append(c)
    return (first,) + tuple(reversed(word))


def report_from_automaton(aut: ItineraryAutomaton) -> ItineraryReport:
    on_cycle = aut.cycle_states()
    branching = [q for q in sorted(on_cycle) if len(aut.delta[q]) >= 2]
    if branching:
        q = branching[0]
        labels = sorted(aut.delta[q])
        # one of the outgoing labels stays on the cycle through q
        for c in labels:
            cyc = _cycle_word(aut, q, c)
            if cyc:
                break
        other = next(c for c in labels if c != cyc[0])
        witness = BranchWitness(q, (cyc[0], other), cyc, _access_words(aut)[q])
        return ItineraryReport(Finiteness.INFINITE, witness=witness, automaton_states=aut.n_states)

    found: set[Itinerary] = set()
    stack = [(0, ())]
    while stack:
        q, path = stack.pop()
        if q in on_cycle:
            per = []
            p = q
            while True:
                (c, p), = aut.delta[p].items()
                per.append(c)
                if p == q:
                    break
            found.add(canonical_itinerary(path, per))
            continue
        for c, t in aut.delta[q].items():
            stack.append((t, path + (c,)))
    return ItineraryReport(Finiteness.FINITE, tuple(sorted(found)), automaton_states=aut.n_states)


def itinerary_finiteness(space: ShiftSpace, P) -> ItineraryReport:
    """Decide whether the itineraries with respect to ``P`` form a finite set.

    FINITE reports enumerate them as canonical ``(preperiod, period)`` pairs;
    INFINITE reports carry a branching cycle state as witness.
    """
    return report_from_automaton(itinerary_automaton(space, P))


def binary_itinerary_finiteness(space: ShiftSpace, U: ClopenSet) -> ItineraryReport:
    """Itineraries with respect to ``{complement of U, U}``, labelled 0 and 1."""
    check_clopen(space, U)
    return itinerary_finiteness(space, [complement(space, U), U])


# --- entropy ----------------------------------------------------------------


def _perron_root(B: np.ndarray, tol: float, max_iter: int) -> float:
    """Spectral radius of an irreducible nonnegative matrix.

    Power iteration on ``B + I`` (primitive, so it converges); the
    Collatz-Wielandt quotients bracket the root at every step and the loop
    stops once the bracket is narrower than ``tol``.
    """
    C = B + np.eye(B.shape[0])
    x = np.ones(B.shape[0])
    for _ in range(max_iter):
        y = C @ x
        q = y / x
        lo, hi = q.min(), q.max()
        if hi - lo < tol:
            return 0.5 * (lo + hi) - 1.0
        x = y / y.max()
    raise InternalError(f"power iteration did not converge in {max_iter} steps")


def entropy(space: ShiftSpace, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Topological entropy: log of the spectral radius of the trimmed adjacency matrix."""
    ess = sorted(space.essential_symbols)
    if not ess:
        raise InputError("the shift space is empty")
    A = space.matrix()[np.ix_(ess, ess)]
    if np.all(A.sum(axis=0) == 1) and np.all(A.sum(axis=1) == 1):
        return 0.0
    G = nx.from_numpy_array(A, create_using=nx.DiGraph)
    rho = 0.0
    for comp in nx.strongly_connected_components(G):
        idx = sorted(comp)
        B = A[np.ix_(idx, idx)].astype(float)
        if not B.any():
            continue
        if np.all(B.sum(axis=1) == 1):
            rho = max(rho, 1.0)
            continue
        rho = max(rho, _perron_root(B, tol, max_iter))
    if rho <= 1.0:
        return 0.0
    return math.log(rho)


# --- the S_r subshift -------------------------------------------------------


def s_r_shift(r: int) -> ShiftSpace:
    """Vertex shift conjugate to ``S_r``: each 1 is followed by at least ``r`` zeros.

    Vertex 0 carries the symbol 1. For ``1 <= d < r`` vertex ``d`` is a 0 whose
    next 1 comes exactly ``d`` steps later, and vertex ``r`` is a 0 whose next
    1 is at least ``r`` steps away (or never). Looking forward rather than
    back makes the coding a bijection on one-sided points. ``r = 0`` gives the
    full 2-shift with vertex 0 standing for 1.
    """
    if r < 0:
        raise InputError("r must be nonnegative")
    if r == 0:
        return full_shift(2)
    n = r + 1
    adj = [[0] * n for _ in range(n)]
    adj[0][r] = 1
    for d in range(1, r):
        adj[d][d - 1] = 1
    adj[r][r] = 1
    adj[r][r - 1 if r >= 2 else 0] = 1
    return ShiftSpace(n, tuple(map(tuple, adj)))


def s_r_symbols(r: int) -> tuple[int, ...]:
    """The 0/1 symbol carried by each vertex of :func:`s_r_shift`."""
    return (1,) + (0,) * max(r, 1)


def s_r_decode(r: int, vertices: Sequence[int]) -> Word:
    sym = s_r_symbols(r)
    return tuple(sym[v] for v in vertices)


def s_r_cylinder(r: int, word: Sequence[int] | str) -> ClopenSet:
    """Clopen set of points of :func:`s_r_shift` whose 0/1 coding begins with ``word``."""
    w = _parse_word(word)
    space = s_r_shift(r)
    return ClopenSet(len(w), frozenset(v for v in space.words(len(w)) if s_r_decode(r, v) == w))
