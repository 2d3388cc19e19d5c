import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clopendyn import inverse_limit as il
from clopendyn import partitions as pt
from clopendyn import symbolic as sym
from clopendyn.core_dynamics import FiniteSystem
from clopendyn.errors import DepthExceededError, InputError, InvariantError
from clopendyn.inverse_limit import InverseSystem
from clopendyn.partitions import LevelPartition, ShiftPartition
from clopendyn.symbolic import ClopenSet, ItineraryReport

from oracles import random_shift, random_tower, set_partitions

FULL = sym.full_shift(2)
GOLDEN = sym.golden_mean_shift()


def shift_blocks(space, m, labels):
    ws = space.words(m)
    cells = [frozenset(w for w, a in zip(ws, labels) if a == i) for i in range(max(labels) + 1)]
    return ShiftPartition(space, tuple(ClopenSet(m, c) for c in cells if c))


def random_level_partition(rng, sys, n, k):
    states = list(sys.level(n).states)
    labels = [rng.randrange(k) for _ in states]
    blocks = [frozenset(x for x, a in zip(states, labels) if a == i) for i in range(k)]
    return LevelPartition(sys, n, tuple(b for b in blocks if b))


def test_partition_validation():
    od = il.odometer([2, 2])
    with pytest.raises(InputError):
        LevelPartition(od, 2, (frozenset({0, 1}), frozenset({1, 2})))
    with pytest.raises(InputError):
        LevelPartition(od, 2, (frozenset(),))
    with pytest.raises(InputError):
        ShiftPartition(FULL, (sym.cylinder(FULL, "0"),))
    assert not LevelPartition(od, 2, (frozenset({0}),)).covers


def test_is_dynamical_examples():
    od = il.odometer([2, 3])
    w = pt.is_dynamical(il.cylinder_partition(od, 2))
    assert w and w.tau == od.level(2).map
    bad = pt.is_dynamical(pt.cylinder_shift_partition(FULL, 1))
    assert not bad and bad.block == 0 and bad.targets == (0, 1)
    perm = sym.permutation_shift([2, 0, 1])
    w = pt.is_dynamical(pt.cylinder_shift_partition(perm, 1))
    assert w.tau == (2, 0, 1)


def test_common_refinement_examples():
    od = il.odometer([2, 2])
    P1, P2 = il.cylinder_partition(od, 1), il.cylinder_partition(od, 2)
    assert set(pt.common_refinement(P2, P2).blocks) == set(P2.blocks)
    assert set(pt.common_refinement(P1, P2).blocks) == set(P2.blocks)
    A = pt.cylinder_shift_partition(FULL, 1)
    B = shift_blocks(FULL, 2, [0, 1, 1, 0])
    R = pt.common_refinement(A, B)
    assert len(R.blocks) == 4 and pt.refines(R, A) is not None and pt.refines(R, B) is not None
    with pytest.raises(InputError):
        pt.common_refinement(A, P1)


@given(st.integers(0, 10_000))
def test_join_of_dynamical_partitions_is_dynamical(seed):
    rng = random.Random(seed)
    sys = random_tower(rng, 3)
    P = pt.refine_from_itineraries(random_level_partition(rng, sys, rng.randint(1, 3), 2))
    Q = pt.refine_from_itineraries(random_level_partition(rng, sys, rng.randint(1, 3), 3))
    R = pt.common_refinement(P, Q)
    assert pt.is_dynamical(R)
    assert pt.refines(R, P) is not None and pt.refines(R, Q) is not None
    assert R.mesh <= min(P.mesh, Q.mesh)


def test_refine_examples():
    od = il.odometer([2, 2])
    P = il.cylinder_partition(od, 2)
    R = pt.refine_from_itineraries(P)
    assert pt.is_dynamical(R) and pt.refines(R, P) is not None
    perm = sym.permutation_shift([1, 2, 0, 4, 3])
    V = shift_blocks(perm, 1, [0, 0, 1, 1, 1])
    R = pt.refine_from_itineraries(V)
    assert isinstance(R, ShiftPartition) and pt.is_dynamical(R)
    # itineraries 001, 010, 100 on the 3-cycle and 11 on the 2-cycle
    assert len(R.blocks) == 4
    rep = pt.refine_from_itineraries(pt.cylinder_shift_partition(FULL, 1))
    assert isinstance(rep, ItineraryReport) and not rep.finite


def check_refinement(V, R):
    assert pt.is_dynamical(R)
    assert pt.refines(R, V) is not None
    tau = pt.is_dynamical(R).tau
    its = R.itineraries
    for i, it in enumerate(its):
        assert its[tau[i]] == sym.shift_itinerary(it)
    # every block sits inside the V-block named by its first itinerary symbol
    for i, (pre, per) in enumerate(its):
        first = (pre + per)[0]
        block = R.blocks[i]
        if isinstance(R, LevelPartition):
            assert block <= V.blocks[first]
        else:
            lifted = V.lift(R.length)
            assert block.words <= lifted.blocks[first].words


@given(st.integers(0, 10_000))
def test_refine_level_partitions(seed):
    rng = random.Random(seed)
    sys = random_tower(rng, rng.randint(1, 4))
    V = random_level_partition(rng, sys, rng.randint(1, sys.depth), rng.randint(1, 3))
    check_refinement(V, pt.refine_from_itineraries(V))


@given(st.integers(0, 10_000))
def test_refine_shift_partitions(seed):
    rng = random.Random(seed)
    S = random_shift(rng, rng.randint(1, 3), 0.5)
    m = rng.randint(1, 2)
    V = shift_blocks(S, m, [rng.randrange(2) for _ in S.words(m)])
    R = pt.refine_from_itineraries(V)
    if isinstance(R, ItineraryReport):
        assert not R.finite
    else:
        check_refinement(V, R)


def exhaustive_dynamical_refinement(V: ShiftPartition, max_words: int = 8):
    """Search every partition of the m-words, for each m from V.length while
    there are at most ``max_words`` words, for a dynamical refinement of V."""
    S = V.space
    m = V.length
    while len(S.words(m)) <= max_words:
        Vm = V.lift(m)
        for cells in set_partitions(S.words(m)):
            P = ShiftPartition(S, tuple(ClopenSet(m, c) for c in cells))
            if pt.refines(P, Vm) is not None and pt.is_dynamical(P):
                return P
        m += 1
    return None


@given(st.integers(0, 10_000))
def test_converse_on_small_shifts(seed):
    rng = random.Random(seed)
    S = random_shift(rng, rng.randint(1, 3), 0.5)
    V = shift_blocks(S, 1, [rng.randrange(2) for _ in S.words(1)])
    found = exhaustive_dynamical_refinement(V)
    verdict = sym.itinerary_finiteness(S, V)
    if found is not None:
        assert verdict.finite
    if not verdict.finite:
        assert found is None


def test_extend_from_subsystem_examples():
    od = il.odometer([2, 2])
    W = il.cylinder_partition(od, 2)
    V = pt.extend_from_subsystem(od, [range(2), range(4)], W)
    assert V.blocks == W.blocks
    # two disjoint 2-cycles over two fixed points
    two = InverseSystem((FiniteSystem((0, 1)), FiniteSystem((2, 3, 0, 1))), ((0, 1, 0, 1),))
    W = LevelPartition(two, 1, (frozenset({0}),))
    V = pt.extend_from_subsystem(two, [{0}, {0, 2}], W, level=2)
    assert V.blocks == (frozenset({0, 2}),) and pt.is_dynamical(V)
    W2 = LevelPartition(two, 2, (frozenset({0}), frozenset({2})))
    V2 = pt.extend_from_subsystem(two, [{0}, {0, 2}], W2, eps=Fraction(1, 2))
    assert V2.blocks == ((frozenset({0})), frozenset({2}))
    with pytest.raises(InputError):
        pt.extend_from_subsystem(two, [{0}, {0, 2}], W2, eps=Fraction(1, 4))
    with pytest.raises(InvariantError):
        pt.extend_from_subsystem(two, [{0}, {0}], W)


def test_extend_to_preimage_examples():
    F = FiniteSystem((1, 2, 2, 0))
    V = LevelPartition(F, 1, (frozenset({1}), frozenset({2})))
    out = pt.extend_to_preimage(F, {1, 2}, V)
    assert out.blocks == (frozenset({1}), frozenset({2}), frozenset({0}))
    assert pt.is_dynamical(out)
    whole = il.cylinder_partition(F, 1)
    assert pt.extend_to_preimage(F, range(4), whole).blocks == whole.blocks
    with pytest.raises(InvariantError):
        pt.extend_to_preimage(F, {1}, LevelPartition(F, 1, (frozenset({1}),)))


def test_extend_to_basin():
    F = FiniteSystem((1, 2, 2, 0))
    V = LevelPartition(F, 1, (frozenset({2}),))
    out, hit = pt.extend_to_basin(F, {2}, V)
    assert hit.n0 == 3 and out.domain == {0, 1, 2, 3} and pt.is_dynamical(out)


def test_find_partition_examples():
    od = il.odometer([2, 2, 2])
    P = pt.find_dynamical_epsilon_partition(od, Fraction(3, 10))
    assert isinstance(P, LevelPartition) and P.level == 2 and P.mesh == Fraction(1, 4)
    perm = sym.permutation_shift([1, 2, 0])
    for eps in (Fraction(1), Fraction(1, 10), Fraction(1, 1000)):
        P = pt.find_dynamical_epsilon_partition(perm, eps)
        assert pt.is_dynamical(P) and P.mesh < eps
    cert = pt.find_dynamical_epsilon_partition(GOLDEN, Fraction(1, 2))
    assert isinstance(cert, pt.NonexistenceCertificate) and cert.verify()
    with pytest.raises(DepthExceededError):
        pt.find_dynamical_epsilon_partition(od, Fraction(1, 10))
    with pytest.raises(InputError):
        pt.find_dynamical_epsilon_partition(od, 0)


def test_tower_round_trip():
    od = il.odometer([2, 3, 2])
    chain = [il.cylinder_partition(od, n) for n in range(1, 4)]
    tower = pt.tower_from_partitions(chain)
    assert il.validate(tower).ok
    for n in range(1, 4):
        assert tower.level(n).size == len(chain[n - 1].blocks)
        assert tower.level(n).map == od.level(n).map
