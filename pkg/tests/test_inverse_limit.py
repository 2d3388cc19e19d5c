import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clopendyn import core_dynamics as cd
from clopendyn import inverse_limit as il
from clopendyn import partitions as pt
from clopendyn.core_dynamics import FiniteSystem
from clopendyn.errors import InputError, InvariantError
from clopendyn.inverse_limit import InverseSystem, OmegaKind

from oracles import random_tower

bases_st = st.lists(st.integers(1, 4), min_size=1, max_size=4)


def corrupt(sys: InverseSystem, level: int, state: int) -> InverseSystem:
    bonds = [list(b) for b in sys.bonds]
    lower = sys.level(level)
    bonds[level - 1][state] = (bonds[level - 1][state] + 1) % lower.size
    return InverseSystem(sys.levels, tuple(map(tuple, bonds)))


def test_validate_examples():
    assert il.validate(il.odometer([2, 2])).ok
    bad = corrupt(il.odometer([2, 2]), 1, 3)
    report = il.validate(bad)
    assert not report.ok
    v = report.violations[0]
    assert v.kind == "commutation" and v.level == 1
    assert il.validate(InverseSystem((FiniteSystem((0,)),), ())).ok
    with pytest.raises(InputError):
        il.require_valid(bad)


def test_validate_reports_non_surjective_bond():
    sys = InverseSystem((FiniteSystem((0, 1)), FiniteSystem((0,))), ((0,),))
    report = il.validate(sys)
    assert report.ok and report.surjective == (False,)
    assert report.violations[0].kind == "surjectivity"


def test_shape_errors():
    with pytest.raises(InputError):
        InverseSystem((), ())
    with pytest.raises(InputError):
        InverseSystem((FiniteSystem((0,)), FiniteSystem((0, 1))), ((0,),))
    with pytest.raises(InputError):
        il.odometer([2, 0])


def test_odometer_examples():
    od = il.odometer([2, 2])
    top = od.level(2)
    x = il.index_of([2, 2], (1, 1))
    assert il.digits_of([2, 2], top.map[x]) == (0, 0)
    assert il.odometer([2]).level(1).map == (1, 0)
    six = il.odometer([2, 3]).level(2)
    assert len(cd.cycles(six)) == 1 and len(cd.cycles(six)[0]) == 6


def test_carry_rule_literal():
    assert il.odometer_step([2, 3, 2], (1, 0, 1)) == (0, 1, 1)
    assert il.odometer_step([2, 3, 2], (1, 2, 0)) == (0, 0, 1)
    assert il.odometer_step([2, 3, 2], (1, 2, 1)) == (0, 0, 0)
    assert il.odometer_step([2, 3, 2], (0, 2, 1)) == (1, 2, 1)


@given(bases_st)
def test_odometer_properties(bases):
    od = il.odometer(bases)
    assert il.validate(od).ok and all(il.validate(od).surjective)
    for n in range(1, od.depth + 1):
        F = od.level(n)
        assert len(cd.cycles(F)) == 1 and len(cd.cycles(F)[0]) == F.size
        bs = bases[:n]
        for x in F.states:
            assert il.digits_of(bs, F.map[x]) == il.odometer_step(bs, il.digits_of(bs, x))
            assert il.index_of(bs, il.digits_of(bs, x)) == x


def test_cylinder_partition_examples():
    od = il.odometer([2, 2])
    P = il.cylinder_partition(od, 1)
    assert len(P.blocks) == 2 and pt.is_dynamical(P)
    P = il.cylinder_partition(il.odometer([2, 3]), 2)
    assert len(P.blocks) == 6 and pt.is_dynamical(P)
    with pytest.raises(InputError):
        il.cylinder_partition(od, 3)


@given(st.integers(0, 10_000), st.integers(1, 4))
def test_cylinder_partitions_are_dynamical_and_nested(seed, depth):
    sys = random_tower(random.Random(seed), depth)
    assert il.validate(sys).ok
    prev = None
    for n in range(1, depth + 1):
        P = il.cylinder_partition(sys, n)
        assert pt.is_dynamical(P)
        assert P.mesh == il.level_mesh(n)
        if prev is not None:
            assert pt.refines(P, prev) is not None
        prev = P


def test_omega_limit_examples():
    od = il.odometer([2, 2, 2])
    for top in od.level(3).states:
        w = il.omega_limit_class(od, il.thread_from_top(od, top))
        assert w.kind is OmegaKind.ADDING_MACHINE and w.periods == (2, 4, 8)
    ident = InverseSystem((FiniteSystem.identity(2),) * 3, ((0, 1), (0, 1)))
    w = il.omega_limit_class(ident, il.thread_from_top(ident, 1))
    assert w.kind is OmegaKind.PERIODIC and w.periods == (1, 1, 1)
    # a fixed point doubled into a 2-cycle, then kept
    stab = InverseSystem(
        (FiniteSystem((0,)), FiniteSystem((1, 0)), FiniteSystem((1, 0))),
        ((0, 0), (0, 1)),
    )
    w = il.omega_limit_class(stab, il.thread_from_top(stab, 0))
    assert w.kind is OmegaKind.PERIODIC and w.periods == (1, 2, 2) and w.stabilized_from == 2


@given(st.integers(0, 10_000), st.integers(1, 5))
def test_omega_periods_divide(seed, depth):
    sys = random_tower(random.Random(seed), depth)
    for top in sys.level(depth).states:
        w = il.omega_limit_class(sys, il.thread_from_top(sys, top))
        assert all(b % a == 0 for a, b in zip(w.periods, w.periods[1:]))


def test_invalid_thread():
    od = il.odometer([2, 2])
    with pytest.raises(InputError):
        il.omega_limit_class(od, il.Thread((0, 1)))
    with pytest.raises(InputError):
        il.omega_limit_class(od, il.Thread((0,)))


def test_stable_basis_examples():
    od = il.odometer([2, 2])
    basis = il.stable_basis(od, [range(2), range(4)])
    assert [b.states for b in basis] == [{0, 1}, {0, 1, 2, 3}]
    # two disjoint 2-cycles on top of two fixed points
    two = InverseSystem(
        (FiniteSystem((0, 1)), FiniteSystem((2, 3, 0, 1))),
        ((0, 1, 0, 1),),
    )
    assert il.validate(two).ok
    basis = il.stable_basis(two, [{0}, {0, 2}])
    for n, b in enumerate(basis, start=1):
        assert cd.is_invariant(two.level(n), b.states)
    assert basis[1].states <= basis[0].lift(two, 2).states
    with pytest.raises(InvariantError):
        il.stable_basis(two, [{0}, {0}])
    with pytest.raises(InvariantError):
        il.stable_basis(two, [{0}, {1, 3}])


def test_json_round_trip():
    od = il.odometer([2, 3])
    assert InverseSystem.from_json(od.to_json()) == od
    with pytest.raises(InputError):
        InverseSystem.from_json({"bonds": []})


def test_project_and_lift():
    od = il.odometer([2, 3])
    assert il.project(od, 5, 2, 1) == 1
    assert il.lift_states(od, {1}, 1, 2) == {1, 3, 5}
    with pytest.raises(InputError):
        il.project(od, 0, 1, 2)
