import cmath
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clopendyn import cech
from clopendyn import core_dynamics as cd
from clopendyn import inverse_limit as il
from clopendyn import partitions as pt
from clopendyn import symbolic as sym
from clopendyn.cech import Verdict
from clopendyn.core_dynamics import FiniteSystem
from clopendyn.errors import InputError
from clopendyn.expansion import r_of_lambda
from clopendyn.inverse_limit import LevelClopen
from clopendyn.symbolic import ClopenSet

from oracles import char_poly_residual, random_shift

FULL = sym.full_shift(2)
GOLDEN = sym.golden_mean_shift()
CYCLE3 = FiniteSystem((1, 2, 0))


@st.composite
def systems(draw, max_size=10):
    n = draw(st.integers(1, max_size))
    return FiniteSystem(tuple(draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))))


def test_pullback_examples():
    assert np.array_equal(cech.pullback_matrix(FiniteSystem.identity(3)), np.eye(3))
    M = cech.pullback_matrix(FiniteSystem((1, 2, 1, 0)))
    assert [int(np.argmax(row)) for row in M] == [1, 2, 1, 0]
    assert M.sum(axis=1).tolist() == [1, 1, 1, 1]
    phi = np.array([5.0, 7.0, 11.0])
    assert (cech.pullback_matrix(CYCLE3) @ phi).tolist() == [7.0, 11.0, 5.0]
    assert np.array_equal(cech.pushforward_matrix(CYCLE3), cech.pullback_matrix(CYCLE3).T)


def test_spectrum_examples():
    s = cech.spectrum(CYCLE3)
    assert sorted(s.roots) == [(3, 0), (3, 1), (3, 2)] and s.zero_multiplicity == 0
    s = cech.spectrum(FiniteSystem.identity(4))
    assert s.nonzero() == {Fraction(0): 4}
    s = cech.spectrum(FiniteSystem((1, 2, 1, 0)))
    assert s.nonzero() == {Fraction(0): 1, Fraction(1, 2): 1} and s.zero_multiplicity == 2
    assert s.contains(-1) and s.contains(0) and not s.contains(2)


@given(systems())
def test_spectrum_roots_satisfy_characteristic_polynomial(F):
    s = cech.spectrum(F)
    assert s.size == F.size
    for (order, k), z in zip(s.roots, s.values()):
        assert cech.root_of_unity_check(z) == order // np.gcd(order, k)
        assert char_poly_residual(F, z) < 1e-9
    if s.zero_multiplicity:
        assert char_poly_residual(F, 0) < 1e-9
    # and nothing else: the sorted eigenvalues agree with a general solver
    got = np.sort_complex(np.round(s.values(), 6))
    ref = np.sort_complex(np.round(np.linalg.eigvals(cech.pullback_matrix(F).astype(complex)), 6))
    assert np.allclose(got, ref, atol=1e-5)


@given(systems(max_size=8), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_pushforward_duality(F, z):
    M = cech.pullback_matrix(F).astype(complex)
    N = cech.pushforward_matrix(F).astype(complex)
    I = np.eye(F.size)
    a, b = np.linalg.det(M - z * I), np.linalg.det(N - z * I)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))
    for w in cech.spectrum(F).values():
        assert abs(np.linalg.det(N - w * I)) < 1e-6


@given(systems())
def test_nonzero_spectrum_lives_on_the_eventual_image(F):
    sub, _ = cd.restrict(F, cd.eventual_image(F))
    assert cech.spectrum(F).nonzero() == cech.spectrum(sub).nonzero()
    assert cech.spectrum(sub).zero_multiplicity == 0


def test_root_of_unity_examples():
    assert cech.root_of_unity_check(-1) == 2
    assert cech.root_of_unity_check(cmath.exp(2j * cmath.pi / 3)) == 3
    assert cech.root_of_unity_check(2) is None
    assert cech.root_of_unity_check("i") == 4
    assert cech.root_of_unity_check(cmath.exp(2j * cmath.pi / 65)) is None
    assert cech.root_of_unity_check(cmath.exp(2j * cmath.pi / 65), s_max=65) == 65
    with pytest.raises(InputError):
        cech.root_of_unity_check(0)


def test_coboundary_three_cycle():
    res = cech.coboundary_solve(CYCLE3, 2, {0})
    assert res.feasible and res.exact and res.unique
    assert res.psi.values == (Fraction(-4, 7), Fraction(-1, 7), Fraction(-2, 7))
    json = res.to_json()
    assert [v["value"] for v in json["psi"]["values"]] == ["-4/7", "-1/7", "-2/7"]


def test_coboundary_examples():
    for sys, V in [(CYCLE3, set()), (il.odometer([2, 2]), LevelClopen(1, frozenset())), (FULL, ClopenSet(1, frozenset()))]:
        res = cech.coboundary_solve(sys, 2, V)
        assert res.feasible and all(v == 0 for v in res.psi.values)
    bad = cech.coboundary_solve(CYCLE3, 1, {0})
    assert not bad.feasible and bad.witness == {0: 1, 1: 1, 2: 1}
    g = cech.coboundary_solve(CYCLE3, "1+2i", {0})
    assert g.feasible and g.exact
    fl = cech.coboundary_solve(CYCLE3, 2.0, {0})
    assert fl.feasible and not fl.exact and fl.residual < 1e-9
    assert np.allclose([complex(v) for v in fl.psi.values], [-4 / 7, -1 / 7, -2 / 7])
    with pytest.raises(InputError):
        cech.coboundary_solve(CYCLE3, 0, {0})
    with pytest.raises(InputError):
        cech.coboundary_solve(il.odometer([2, 2]), 2, LevelClopen(2, frozenset({0})), m=1)


def test_coboundary_full_shift_is_infeasible_at_every_resolution():
    U = sym.cylinder(FULL, "1")
    assert not sym.binary_itinerary_finiteness(FULL, U).finite
    for m in range(1, 9):
        res = cech.coboundary_solve(FULL, 2, U, m)
        assert not res.feasible and res.exact
        assert res.unknowns == 2**m and res.equations == 2 ** (m + 1)
        check_certificate(FULL, U, m, 2, res.witness)


def check_certificate(space, V, m, lam, y):
    """``y`` annihilates every column of the coboundary system and pairs to 1 with chi_V."""
    keys = space.words(m)
    rows = space.words(max(m + 1, V.length))
    col = {w: 0 for w in keys}
    rhs = 0
    for i, u in enumerate(rows):
        c = y.get(i, 0)
        col[u[1:m + 1]] += c
        col[u[:m]] -= lam * c
        rhs += c * (u[:V.length] in V.words)
    assert all(v == 0 for v in col.values())
    assert rhs == 1


def solution_holds(system, lam, V, res):
    psi = res.psi.as_dict()
    if isinstance(system, sym.ShiftSpace):
        m = res.resolution
        for u in system.words(max(m + 1, V.length)):
            lhs = psi[u[1:m + 1]] - lam * psi[u[:m]]
            if lhs != (u[:V.length] in V.words):
                return False
        return True
    F = il.as_tower(system).level(res.resolution)
    return all(psi[F.map[i]] - lam * psi[i] == (i in V) for i in F.states)


@given(systems(), st.sampled_from([2, -3, Fraction(1, 2), Fraction(5, 3)]), st.data())
def test_coboundary_solutions_are_exact(F, lam, data):
    V = data.draw(st.sets(st.sampled_from(list(F.states))))
    res = cech.coboundary_solve(F, lam, V)
    # |lam| is not 1, so lam is outside the spectrum and the solution is unique
    assert res.feasible and res.unique
    assert solution_holds(F, lam, V, res)


@given(systems(max_size=8), st.data())
def test_coboundary_at_roots_of_unity(F, data):
    V = data.draw(st.sets(st.sampled_from(list(F.states))))
    res = cech.coboundary_solve(F, 1, V)
    if res.feasible:
        assert solution_holds(F, 1, V, res)
    else:
        # the certificate pairs to 1 with chi_V and kills psi o f - psi
        y = res.witness
        col = {i: 0 for i in F.states}
        for i, c in y.items():
            col[F.map[i]] += c
            col[i] -= c
        assert all(v == 0 for v in col.values())
        assert sum(c for i, c in y.items() if i in V) == 1


@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_branching_itineraries_block_the_coboundary(seed, lam):
    rng = random.Random(seed)
    r = r_of_lambda(lam)
    if rng.random() < 0.5:
        S = sym.s_r_shift(rng.randint(r, r + 1))
        U = sym.cylinder(S, (0,))
    else:
        S = random_shift(rng, rng.randint(2, 3), 0.6)
        U = sym.cylinder(S, S.words(1)[rng.randrange(len(S.words(1)))])
    if sym.binary_itinerary_finiteness(S, U).finite or not sym.separation_check(S, U, r):
        return
    for m in range(1, 5):
        res = cech.coboundary_solve(S, lam, U, m)
        assert not res.feasible
        check_certificate(S, U, m, lam, res.witness)


@given(st.integers(0, 10_000))
def test_feasible_shift_solutions_check_out(seed):
    rng = random.Random(seed)
    S = random_shift(rng, rng.randint(1, 3), 0.5)
    m = rng.randint(1, 2)
    ws = S.words(m)
    U = ClopenSet(m, frozenset(w for w in ws if rng.random() < 0.5))
    res = cech.coboundary_solve(S, 2, U, m + 1)
    if res.feasible:
        assert solution_holds(S, 2, U, res)
    else:
        check_certificate(S, U, m + 1, 2, res.witness)


def test_expansion_values_examples():
    empty = ClopenSet(1, frozenset())
    rep = cech.expansion_values(GOLDEN, 2, empty, 6)
    assert rep.values == (Fraction(0),)
    S3 = sym.s_r_shift(3)
    rep = cech.expansion_values(S3, 2, sym.s_r_cylinder(3, "1"), 10)
    assert rep.pairwise_distinct and rep.normalized_separated and rep.distinct == rep.words
    perm = sym.permutation_shift([1, 2, 0, 4, 3])
    rep = cech.expansion_values(perm, 2, sym.cylinder(perm, (0,)), 12)
    assert rep.distinct <= 5
    with pytest.raises(InputError):
        cech.expansion_values(FULL, 1, sym.cylinder(FULL, "1"), 4)
    with pytest.raises(InputError):
        cech.expansion_values(FULL, "1/2", sym.cylinder(FULL, "1"), 4)


def test_expansion_values_float_agrees_with_exact():
    U = sym.cylinder(FULL, "1")
    a = cech.expansion_values(FULL, 3, U, 6)
    b = cech.expansion_values(FULL, 3.0, U, 6)
    assert a.exact and not b.exact
    assert np.allclose(sorted(float(v) for v in a.values), sorted(v.real for v in b.values))
    assert a.words == b.words == 64


def test_expansion_tail_bound_holds_for_longer_prefixes():
    S3 = sym.s_r_shift(3)
    U = sym.s_r_cylinder(3, "1")
    short = cech.expansion_values(S3, 2, U, 8)
    long = cech.expansion_values(S3, 2, U, 14)
    for v in long.values:
        assert min(abs(v - s) for s in short.values) <= short.tail_bound


def test_certificate_examples():
    cert = cech.eigenvalue_certificate(GOLDEN)
    assert cert.verdict is Verdict.ALL and cert.U == sym.cylinder(GOLDEN, "1") and cert.verify()
    assert cech.eigenvalue_certificate(FULL).verdict is Verdict.ALL
    od = cech.eigenvalue_certificate(il.odometer([2, 2, 2]))
    assert od.verdict is Verdict.NONE and od.complete and od.verify() and len(od.partitions) == 3
    perm = cech.eigenvalue_certificate(sym.permutation_shift([1, 2, 0]))
    assert perm.verdict is Verdict.NONE and perm.verify() and not perm.complete
    fin = cech.eigenvalue_certificate(FiniteSystem((1, 2, 1, 0)))
    assert fin.verdict is Verdict.NONE and fin.verify()
    js = cert.to_json()
    assert js["verdict"] == "ALL_NONUNIT_MODULI_ARE_EIGENVALUES" and js["module"] == "clopendyn.cech"


def test_tampered_certificate_fails():
    cert = cech.eigenvalue_certificate(GOLDEN)
    bad = cech.EigenvalueCertificate(GOLDEN, Verdict.ALL, U=ClopenSet(1, frozenset()), report=cert.report)
    assert not bad.verify()
    fake = cech.EigenvalueCertificate(FULL, Verdict.NONE, partitions=(pt.cylinder_shift_partition(FULL, 1),))
    assert not fake.verify()


@given(st.integers(0, 10_000))
def test_certificates_reverify(seed):
    rng = random.Random(seed)
    S = random_shift(rng, rng.randint(1, 3), 0.5)
    cert = cech.eigenvalue_certificate(S, m_max=3)
    assert cert.verify()
    if sym.entropy(S) > 1e-9:
        assert cert.verdict is Verdict.ALL
