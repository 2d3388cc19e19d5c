"""Locally constant functions at finite resolution and the action of the map on them.

A function that is constant on the blocks of a partition is a vector indexed
by the blocks. Precomposition with the map is the 0/1 pullback matrix; its
transpose is the pushforward. On a finite system the spectrum of the pullback
is read off the cycle decomposition, and ``lam`` fails to be an eigenvalue of
the pushforward exactly when every coboundary equation
``psi(f(x)) - lam * psi(x) = chi_V(x)`` can be solved.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from . import core_dynamics as cd
from . import inverse_limit as il
from . import partitions as pt
from . import symbolic as sym
from ._version import __version__
from .core_dynamics import FiniteSystem
from .errors import InputError, InternalError
from .expansion import ExactComplex, Lambda, expansion_tail_bound, fmt_number
from .inverse_limit import InverseSystem, LevelClopen
from .symbolic import ClopenSet, ItineraryReport, ShiftSpace

__all__ = [
    "CoboundaryResult",
    "EigenvalueCertificate",
    "ExpansionReport",
    "LevelFunction",
    "Spectrum",
    "Verdict",
    "coboundary_solve",
    "eigenvalue_certificate",
    "expansion_values",
    "pullback_matrix",
    "pushforward_matrix",
    "root_of_unity_check",
    "spectrum",
]

RESIDUAL_TOL = 1e-9
S_MAX = 64
M_MAX = 8


def pullback_matrix(sys: FiniteSystem) -> np.ndarray:
    """0/1 matrix ``M`` with ``M[i, tau(i)] = 1``, so ``(M @ phi)[i] = phi[tau(i)]``."""
    M = np.zeros((sys.size, sys.size), dtype=np.int64)
    M[np.arange(sys.size), sys.map] = 1
    return M


def pushforward_matrix(sys: FiniteSystem) -> np.ndarray:
    return pullback_matrix(sys).T


# --- spectra ----------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of the pullback: for each cycle of length ``s`` the pairs
    ``(s, k)`` standing for ``exp(2 pi i k / s)``, ``k = 0 .. s-1``, and the
    multiplicity of 0 coming from the transient states.
    """

    roots: tuple[tuple[int, int], ...]
    zero_multiplicity: int

    @property
    def size(self) -> int:
        return len(self.roots) + self.zero_multiplicity

    def values(self) -> np.ndarray:
        out = [np.exp(2j * np.pi * k / s) for s, k in self.roots]
        return np.array(out + [0j] * self.zero_multiplicity, dtype=complex)

    def nonzero(self) -> Counter:
        """Nonzero eigenvalues as a multiset of angles ``k/s`` in lowest terms."""
        return Counter(Fraction(k, s) for s, k in self.roots)

    def contains(self, lam, tol: float = RESIDUAL_TOL) -> bool:
        z = complex(Lambda.parse(lam))
        if z == 0:
            return self.zero_multiplicity > 0
        return any(abs(z - np.exp(2j * np.pi * k / s)) < tol for s, k in self.roots)

    def to_json(self) -> dict:
        return {
            "roots": [{"order": s, "k": k} for s, k in self.roots],
            "zero_multiplicity": self.zero_multiplicity,
        }


def spectrum(sys: FiniteSystem) -> Spectrum:
    roots = [(len(c), k) for c in cd.cycles(sys) for k in range(len(c))]
    return Spectrum(tuple(roots), sys.size - len(roots))


def root_of_unity_check(lam, s_max: int = S_MAX) -> int | None:
    """Least ``s <= s_max`` with ``|lam**s - 1| < 1e-9``, or None when there is none."""
    z = complex(Lambda.parse(lam))
    if z == 0:
        raise InputError("lambda must be nonzero")
    w = 1 + 0j
    for s in range(1, s_max + 1):
        w *= z
        if abs(w - 1) < RESIDUAL_TOL:
            return s
    return None


# --- coboundary equations ---------------------------------------------------


@dataclass(frozen=True)
class LevelFunction:
    """A locally constant function: ``values[i]`` is its value on block ``keys[i]``."""

    context: str
    keys: tuple
    values: tuple

    def __post_init__(self):
        if len(self.keys) != len(self.values):
            raise InputError("one value per block is required")

    def as_dict(self) -> dict:
        return dict(zip(self.keys, self.values))

    def to_json(self) -> dict:
        key = lambda k: "".join(map(str, k)) if isinstance(k, tuple) else k  # noqa: E731
        return {
            "context": self.context,
            "values": [{"block": key(k), "value": fmt_number(v)} for k, v in zip(self.keys, self.values)],
        }


@dataclass(frozen=True)
class CoboundaryResult:
    feasible: bool
    resolution: int
    exact: bool
    equations: int
    unknowns: int
    psi: LevelFunction | None = None
    unique: bool | None = None
    residual: float = 0.0
    witness: dict | None = None

    @property
    def status(self) -> str:
        return "FEASIBLE" if self.feasible else "INFEASIBLE"

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "resolution": self.resolution,
            "arithmetic": "exact" if self.exact else "float",
            "tolerance": "exact" if self.exact else RESIDUAL_TOL,
            "equations": self.equations,
            "unknowns": self.unknowns,
            "residual": self.residual,
        }
        if self.feasible:
            out["unique"] = self.unique
            out["psi"] = self.psi.to_json()
        else:
            out["witness"] = {str(k): fmt_number(v) for k, v in self.witness.items()}
        return out


def _domain(lam: Lambda):
    return QQ if lam.is_real_exact else QQ_I


def _to_domain(dom, x):
    if isinstance(x, ExactComplex):
        if dom is QQ:
            return QQ(x.re.numerator, x.re.denominator)
        return QQ_I(QQ(x.re.numerator, x.re.denominator), QQ(x.im.numerator, x.im.denominator))
    q = Fraction(x)
    return dom.convert(QQ(q.numerator, q.denominator))


def _from_domain(dom, v):
    if dom is QQ:
        return Fraction(int(v.numerator), int(v.denominator))
    re = Fraction(int(v.x.numerator), int(v.x.denominator))
    im = Fraction(int(v.y.numerator), int(v.y.denominator))
    return ExactComplex(re, im)


def _solve_exact(rows, rhs, n, dom):
    """Solve ``A x = b`` exactly; ``rows[i]`` maps column to coefficient.

    Returns ``(x, unique)`` or ``(None, y)`` with ``A^T y = 0`` and ``b . y = 1``.
    """
    R = len(rows)
    aug = {i: {**row, n: rhs[i]} for i, row in enumerate(rows)}
    aug = {i: {j: v for j, v in r.items() if v} for i, r in aug.items()}
    M = DomainMatrix({i: r for i, r in aug.items() if r}, (R, n + 1), dom)
    E, pivots = M.rref()
    if n in pivots:
        # Fredholm alternative: solve [A | b]^T y = e_n for the certificate
        T = {}
        for i, r in aug.items():
            for j, v in r.items():
                T.setdefault(j, {})[i] = v
        T = {j: {**r, R: dom.one if j == n else dom.zero} for j, r in T.items()}
        T.setdefault(n, {})[R] = dom.one
        T = {j: {i: v for i, v in r.items() if v} for j, r in T.items()}
        E2, piv2 = DomainMatrix(T, (n + 1, R + 1), dom).rref()
        if R in piv2:
            raise InternalError("inconsistent system without a separating certificate")
        y = {}
        sdm = E2.to_sdm()
        for r, c in enumerate(piv2):
            v = sdm.get(r, {}).get(R)
            if v:
                y[c] = v
        return None, y
    sdm = E.to_sdm()
    x = [dom.zero] * n
    for r, c in enumerate(pivots):
        x[c] = sdm.get(r, {}).get(n, dom.zero)
    return x, len(pivots) == n


def _equation(target: int, source: int) -> dict[int, tuple[int, int]]:
    """Row of ``psi[target] - lam * psi[source]``; coefficients are ``(a, b)`` for ``a + b * lam``."""
    if target == source:
        return {target: (1, -1)}
    return {target: (1, 0), source: (0, -1)}


def _solve(rows, rhs, keys, lam: Lambda, context: str, resolution: int) -> CoboundaryResult:
    n = len(keys)
    if lam.exact is not None:
        dom = _domain(lam)
        lam_d = _to_domain(dom, lam.exact)
        drows = [{j: dom.convert(a) + dom.convert(b) * lam_d for j, (a, b) in row.items()} for row in rows]
        b = [dom.convert(v) for v in rhs]
        x, info = _solve_exact(drows, b, n, dom)
        if x is None:
            y = {i: _from_domain(dom, v) for i, v in sorted(info.items())}
            return CoboundaryResult(False, resolution, True, len(rows), n, witness=y)
        psi = LevelFunction(context, tuple(keys), tuple(_from_domain(dom, v) for v in x))
        return CoboundaryResult(True, resolution, True, len(rows), n, psi=psi, unique=info)

    z = lam.value
    A = np.zeros((len(rows), n), dtype=complex)
    for i, row in enumerate(rows):
        for j, (a, c) in row.items():
            A[i, j] = a + c * z
    bvec = np.asarray(rhs, dtype=complex)
    if n == 0:
        x, rank = np.zeros(0, dtype=complex), 0
    else:
        x, _, rank, _ = np.linalg.lstsq(A, bvec, rcond=None)
    r = A @ x - bvec
    residual = float(np.abs(r).max()) if len(r) else 0.0
    if residual < RESIDUAL_TOL:
        psi = LevelFunction(context, tuple(keys), tuple(complex(v) for v in x))
        return CoboundaryResult(True, resolution, False, len(rows), n, psi=psi, unique=rank == n, residual=residual)
    witness = {i: complex(v) for i, v in enumerate(r) if abs(v) >= RESIDUAL_TOL}
    return CoboundaryResult(False, resolution, False, len(rows), n, residual=residual, witness=witness)


def coboundary_solve(system, lam, V, m: int | None = None) -> CoboundaryResult:
    """Solve ``psi(f(x)) - lam * psi(x) = chi_V(x)`` for a locally constant ``psi``.

    * finite system: ``V`` is a set of states; the square system on states.
    * tower: ``V`` is a :class:`LevelClopen` (or a state set at level ``m``);
      the equation is posed on level ``m`` (default: the level of ``V``).
    * shift: ``V`` is a :class:`ClopenSet`; ``psi`` is constant on length-``m``
      cylinders (default: the length of ``V``) and there is one equation per
      allowed word of length ``max(m + 1, len(V))``. INFEASIBLE here only
      rules out solutions at resolution ``m``.

    Exact arithmetic is used when ``lam`` is a (Gaussian) rational. Infeasible
    exact systems carry a certificate ``y`` (row index to weight) with
    ``sum_i y_i * row_i = 0`` and ``sum_i y_i * chi_V(i) = 1``.
    """
    lam = Lambda.parse(lam)
    if lam.modulus_is(0):
        raise InputError("lambda must be nonzero")
    context = None
    if isinstance(system, FiniteSystem):
        system = il.as_tower(system)
        if not isinstance(V, LevelClopen):
            V = LevelClopen(1, cd.as_state_set(system.level(1), V))
        context = "states"
    if isinstance(system, InverseSystem):
        il.require_valid(system)
        if not isinstance(V, LevelClopen):
            if m is None:
                raise InputError("a bare state set needs its level m")
            V = LevelClopen(m, frozenset(V))
        m = V.level if m is None else m
        if m < V.level:
            raise InputError(f"resolution {m} is coarser than the level {V.level} of V")
        Vm = V.lift(system, m).states
        F = system.level(m)
        rows = [_equation(F.map[i], i) for i in F.states]
        rhs = [1 if i in Vm else 0 for i in F.states]
        return _solve(rows, rhs, list(F.states), lam, context or f"level {m}", m)
    if isinstance(system, ShiftSpace):
        if not isinstance(V, ClopenSet):
            raise InputError("V must be a clopen set of the shift space")
        sym.check_clopen(system, V)
        m = V.length if m is None else m
        if m < 1:
            raise InputError("resolution must be at least 1")
        keys = system.words(m)
        index = {w: j for j, w in enumerate(keys)}
        rows, rhs = [], []
        for u in system.words(max(m + 1, V.length)):
            rows.append(_equation(index[u[1:m + 1]], index[u[:m]]))
            rhs.append(1 if u[:V.length] in V.words else 0)
        return _solve(rows, rhs, list(keys), lam, f"cylinders of length {m}", m)
    raise InputError(f"unsupported system type {type(system).__name__}")


# --- forward expansions along orbits ----------------------------------------


@dataclass(frozen=True)
class ExpansionReport:
    """Truncated values of ``-(1/lam) * sum_k lam**-k chi_V(f^k x)`` over realized itineraries.

    ``min_gap`` is taken over pairs of distinct itinerary prefixes and
    ``normalized_min_gap`` over pairs whose first symbols differ. Values
    closer than ``2 * tail_bound`` are merged when counting ``separated``.
    """

    lam: str
    length: int
    words: int
    values: tuple
    tail_bound: Fraction | float
    separated: int
    min_gap: Fraction | float | None
    normalized_min_gap: Fraction | float | None
    exact: bool

    @property
    def distinct(self) -> int:
        return len(self.values)

    @property
    def pairwise_distinct(self) -> bool:
        return self.min_gap is None or self.min_gap > 0

    @property
    def normalized_separated(self) -> bool:
        return self.normalized_min_gap is None or self.normalized_min_gap > 2 * self.tail_bound

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "length": self.length,
            "itinerary_prefixes": self.words,
            "distinct_values": self.distinct,
            "separated_values": self.separated,
            "tail_bound": fmt_number(self.tail_bound),
            "min_gap": fmt_number(self.min_gap),
            "normalized_min_gap": fmt_number(self.normalized_min_gap),
            "tolerance": "exact" if self.exact else RESIDUAL_TOL,
            "values": [fmt_number(v) for v in self.values],
        }


def _label_words(aut: sym.ItineraryAutomaton, L: int) -> list[tuple[int, ...]]:
    layer = {(): 0}
    for _ in range(L):
        layer = {w + (c,): t for w, q in layer.items() for c, t in aut.delta[q].items()}
    return sorted(layer)


def _min_gap(a: Sequence, b: Sequence, exact: bool):
    if not len(a) or not len(b):
        return None
    if exact:
        return min(abs(x - y) for x in a for y in b)
    A, B = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    return float(np.abs(A[:, None] - B[None, :]).min())


def expansion_values(space: ShiftSpace, lam, V: ClopenSet, L: int) -> ExpansionReport:
    lam = Lambda.parse(lam)
    if lam.modulus_is(1) or lam.modulus_is(0):
        raise InputError("the expansion needs |lambda| different from 0 and 1")
    if not lam.modulus > 1:
        raise InputError("the forward expansion needs |lambda| > 1; the backward form is not provided for shifts")
    if L < 1:
        raise InputError("prefix length must be at least 1")
    sym.check_clopen(space, V)
    aut = sym.itinerary_automaton(space, [sym.complement(space, V), V])
    words = _label_words(aut, L)
    exact = lam.is_real_exact
    if exact:
        q = lam.real_exact
        coef = [-(1 / q) / q**k for k in range(L)]
        zero = Fraction(0)
    else:
        coef = [-(1 / lam.value) * lam.value**-k for k in range(L)]
        zero = 0j
    by_word = {w: sum((coef[k] for k, c in enumerate(w) if c), zero) for w in words}
    tail = expansion_tail_bound(lam, L)

    key = (lambda v: v) if exact else (lambda v: (v.real, v.imag))
    values = tuple(sorted(set(by_word.values()), key=key))
    pair_gaps = None
    vals = list(by_word.values())
    if len(vals) > 1:
        if exact:
            pair_gaps = min(abs(x - y) for i, x in enumerate(vals) for y in vals[i + 1 :])
        else:
            arr = np.asarray(vals, dtype=complex)
            d = np.abs(arr[:, None] - arr[None, :])
            pair_gaps = float(d[np.triu_indices(len(arr), 1)].min())
    first0 = [v for w, v in by_word.items() if w[0] == 0]
    first1 = [v for w, v in by_word.items() if w[0] == 1]
    return ExpansionReport(
        lam=str(lam),
        length=L,
        words=len(words),
        values=values,
        tail_bound=tail,
        separated=_clusters(values, 2 * tail, exact),
        min_gap=pair_gaps,
        normalized_min_gap=_min_gap(first0, first1, exact),
        exact=exact,
    )


def _clusters(values: Sequence, eps, exact: bool) -> int:
    # single-linkage clusters at distance <= eps
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = abs(values[i] - values[j])
            if (d <= eps) if exact else (d <= float(eps)):
                parent[find(i)] = find(j)
    return len({find(i) for i in range(n)})


# --- eigenvalue certificates ------------------------------------------------


class Verdict(str, enum.Enum):
    ALL = "ALL_NONUNIT_MODULI_ARE_EIGENVALUES"
    NONE = "NONE_ARE"


@dataclass(frozen=True)
class EigenvalueCertificate:
    """Which ``lam`` with ``|lam| not in {0, 1}`` are eigenvalues of the pushforward.

    ALL carries a clopen set ``U`` whose binary itineraries are infinite,
    with the branching witness. NONE carries dynamical partitions; it is
    ``complete`` for towers and finite systems and holds up to cylinder
    length ``resolution`` for shifts.
    """

    system: object
    verdict: Verdict
    U: ClopenSet | None = None
    report: ItineraryReport | None = None
    partitions: tuple = ()
    resolution: int = 0
    complete: bool = True

    def verify(self) -> bool:
        if self.verdict is Verdict.ALL:
            again = sym.binary_itinerary_finiteness(self.system, self.U)
            return not again.finite and again.witness == self.report.witness
        return bool(self.partitions) and all(pt.is_dynamical(P) for P in self.partitions)

    def to_json(self) -> dict:
        out = {
            "module": __name__,
            "version": __version__,
            "verdict": self.verdict.value,
            "resolution": self.resolution,
            "complete": self.complete,
        }
        if self.verdict is Verdict.ALL:
            out["U"] = self.U.to_json(self.system.alphabet_size)
            out["itinerary_report"] = self.report.to_json()
        else:
            out["partitions"] = [P.to_json() for P in self.partitions]
        return out


def eigenvalue_certificate(system, m_max: int = M_MAX) -> EigenvalueCertificate:
    """Decide whether every or no ``lam`` with ``|lam| not in {0, 1}`` is an eigenvalue.

    Towers always get NONE with their cylinder partitions as evidence. Shift
    spaces are searched for a cylinder ``[w]``, ``len(w) <= m_max``, with
    infinitely many binary itineraries.
    """
    if isinstance(system, (FiniteSystem, InverseSystem)):
        tower = il.as_tower(system)
        il.require_valid(tower)
        parts = tuple(il.cylinder_partition(tower, n) for n in range(1, tower.depth + 1))
        return EigenvalueCertificate(tower, Verdict.NONE, partitions=parts, resolution=tower.depth)
    if not isinstance(system, ShiftSpace):
        raise InputError(f"unsupported system type {type(system).__name__}")
    if system.is_empty:
        raise InputError("the shift space is empty")
    if m_max < 1:
        raise InputError("m_max must be at least 1")
    for m in range(1, m_max + 1):
        # higher symbols first: on two symbols [1] is tried before its complement [0]
        for w in sorted(system.words(m), reverse=True):
            U = sym.cylinder(system, w)
            rep = sym.binary_itinerary_finiteness(system, U)
            if not rep.finite:
                return EigenvalueCertificate(system, Verdict.ALL, U=U, report=rep, resolution=m)
    parts = []
    for m in range(1, m_max + 1):
        P = pt.refine_from_itineraries(pt.cylinder_shift_partition(system, m))
        if isinstance(P, ItineraryReport):
            raise InternalError(f"cylinder partition of length {m} has infinite itineraries after finite cylinder checks")
        parts.append(P)
    return EigenvalueCertificate(system, Verdict.NONE, partitions=tuple(parts), resolution=m_max, complete=False)
