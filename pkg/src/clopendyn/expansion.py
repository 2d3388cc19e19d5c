"""Digit expansions ``sum a_k lam**-k`` over 0/1 sequences with sparse ones.

``S_r`` is the set of 0/1 sequences in which every 1 is followed by at least
``r`` zeros. For ``|lam| > 1`` and ``r`` large enough, distinct sequences in
``S_r`` have distinct expansions. The threshold used here is the least ``r``
with ``1/a + 2/a**r < 1`` where ``a = max(|lam|, 1/|lam|)``; for ``|lam| < 1``
the expansion is taken in ``1/lam``.

Arithmetic is exact (``Fraction``) whenever ``lam`` is a real rational;
otherwise double precision is used with an explicit error margin.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import NamedTuple, Sequence

import numpy as np

from .errors import HypothesisError, InputError

__all__ = [
    "ExactComplex",
    "Lambda",
    "UniquenessReport",
    "expansion_tail_bound",
    "fmt_number",
    "partial_sum",
    "r_of_lambda",
    "s_r_words",
    "uniqueness_bruteforce",
]

FLOAT_MARGIN = 2.0**-40


class ExactComplex(NamedTuple):
    """A Gaussian rational ``re + im*i``."""

    re: Fraction
    im: Fraction

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __str__(self) -> str:
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im > 0 else "-"
        mag = abs(self.im)
        im = "" if mag == 1 else str(mag)
        return f"{self.re}{sign}{im}i" if self.re else f"{'-' if self.im < 0 else ''}{im}i"


_NUM = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?(?:/[0-9]+)?"


def _parse_complex_text(text: str) -> ExactComplex:
    s = text.replace(" ", "").replace("j", "i")
    imag = rf"([+-])({_NUM})?i"
    for pattern, has_re, has_im in (
        (rf"([+-]?{_NUM})", True, False),
        (rf"([+-]?)({_NUM})?i", False, True),
        (rf"([+-]?{_NUM}){imag}", True, True),
    ):
        m = re.fullmatch(pattern, s)
        if m:
            break
    else:
        raise InputError(f"cannot parse {text!r} as a number a+bi")
    g = list(m.groups())
    re_part = Fraction(g.pop(0)) if has_re else Fraction(0)
    im_part = Fraction(0)
    if has_im:
        sign, mag = g
        mag = Fraction(mag) if mag else Fraction(1)
        im_part = -mag if sign == "-" else mag
    return ExactComplex(re_part, im_part)


@dataclass(frozen=True)
class Lambda:
    """A nonzero complex parameter, kept exact when given as a (Gaussian) rational.

    Strings such as ``"2"``, ``"3/2"`` or ``"1+2i"`` and Python ints and
    ``Fraction`` values are exact; ``float`` and ``complex`` inputs are not.
    """

    value: complex
    exact: ExactComplex | None = None

    @classmethod
    def parse(cls, x) -> "Lambda":
        if isinstance(x, Lambda):
            return x
        if isinstance(x, str):
            e = _parse_complex_text(x)
            return cls(complex(e), e)
        if isinstance(x, ExactComplex):
            return cls(complex(x), x)
        if isinstance(x, Rational):
            q = Fraction(x)
            return cls(complex(float(q)), ExactComplex(q, Fraction(0)))
        if isinstance(x, (float, complex, np.floating, np.complexfloating)):
            return cls(complex(x))
        raise InputError(f"cannot interpret {x!r} as a complex number")

    @property
    def is_real_exact(self) -> bool:
        return self.exact is not None and self.exact.im == 0

    @property
    def real_exact(self) -> Fraction:
        if not self.is_real_exact:
            raise InputError("lambda is not an exact real rational")
        return self.exact.re

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def modulus_is(self, target: int) -> bool:
        """Exact test of ``|lam| == target`` when possible."""
        if self.exact is not None:
            return self.exact.re**2 + self.exact.im**2 == target * target
        return self.modulus == target

    @property
    def effective_modulus(self) -> Fraction | float:
        """``max(|lam|, 1/|lam|)``, exact for real rationals."""
        if self.is_real_exact:
            a = abs(self.real_exact)
            return max(a, 1 / a)
        a = self.modulus
        return max(a, 1 / a)

    def expansion_base(self) -> Fraction | complex:
        """``lam`` itself if ``|lam| > 1``, else ``1/lam``."""
        if self.is_real_exact:
            q = self.real_exact
            return q if abs(q) > 1 else 1 / q
        return self.value if self.modulus > 1 else 1 / self.value

    def __complex__(self) -> complex:
        return self.value

    def __str__(self) -> str:
        return str(self.exact) if self.exact is not None else fmt_number(self.value)


def fmt_number(x) -> str | float:
    """Exact values print as ``p/q`` strings; floats stay floats."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, ExactComplex):
        return str(x)
    if isinstance(x, complex):
        if x.imag == 0:
            return repr(x.real)
        return f"{x.real!r}{'+' if x.imag >= 0 else '-'}{abs(x.imag)!r}i"
    return x


def _check_threshold_input(lam: Lambda) -> None:
    if lam.modulus_is(0) or lam.modulus_is(1):
        raise HypothesisError(f"|lambda| must differ from 0 and 1, got lambda = {lam}")


def r_of_lambda(lam) -> int:
    """Least ``r >= 1`` with ``1/a + 2/a**r < 1``, ``a = max(|lam|, 1/|lam|)``."""
    lam = Lambda.parse(lam)
    _check_threshold_input(lam)
    a = lam.effective_modulus
    one = Fraction(1) if isinstance(a, Fraction) else 1.0
    r = 1
    while not one / a + 2 * one / a**r < 1:
        r += 1
    return r


def _check_word(word: Sequence[int], r: int | None) -> tuple[int, ...]:
    w = tuple(int(c) for c in word)
    if any(c not in (0, 1) for c in w):
        raise InputError("expansion digits must be 0 or 1")
    if r is not None:
        ones = [k for k, c in enumerate(w) if c]
        for a, b in zip(ones, ones[1:]):
            if b - a <= r:
                raise InputError(f"word violates the S_{r} constraint at positions {a} and {b}")
    return w


def partial_sum(word: Sequence[int] | str, lam, r: int | None = None):
    """``sum(word[k] * lam**-k)``; ``r`` optionally checks the ``S_r`` constraint."""
    if isinstance(word, str):
        word = [int(c) for c in word]
    w = _check_word(word, r)
    lam = Lambda.parse(lam)
    if not lam.modulus > 1:
        raise InputError("the forward expansion needs |lambda| > 1")
    if lam.is_real_exact:
        q = lam.real_exact
        return sum((Fraction(1) / q**k for k, c in enumerate(w) if c), Fraction(0))
    z = lam.value
    return sum((z**-k for k, c in enumerate(w) if c), 0j)


def s_r_words(r: int, L: int) -> list[tuple[int, ...]]:
    """All length-``L`` words in which every 1 is followed by at least ``r`` zeros, lexicographically.

    Memoized on the number of zeros still owed after the last 1.
    """
    if r < 0 or L < 0:
        raise InputError("r and L must be nonnegative")
    memo: dict[tuple[int, int], list[tuple[int, ...]]] = {}

    def tails(n: int, owed: int) -> list[tuple[int, ...]]:
        if n == 0:
            return [()]
        key = (n, owed)
        if key not in memo:
            out = [(0,) + t for t in tails(n - 1, max(owed - 1, 0))]
            if owed == 0:
                out += [(1,) + t for t in tails(n - 1, r)]
            memo[key] = out
        return memo[key]

    return tails(L, 0)


@dataclass(frozen=True)
class UniquenessReport:
    r: int
    lam: str
    length: int
    words: int
    pairs_checked: int
    min_gap: Fraction | float
    tail_bound: Fraction | float
    block_bound: Fraction | float
    max_block_sum: Fraction | float
    exact: bool
    verdict: str

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_json(self) -> dict:
        out = {k: fmt_number(v) for k, v in vars(self).items()}
        out["tolerance"] = "exact" if self.exact else FLOAT_MARGIN
        return out


def uniqueness_bruteforce(r: int, lam, L: int) -> UniquenessReport:
    """Desk check that distinct ``S_r`` sequences have distinct expansions.

    Any two distinct sequences, shifted to their first difference, begin
    with different symbols, so it suffices to examine pairs of length-``L``
    words with different first symbols. PASS means every such pair has
    partial sums further apart than ``2 * tail_bound``, where ``tail_bound``
    bounds what any ``S_r`` tail beyond position ``L - 1`` can add; that
    makes the expansions of the infinite sequences differ as well. The
    block bound ``sum_{k>=1} c_k a**-k <= (1/a + 1/a**r) / (1 - a**-r) < 1``
    on the digit differences ``c_k`` is verified on the same pairs.
    """
    lam = Lambda.parse(lam)
    needed = r_of_lambda(lam)
    if r < needed:
        raise HypothesisError(f"r = {r} is below the threshold r(lambda) = {needed}; the uniqueness argument does not apply")
    if L < r + 2:
        raise InputError(f"word length must be at least r + 2 = {r + 2}")
    words = s_r_words(r, L)
    exact = lam.is_real_exact
    a = lam.effective_modulus
    base = lam.expansion_base()
    one = Fraction(1) if exact else 1.0
    tail = (one / a**L + one / a ** (L + r)) / (1 - one / a**r)
    block = (one / a + one / a**r) / (1 - one / a**r)

    zeros = [w for w in words if w[0] == 0]
    ones = [w for w in words if w[0] == 1]
    if exact:
        powers = [Fraction(1) / base**k for k in range(L)]
        s0 = sorted(sum((powers[k] for k, c in enumerate(w) if c), Fraction(0)) for w in zeros)
        s1 = [sum((powers[k] for k, c in enumerate(w) if c), Fraction(0)) for w in ones]
        min_gap = min(_nearest_gap(s0, x) for x in s1)
        passed = min_gap > 2 * tail
    else:
        powers = np.array([complex(base) ** -k for k in range(L)])
        v0 = np.array(zeros, dtype=float) @ powers
        v1 = np.array(ones, dtype=float) @ powers
        min_gap = float(np.abs(v1[:, None] - v0[None, :]).min())
        passed = min_gap - 2 * float(tail) > FLOAT_MARGIN

    max_block = _max_block_sum(zeros, ones, a, L, exact)
    passed = passed and max_block <= block and block < 1
    return UniquenessReport(
        r=r,
        lam=str(lam),
        length=L,
        words=len(words),
        pairs_checked=len(zeros) * len(ones),
        min_gap=min_gap,
        tail_bound=tail,
        block_bound=block,
        max_block_sum=max_block,
        exact=exact,
        verdict="PASS" if passed else "FAIL",
    )


def _nearest_gap(sorted_vals: list[Fraction], x: Fraction) -> Fraction:
    i = bisect.bisect_left(sorted_vals, x)
    best = None
    for j in (i - 1, i):
        if 0 <= j < len(sorted_vals):
            d = abs(sorted_vals[j] - x)
            best = d if best is None or d < best else best
    return best


def _max_block_sum(zeros, ones, a, L: int, exact: bool):
    """Largest ``sum_{k>=1} |x_k - y_k| a**-k`` over pairs with ``x_0 != y_0``."""
    to_bits = lambda w: sum(c << k for k, c in enumerate(w))  # noqa: E731
    b0 = sorted({to_bits(w) for w in zeros})
    b1 = sorted({to_bits(w) for w in ones})
    if exact:
        p, q = a.numerator, a.denominator
        # a**-k = q**k p**(L-1-k) / p**(L-1), integer numerators
        weight = [q**k * p ** (L - 1 - k) for k in range(L)]
        weight[0] = 0
        best = 0
        for x in b1:
            for y in b0:
                c = x ^ y
                s = 0
                while c:
                    low = c & -c
                    s += weight[low.bit_length() - 1]
                    c ^= low
                best = max(best, s)
        return Fraction(best, p ** (L - 1))
    w = np.array([0.0] + [a**-k for k in range(1, L)])
    bits = lambda xs: np.array([[(x >> k) & 1 for k in range(L)] for x in xs], dtype=float)  # noqa: E731
    B0, B1 = bits(b0), bits(b1)
    diff = np.abs(B1[:, None, :] - B0[None, :, :])
    return float((diff @ w).max())


def expansion_tail_bound(lam: Lambda, L: int):
    """Bound ``|lam|**-L / (1 - |lam|**-1)`` on the omitted tail of a forward expansion."""
    if lam.is_real_exact:
        a = abs(lam.real_exact)
        return a**-L / (1 - 1 / a)
    a = lam.modulus
    return a**-L / (1 - 1 / a)

