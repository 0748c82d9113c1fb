"""d-decaying Gauss-like systems: branch maps, cylinder geometry, expansions.

Three built-in families are supported:

* ``gauss``   -- inverse branches ``x -> 1/(a+x)`` (continued fractions), d = 2.
* ``lueroth`` -- digit ``a`` uses branch parameter ``a+1``, i.e.
  ``y -> (y+a)/(a(a+1))``, so ``C[a] = [1/(a+1), 1/a]``, d = 2.
* ``power``   -- affine branches of length ``a**-d / Z`` stacked right-to-left
  from 1 down to 0, with ``Z`` summed over ``POWER_NORM_M`` digits.

Digit 1 is always the rightmost branch.  Gauss and Lueroth cylinders are
computed with exact rational arithmetic; power-law cylinders use floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidWordError, SizeCapError

KINDS = ("gauss", "lueroth", "power")
POWER_NORM_M = 10**6
MAX_WORD_LENGTH = 64
MAX_LEVEL1_M = 10**6
MAX_ENUMERATION = 10**8


@lru_cache(maxsize=8)
def _power_tables(d: float) -> tuple[np.ndarray, np.ndarray]:
    """Normalized weights w[a-1] and right-cumulative W[a] = sum_{b<=a} w_b (W[0] = 0)."""
    a = np.arange(1, POWER_NORM_M + 1, dtype=float)
    raw = a ** (-d)
    z = math.fsum(raw[::-1])
    w = raw / z
    cum = np.concatenate(([0.0], np.cumsum(w)))
    cum[-1] = 1.0
    w.setflags(write=False)
    cum.setflags(write=False)
    return w, cum


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    M: int
    d: float = 2.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {KINDS}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        object.__setattr__(self, "M", int(self.M))
        if self.kind in ("gauss", "lueroth"):
            if self.d != 2.0:
                raise ValueError(f"{self.kind} systems are 2-decaying; d={self.d} given")
        elif not self.d > 1:
            raise ValueError(f"decay exponent must satisfy d > 1, got {self.d}")
        if self.kind == "power" and self.M > POWER_NORM_M:
            raise SizeCapError("power.M", self.M, POWER_NORM_M)
        if self.M > MAX_LEVEL1_M:
            raise SizeCapError("M", self.M, MAX_LEVEL1_M)
        object.__setattr__(self, "d", float(self.d))

    @property
    def affine(self) -> bool:
        return self.kind != "gauss"

    def with_M(self, M: int) -> "SystemSpec":
        return SystemSpec(self.kind, M, self.d)

    # -- level-1 geometry -------------------------------------------------

    def branch_lengths(self, digits=None) -> np.ndarray:
        """|C[a]| for the given digits (default 1..M), as floats."""
        a = np.arange(1, self.M + 1, dtype=float) if digits is None else np.asarray(digits, dtype=float)
        if self.kind == "gauss":
            return 1.0 / (a * (a + 1.0))
        if self.kind == "lueroth":
            return 1.0 / (a * (a + 1.0))
        w, _ = _power_tables(self.d)
        return w[np.asarray(a, dtype=np.int64) - 1]

    def branch_lo(self, digits) -> np.ndarray:
        """Left endpoint of C[a] (affine kinds)."""
        a = np.asarray(digits, dtype=float)
        if self.kind in ("gauss", "lueroth"):
            return 1.0 / (a + 1.0)
        _, cum = _power_tables(self.d)
        return 1.0 - cum[np.asarray(digits, dtype=np.int64)]

    def tail_length(self, c: int) -> float:
        """|union_{i >= c} C[i]| over the full alphabet."""
        if c <= 1:
            return 1.0
        if self.kind in ("gauss", "lueroth"):
            return 1.0 / c
        _, cum = _power_tables(self.d)
        if c > POWER_NORM_M:
            return 0.0
        return float(1.0 - cum[c - 1])

    def zeta(self, digits=None) -> np.ndarray:
        """Lower derivative bound per digit."""
        a = np.arange(1, self.M + 1, dtype=float) if digits is None else np.asarray(digits, dtype=float)
        if self.kind == "gauss":
            return 1.0 / (a + 1.0) ** 2
        return self.branch_lengths(a)

    def lam(self, digits=None) -> np.ndarray:
        """Upper derivative bound per digit."""
        a = np.arange(1, self.M + 1, dtype=float) if digits is None else np.asarray(digits, dtype=float)
        if self.kind == "gauss":
            return 1.0 / a**2
        return self.branch_lengths(a)

    @property
    def K1(self) -> float:
        a = np.arange(1, self.M + 1, dtype=float)
        return float(np.min(self.zeta(a) * a**self.d))

    @property
    def K2(self) -> float:
        a = np.arange(1, self.M + 1, dtype=float)
        return float(np.max(self.lam(a) * a**self.d))

    # -- pointwise branch evaluation ----------------------------------------

    def branch(self, a, x):
        """T_a(x); exact when x is a Fraction and the kind is gauss/lueroth."""
        if self.kind == "gauss":
            return 1 / (a + x)
        if self.kind == "lueroth":
            if isinstance(x, Fraction):
                return (x + a) / (a * (a + 1))
            return (x + a) / (a * (a + 1.0))
        w, cum = _power_tables(self.d)
        idx = np.asarray(a, dtype=np.int64)
        return (1.0 - cum[idx]) + w[idx - 1] * x

    def branch_derivative(self, a, x):
        """|T_a'(x)|."""
        if self.kind == "gauss":
            return 1.0 / (np.asarray(a, dtype=float) + x) ** 2
        return self.branch_lengths(a) * np.ones_like(np.asarray(x, dtype=float))


def contraction_constant(sys: SystemSpec) -> tuple[int, float]:
    """(m, h) with |(T_{a1} o ... o T_{am})'| <= h < 1 for all words of length m."""
    if sys.kind == "gauss":
        # sup over words is 1/q_2^2 at x = 0, with q_2 = a1*a2 + 1 >= 2
        return 2, 0.25
    return 1, float(np.max(sys.branch_lengths()))


# -- words and cylinders ----------------------------------------------------


def _check_word(word: Sequence[int]) -> tuple[int, ...]:
    w = tuple(int(a) for a in word)
    if not w:
        raise InvalidWordError("word must be non-empty")
    if any(a < 1 for a in w):
        raise InvalidWordError(f"digits must be >= 1, got {w}")
    if len(w) > MAX_WORD_LENGTH:
        raise SizeCapError("word_length", len(w), MAX_WORD_LENGTH)
    return w


def continuants(word: Sequence[int]) -> tuple[int, int, int, int]:
    """(p_n, q_n, p_{n-1}, q_{n-1}) for the continued fraction [0; a1, ..., an]."""
    p_prev, q_prev, p, q = 1, 0, 0, 1
    for a in word:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
    return p, q, p_prev, q_prev


@dataclass(frozen=True)
class CylinderInterval:
    word: tuple[int, ...]
    lo: Fraction | float
    hi: Fraction | float
    exact: bool = True

    @property
    def length(self):
        return self.hi - self.lo


def _affine_compose(sys: SystemSpec, word: tuple[int, ...]):
    """(lo, len) of T_word([0,1]) for affine kinds."""
    if sys.kind == "lueroth":
        lo, ln = Fraction(0), Fraction(1)
        for a in reversed(word):
            lo = (lo + a) / (a * (a + 1))
            ln = ln / (a * (a + 1))
        return lo, ln
    w, cum = _power_tables(sys.d)
    lo, ln = 0.0, 1.0
    for a in reversed(word):
        if a > POWER_NORM_M:
            raise InvalidWordError(f"power-law digit {a} exceeds alphabet size {POWER_NORM_M}")
        lo = (1.0 - cum[a]) + w[a - 1] * lo
        ln = w[a - 1] * ln
    return float(lo), float(ln)


def cylinder_interval(sys: SystemSpec, word: Sequence[int]) -> CylinderInterval:
    w = _check_word(word)
    if sys.kind == "gauss":
        p, q, pp, qq = continuants(w)
        e0, e1 = Fraction(p, q), Fraction(p + pp, q + qq)
        return CylinderInterval(w, min(e0, e1), max(e0, e1))
    lo, ln = _affine_compose(sys, w)
    return CylinderInterval(w, lo, lo + ln, exact=sys.kind == "lueroth")


def cylinder_map(sys: SystemSpec, word: Sequence[int], x):
    """T_{a1} o ... o T_{an}(x)."""
    y = x
    for a in reversed(tuple(word)):
        y = sys.branch(a, y)
    return y


@dataclass(frozen=True)
class TailUnion:
    word: tuple[int, ...]
    lo: Fraction | float | None
    hi: Fraction | float | None
    inf_lo: Fraction | float
    inf_hi: Fraction | float


def tail_union(sys: SystemSpec, word: Sequence[int]) -> TailUnion:
    """Hull of D[a1..an] = union_{i >= an} C[a1..a_{n-1} i].

    ``lo``/``hi`` restrict i to the truncated alphabet (None if an > M);
    ``inf_lo``/``inf_hi`` use the full alphabet, whose far end is the image
    of the accumulation point 0 under the prefix map.
    """
    w = _check_word(word)
    prefix, first = w[:-1], w[-1]
    c_first = cylinder_interval(sys, w)
    zero = Fraction(0) if sys.kind != "power" else 0.0
    limit = cylinder_map(sys, prefix, zero)
    inf_lo, inf_hi = min(c_first.lo, limit), max(c_first.hi, limit)
    lo = hi = None
    if first <= sys.M:
        c_last = cylinder_interval(sys, prefix + (sys.M,))
        lo = min(c_first.lo, c_last.lo)
        hi = max(c_first.hi, c_last.hi)
    return TailUnion(w, lo, hi, inf_lo, inf_hi)


def enumerate_cylinders(sys: SystemSpec, n: int, M: int | None = None) -> list[CylinderInterval]:
    """All level-n cylinders over digits 1..M in lexicographic word order."""
    M = sys.M if M is None else M
    if M**n > MAX_ENUMERATION:
        raise SizeCapError("enumeration", M**n, MAX_ENUMERATION)
    return [cylinder_interval(sys, w) for w in product(range(1, M + 1), repeat=n)]


# -- symbolic expansion ---------------------------------------------------


@dataclass(frozen=True)
class Expansion:
    digits: tuple[int, ...]
    endpoint: bool


def _power_digit(sys: SystemSpec, y):
    w, cum = _power_tables(sys.d)
    # digit a with lo_a = 1 - cum[a] <= y < lo_{a-1}; a tie (y == lo_a) keeps the right cylinder a
    a = max(int(np.searchsorted(cum, 1.0 - y, side="left")), 1)
    return a, float(1.0 - cum[a]), float(w[a - 1])


def expand(sys: SystemSpec, x, max_len: int = MAX_WORD_LENGTH) -> Expansion:
    """Digits a_i(x) with x in C[a_1..a_n] for every produced prefix.

    Points on a shared cylinder boundary take the digit of the cylinder to
    their right and stop the expansion with ``endpoint=True``.
    """
    if not 0 <= x < 1:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    exact = isinstance(x, (Fraction, int))
    y = Fraction(x) if exact else float(x)
    digits: list[int] = []
    while len(digits) < max_len:
        if y == 0:
            return Expansion(tuple(digits), True)
        if sys.kind == "power":
            a, lo, ln = _power_digit(sys, float(y))
            digits.append(a)
            if y == lo:
                return Expansion(tuple(digits), True)
            y = (float(y) - lo) / ln
            continue
        inv = 1 / y
        k = math.floor(inv)
        if inv == k and k >= 2:
            a = k - 1
            digits.append(a)
            return Expansion(tuple(digits), True)
        a = k
        digits.append(a)
        if sys.kind == "gauss":
            y = inv - a
        else:
            y = a * (a + 1) * y - a
        if not exact and not 0 <= y < 1:
            y = min(max(y, 0.0), math.nextafter(1.0, 0.0))
    return Expansion(tuple(digits), False)


# -- distortion diagnostics -------------------------------------------------


def log_distortion(sys: SystemSpec, word: Sequence[int]) -> float:
    """log(max |T_w'| / min |T_w'|) over [0, 1]."""
    if sys.affine:
        return 0.0
    _, q, _, qq = continuants(word)
    # |T_w'(x)| = (q + qq x)^-2
    return 2.0 * math.log1p(qq / q)


def max_log_distortion(sys: SystemSpec, n: int, M: int | None = None) -> float:
    """Worst-case log distortion over all words of length n with digits <= M."""
    if sys.affine:
        return 0.0
    M = sys.M if M is None else M
    # q_{n-1}/q_n = [0; a_n, ..., a_1] is maximal for a_n = 1, a_{n-1} = M, ...
    word = [1 if (n - 1 - i) % 2 == 0 else M for i in range(n)]
    return log_distortion(sys, word)


@dataclass(frozen=True)
class WordSampler:
    count: int = 256
    seed: int = 0
    max_digit: int | None = None
    exhaustive_limit: int = 4096

    def words(self, n: int, M: int) -> Iterable[tuple[int, ...]]:
        top = M if self.max_digit is None else min(self.max_digit, M)
        if top**n <= self.exhaustive_limit:
            yield from product(range(1, top + 1), repeat=n)
            return
        rng = np.random.Generator(np.random.Philox(self.seed + 1000003 * n))
        draws = rng.integers(1, top + 1, size=(self.count, n))
        for row in draws:
            yield tuple(int(a) for a in row)


@dataclass(frozen=True)
class DistortionRow:
    n: int
    count: int
    max: float
    mean: float


@dataclass(frozen=True)
class DistortionReport:
    n: int
    rows: tuple[DistortionRow, ...]
    entries: dict = field(repr=False, default_factory=dict)


def distortion_report(sys: SystemSpec, n: int, sampler: WordSampler | None = None) -> DistortionReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    sampler = sampler or WordSampler()
    rows = []
    entries: dict[tuple[int, ...], float] = {}
    for length in range(1, n + 1):
        vals = []
        for w in sampler.words(length, sys.M):
            v = log_distortion(sys, w)
            entries[w] = v
            vals.append(v)
        rows.append(DistortionRow(length, len(vals), max(vals), math.fsum(vals) / len(vals)))
    return DistortionReport(n, tuple(rows), entries)
