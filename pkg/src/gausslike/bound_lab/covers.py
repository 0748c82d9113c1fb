"""Cover costs of E_n = {x : prod_m a_{n+i_m}(x)**t_m >= B**n} at desk scale.

The cover is a threshold tree over the special positions.  At special
position m with remaining target R, every x with a_{n+i_m} >= c is covered by
the single tail interval D[c]; digits a < c are refined and the next special
position must reach R / a**t_m.  Free positions are covered by their level-1
cylinders, which factor out as powers of the full partition sum Z(s).  The
threshold c is chosen per node to minimise the s-cost, so the result is the
cheapest cover in this family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from ..errors import SizeCapError
from ..ifs_core import SystemSpec, cylinder_interval, tail_union
from ..pressure import series_partition
from ..weight_program import TargetSpec

MAX_TARGET = 10**5
MAX_K = 3
CEIL_GUARD = 1e-12


@dataclass(frozen=True)
class CoverSpec:
    n: int
    s: float
    delta: float = 1.0
    t: int = 1
    mode: str = "exact"  # or "block"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.mode not in ("exact", "block"):
            raise ValueError(f"unknown enumeration mode {self.mode!r}")


@dataclass
class CoverCost:
    n: int
    s: float
    cost: float
    lo: float
    hi: float
    tie: bool = False

    def row(self) -> dict:
        return {"n": self.n, "s": self.s, "cost": self.cost, "lo": self.lo, "hi": self.hi}


def ceil_root(R, t: float):
    """Smallest integer c >= 1 with c**t >= R, via logs with a relative guard.

    Returns (c, tie) where tie marks R**(1/t) within 1e-9 of an integer.
    """
    x = np.exp(np.log(np.asarray(R, dtype=float)) / t)
    c = np.maximum(np.ceil(x * (1 - CEIL_GUARD)), 1.0)
    tie = np.abs(x - np.round(x)) <= 1e-9 * x
    return c, tie


@dataclass
class _Weights:
    Z: float
    cyl: object  # digits -> |C[a]|**s bound
    tail: object  # c -> |D[c]|**s


def _weights(sys: SystemSpec, s: float) -> list[_Weights]:
    if s <= 0.5:
        raise ValueError("cover costs diverge for s <= 1/2 (free positions use the full alphabet)")
    tail = lambda c: np.asarray(c, dtype=float) ** -s
    if sys.kind == "lueroth":
        cyl = lambda a: (a * (a + 1.0)) ** -s
        return [_Weights(series_partition(sys, s), cyl, tail)]
    if sys.kind == "gauss":
        lo = _Weights(float(hurwitz_zeta(2 * s, 2)), lambda a: (a + 1.0) ** (-2 * s), tail)
        hi = _Weights(float(hurwitz_zeta(2 * s, 1)), lambda a: a ** (-2 * s), tail)
        return [lo, hi]
    raise ValueError("cover costs are implemented for the gauss and lueroth systems")


class _ThresholdTree:
    def __init__(self, target: TargetSpec, n: int, w: _Weights, block: float | None):
        self.t = target.weights
        self.gaps = [b - a - 1 for a, b in zip(target.positions, target.positions[1:])]
        self.w = w
        self.n = n
        self.B = target.B
        self.block = block
        self.tie = False

    def _candidates(self, cmax: int) -> np.ndarray:
        c = np.arange(1, cmax + 1)
        if self.block is None:
            return c
        # thresholds restricted to block edges B**(n l delta)
        edges = np.ceil(self.B ** (self.n * self.block * np.arange(0, math.ceil(1 / self.block) + 1)) * (1 - CEIL_GUARD))
        edges = np.unique(np.clip(edges, 1, cmax))
        return edges.astype(np.int64)

    def cost(self, m: int, R: float) -> tuple[float, int]:
        """(minimal cost, threshold) at special position m (0-based) with target R."""
        cmax, tie = ceil_root(R, self.t[m])
        cmax = int(cmax)
        self.tie |= bool(tie)
        if m == len(self.t) - 1:
            return float(self.w.tail(cmax)), cmax
        a = np.arange(1, cmax, dtype=float)
        Rn = R / a ** self.t[m]
        if m + 1 == len(self.t) - 1:
            c_next, ties = ceil_root(Rn, self.t[m + 1])
            self.tie |= bool(np.any(ties))
            inner = self.w.tail(c_next)
        else:
            inner = np.array([self.cost(m + 1, r)[0] for r in Rn])
        terms = self.w.cyl(a) * inner * self.w.Z ** self.gaps[m]
        refined = np.concatenate([[0.0], np.cumsum(terms)])
        cand = self._candidates(cmax)
        total = self.w.tail(cand) + refined[cand - 1]
        i = int(np.argmin(total))
        return float(total[i]), int(cand[i])


def _check_cover_size(target: TargetSpec, n: int) -> None:
    if target.k > MAX_K:
        raise SizeCapError("cover_k", target.k, MAX_K)
    if target.B**n > MAX_TARGET:
        raise SizeCapError("cover_target", round(target.B**n), MAX_TARGET)


def cover_cost_exact(sys: SystemSpec, target: TargetSpec, n: int, s: float,
                     spec: CoverSpec | None = None) -> CoverCost:
    """Cost sum |D|**s of the cheapest threshold cover of E_n.

    Lueroth lengths are exactly multiplicative, so lo = cost = hi.  For gauss
    the cylinder lengths are bracketed with the derivative tables zeta/lambda
    and ``cost`` reports the upper value.
    """
    _check_cover_size(target, n)
    block = spec.delta if spec is not None and spec.mode == "block" else None
    prefix = n + target.positions[0] - 1
    vals, tie = [], False
    for w in _weights(sys, s):
        tree = _ThresholdTree(target, n, w, block)
        c, _ = tree.cost(0, target.B**n)
        vals.append(w.Z**prefix * c)
        tie |= tree.tie
    lo, hi = min(vals), max(vals)
    return CoverCost(n, s, hi, lo, hi, tie)


def cover_validity(sys: SystemSpec, target: TargetSpec, n: int, s: float, extra: Sequence[int] = (0, 1, 7)) -> list:
    """Check by interval containment that digit tuples of E_n lie in the cover.

    Free positions are fixed to digit 1.  Every first special digit up to
    2 B**n is tried; later special digits are tried at their smallest
    admissible value plus the offsets in ``extra`` and at 5x that value.
    Returns the list of uncovered words (empty when the cover is valid).
    """
    if sys.kind != "lueroth" or target.k > 2 or target.B**n > 10**3:
        raise SizeCapError("cover_validity", round(target.B**n), 10**3)
    w = _weights(sys, s)[0]
    tree = _ThresholdTree(target, n, w, None)
    R = target.B**n
    _, c1 = tree.cost(0, R)
    gap = tree.gaps[0] if target.k == 2 else 0
    prefix = (1,) * (n + target.positions[0] - 1)
    t = target.weights
    failures = []

    def covered(word, node_word) -> bool:
        cyl = cylinder_interval(sys, word)
        hull = tail_union(sys, node_word)
        return hull.inf_lo <= cyl.lo and cyl.hi <= hull.inf_hi

    for a1 in range(1, int(2 * R) + 1):
        if target.k == 1:
            if a1 ** t[0] >= R * (1 - CEIL_GUARD) and not covered(prefix + (a1,), prefix + (c1,)):
                failures.append(prefix + (a1,))
            continue
        if a1 >= c1:
            tuples = [(a1, 1)]
            node = prefix + (c1,)
        else:
            c2, _ = ceil_root(R / a1 ** t[0], t[1])
            c2 = int(c2)
            tuples = [(a1, c2 + e) for e in extra] + [(a1, 5 * c2)]
            node = prefix + (a1,) + (1,) * gap + (c2,)
        for b1, b2 in tuples:
            word = prefix + (b1,) + (1,) * gap + (b2,)
            in_E = b1 ** t[0] * b2 ** t[1] >= R * (1 - CEIL_GUARD)
            if in_E and not covered(word, node):
                failures.append(word)
    return failures


@dataclass
class TransitionEstimate:
    crossing: float
    half_width: float
    s_grid: list
    slopes: list
    slope_errors: list
    n_values: list
    costs: dict = field(default_factory=dict, repr=False)

    def slope_at(self, s: float) -> float:
        return float(np.interp(s, self.s_grid, self.slopes))


def default_n_range(target: TargetSpec) -> list[int]:
    """Upper half of the admissible n (B**n <= 1e5); small n carry a visible polynomial bias."""
    n_max = int(math.floor(math.log(MAX_TARGET) / math.log(target.B) + 1e-9))
    return list(range(max(4, n_max // 2), n_max + 1))


def cover_cost_transition(sys: SystemSpec, target: TargetSpec, n_range: Sequence[int] | None = None,
                          s_grid: Sequence[float] | None = None, spec: CoverSpec | None = None) -> TransitionEstimate:
    """Fit log cost = alpha + beta n per s and locate where beta changes sign.

    The half-width combines the slope standard error (propagated through
    the local slope of beta in s) with the grid spacing at the crossing.
    """
    n_values = list(n_range) if n_range is not None else default_n_range(target)
    if len(n_values) < 3:
        raise ValueError("need at least 3 n-values to fit an exponent")
    s_grid = list(s_grid) if s_grid is not None else list(np.round(np.linspace(0.55, 0.99, 45), 10))
    slopes, errs, costs = [], [], {}
    nv = np.asarray(n_values, dtype=float)
    for s in s_grid:
        y = np.array([math.log(cover_cost_exact(sys, target, n, s, spec).cost) for n in n_values])
        costs[s] = y.tolist()
        coef, res, *_ = np.polyfit(nv, y, 1, full=True)
        resid = y - np.polyval(coef, nv)
        dof = max(len(nv) - 2, 1)
        se = math.sqrt(float(resid @ resid) / dof / float(((nv - nv.mean()) ** 2).sum()))
        slopes.append(float(coef[0]))
        errs.append(se)
    sl = np.asarray(slopes)
    sign = np.nonzero((sl[:-1] > 0) & (sl[1:] <= 0))[0]
    if not len(sign):
        raise ValueError("fitted exponent does not change sign on the s grid")
    i = int(sign[0])
    s1, s2 = s_grid[i], s_grid[i + 1]
    crossing = s1 + (s2 - s1) * sl[i] / (sl[i] - sl[i + 1])
    dbeta = abs(sl[i + 1] - sl[i]) / (s2 - s1)
    half = max(errs[i], errs[i + 1]) / dbeta + 0.5 * (s2 - s1)
    return TransitionEstimate(float(crossing), float(half), list(s_grid), slopes, errs, n_values, costs)
