"""Critical exponent s0 = inf {s : P(s) <= A(s) log B} and its truncated variants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConsistencyError
from .ifs_core import SystemSpec
from .pressure import (
    partition_pressures,
    pressure_eigenvalue,
    pressure_tail_extrapolate,
    series_pressure,
)
from .weight_program import TargetSpec, a_of_s

METHODS = ("series", "eigenvalue", "partition")
LOW_OFFSET = 1e-6
MAX_BISECTIONS = 60

# flags
CLAMPED_LOW = "clamped-low"
TRUNCATED = "truncated-at-1"


@dataclass
class DimensionResult:
    s0: float
    lo: float
    hi: float
    method: str
    M: int
    B: float
    n: int | None = None
    flags: tuple = ()
    iterations: int = 0
    # root bracket widened by the pressure bracket (tail-extrapolated), if requested
    full_bracket: tuple | None = None

    def __post_init__(self):
        if not self.lo <= self.s0 <= self.hi:
            raise ConsistencyError(f"s0={self.s0} outside [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def row(self) -> dict:
        return {"B": self.B, "s0": self.s0, "lo": self.lo, "hi": self.hi, "M": self.M,
                "method": self.method, "flags": "|".join(self.flags)}


def default_method(sys: SystemSpec) -> str:
    return "series" if sys.affine else "eigenvalue"


def _pressure_vec(sys: SystemSpec, method: str, n: int, grid_size: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized s -> P(s) for the chosen backend."""
    if method == "series":
        if not sys.affine:
            raise ValueError("the series method needs an affine system (lueroth or power)")
        return lambda s: np.array([series_pressure(sys, float(x)) for x in s])
    if method == "eigenvalue":
        return lambda s: np.array([pressure_eigenvalue(sys, float(x), grid_size).value for x in s])
    if method == "partition":
        return lambda s: partition_pressures(sys, n, s)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def exponent_curve(target: TargetSpec, d: float) -> Callable[[float], float]:
    if target.k == 1:
        # single-point simplex: A(s) = (d-1) s / t_1
        t1 = target.weights[0]
        return lambda s: (d - 1) * s / t1
    return lambda s: a_of_s(target, s, d)[0]


def _find_root(g: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, tol: float, points: int):
    """Bracket the sign change of a decreasing g; points=1 is plain bisection.

    Larger ``points`` evaluates an evenly spaced batch per pass, which pays off
    when one backend call handles many s at once.  Returns (lo, hi, passes, samples).
    """
    samples = []
    passes = 0
    while hi - lo > tol and passes < MAX_BISECTIONS:
        s = lo + (hi - lo) * np.arange(1, points + 1) / (points + 1)
        vals = g(s)
        samples.extend(zip(s.tolist(), vals.tolist()))
        pos = np.nonzero(vals > 0)[0]
        if len(pos):
            lo = float(s[pos[-1]])
        if len(pos) < points:
            hi = float(s[len(pos)])
        passes += 1
    return lo, hi, passes, samples


def _check_monotone(samples, slack: float) -> None:
    samples = sorted(samples)
    for (s1, g1), (s2, g2) in zip(samples, samples[1:]):
        if g2 > g1 + slack:
            raise ConsistencyError(f"g not decreasing: g({s1})={g1} < g({s2})={g2}")


def critical_exponent(sys: SystemSpec, target: TargetSpec, tol: float = 1e-8, method: str | None = None,
                      n: int = 1, grid_size: int = 512, extrapolate: bool = False,
                      M_list: Sequence[int] | None = None) -> DimensionResult:
    """s0 for the (truncated) system by bracketing the root of g(s) = P(s) - A(s) log B.

    ``method`` picks the pressure backend: "series" (full affine alphabet),
    "eigenvalue" (transfer operator on digits <= M) or "partition" (exact
    level-n sums on digits <= M).  With ``extrapolate=True`` and the
    eigenvalue backend, ``full_bracket`` additionally brackets the
    full-alphabet s0 using the tail-extrapolated pressure bracket.
    """
    if not 1e-10 <= tol <= 1e-2:
        raise ValueError("tol must lie in [1e-10, 1e-2]")
    method = method or default_method(sys)
    P = _pressure_vec(sys, method, n, grid_size)
    A = exponent_curve(target, sys.d)
    logB = math.log(target.B)

    def g(s: np.ndarray) -> np.ndarray:
        return P(s) - np.array([A(float(x)) for x in s]) * logB

    M = sys.M
    lo, hi = 1.0 / sys.d + LOW_OFFSET, 1.0
    g_lo, g_hi = g(np.array([lo, hi]))
    if g_lo <= 0:
        return DimensionResult(lo, lo, lo, method, M, target.B, n, (CLAMPED_LOW,))
    if g_hi > 0:
        return DimensionResult(1.0, 1.0, 1.0, method, M, target.B, n, (TRUNCATED,))
    points = 15 if method == "partition" else 1
    lo, hi, passes, samples = _find_root(g, lo, hi, tol, points)
    _check_monotone(samples + [(1.0 / sys.d + LOW_OFFSET, g_lo), (1.0, g_hi)], 1e-9)
    result = DimensionResult(0.5 * (lo + hi), lo, hi, method, M, target.B, n, (), passes)
    if extrapolate:
        result.full_bracket = _extrapolated_bracket(sys, target, result, grid_size, M_list, max(tol, 1e-6))
    return result


def _extrapolated_bracket(sys, target, result, grid_size, M_list, tol):
    """Roots of g built from the lower and upper tail-extrapolated pressure."""
    if sys.kind == "lueroth" or (sys.kind == "power" and sys.M >= 10**6):
        return (result.lo, result.hi)
    M_list = M_list or [max(2, sys.M // 4), max(3, sys.M // 2), sys.M]
    A = exponent_curve(target, sys.d)
    logB = math.log(target.B)
    cache = {}

    def est(s):
        if s not in cache:
            cache[s] = pressure_tail_extrapolate(sys, s, M_list, grid_size)
        return cache[s]

    def g_upper(s):
        return np.array([est(float(x)).hi - A(float(x)) * logB for x in s])

    # s0(M) lower-bounds the full-alphabet root since P_M <= P
    lo = result.lo
    start = 1.0 / sys.d + 1e-3
    if g_upper(np.array([1.0]))[0] > 0:
        return (lo, 1.0)
    if g_upper(np.array([start]))[0] <= 0:
        return (lo, start)
    _, hi, _, _ = _find_root(g_upper, max(start, lo), 1.0, tol, 1)
    return (lo, hi)


def critical_exponent_sweep(sys: SystemSpec, target: TargetSpec, B_grid: Sequence[float], tol: float = 1e-8,
                            **kwargs) -> list[DimensionResult]:
    """s0 across an increasing B grid; raises if s0 fails to decrease beyond the bracket widths."""
    B_grid = [float(B) for B in B_grid]
    if not B_grid:
        raise ValueError("empty B grid")
    if any(B <= 1 for B in B_grid):
        raise ValueError("every B must exceed 1")
    if any(b <= a for a, b in zip(B_grid, B_grid[1:])):
        raise ValueError("B grid must be strictly increasing")
    results = [critical_exponent(sys, target.with_B(B), tol, **kwargs) for B in B_grid]
    for r1, r2 in zip(results, results[1:]):
        if r2.s0 > r1.s0 + r1.width + r2.width:
            raise ConsistencyError(f"s0 increased from {r1.s0} (B={r1.B}) to {r2.s0} (B={r2.B})")
        if not (r1.flags or r2.flags) and r2.s0 >= r1.s0:
            raise ConsistencyError(f"s0 not strictly decreasing between B={r1.B} and B={r2.B}")
    return results


@dataclass
class ConvergenceTable:
    M_rows: list = field(default_factory=list)  # (M, s0, s0 - final)
    n_rows: list = field(default_factory=list)  # (n, s0, s0 - final)

    @staticmethod
    def _shrinking(rows) -> bool:
        diffs = [abs(r[2]) for r in rows[:-1]]
        return all(b <= a for a, b in zip(diffs, diffs[1:]))

    @property
    def M_differences_shrink(self) -> bool:
        return self._shrinking(self.M_rows)

    @property
    def n_differences_shrink(self) -> bool:
        return self._shrinking(self.n_rows)


def convergence_diagnostics(sys: SystemSpec, target: TargetSpec, M_list: Sequence[int], n_list: Sequence[int],
                            tol: float = 1e-8, grid_size: int = 512, partition_M: int | None = None) -> ConvergenceTable:
    """s0(M) via the transfer eigenvalue per M and s0,n via exact partitions per n."""
    for name, seq in (("M_list", M_list), ("n_list", n_list)):
        if any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError(f"{name} must be increasing")
    table = ConvergenceTable()
    s_M = [critical_exponent(sys.with_M(M), target, tol, "eigenvalue", grid_size=grid_size).s0 for M in M_list]
    if s_M:
        table.M_rows = [(M, s, s - s_M[-1]) for M, s in zip(M_list, s_M)]
    part_sys = sys if partition_M is None else sys.with_M(partition_M)
    s_n = [critical_exponent(part_sys, target, tol, "partition", n=n).s0 for n in n_list]
    if s_n:
        table.n_rows = [(n, s, s - s_n[-1]) for n, s in zip(n_list, s_n)]
    return table
