"""The exponent functional A(s) = min over the simplex of max_m A_m(b, s).

``A_m(b, s) = (d-1) s b_m + (d s - 1) (b_1 + ... + b_{m-1})`` and the simplex is
``S = {b >= 0 : sum b_j t_j = 1}``.  The min-max is solved as a small linear
program with a dense two-phase simplex method (Bland's rule), which runs on
floats or, for an exact second opinion, on ``Fraction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .errors import ConsistencyError, SizeCapError

MAX_K = 16
MAX_LATTICE = 10**8


@dataclass(frozen=True)
class TargetSpec:
    positions: tuple[int, ...]
    weights: tuple[float, ...]
    B: float

    def __post_init__(self):
        pos = tuple(int(i) for i in self.positions)
        wts = tuple(float(t) for t in self.weights)
        if not pos:
            raise ValueError("target needs at least one position (k >= 1)")
        if len(pos) != len(wts):
            raise ValueError(f"{len(pos)} positions but {len(wts)} weights")
        if len(pos) > MAX_K:
            raise SizeCapError("k", len(pos), MAX_K)
        if pos[0] < 0:
            raise ValueError("positions must be non-negative")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError(f"positions must be strictly increasing, got {pos}")
        if any(not t > 0 for t in wts):
            raise ValueError(f"weights must be positive, got {wts}")
        if not float(self.B) > 1:
            raise ValueError(f"B must satisfy B > 1, got {self.B}")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "B", float(self.B))

    @property
    def k(self) -> int:
        return len(self.positions)

    def with_B(self, B: float) -> "TargetSpec":
        return TargetSpec(self.positions, self.weights, B)


@dataclass(frozen=True)
class SimplexPoint:
    b: tuple
    t: tuple

    def __post_init__(self):
        if len(self.b) != len(self.t):
            raise ValueError("b and t must have the same length")
        if any(x < 0 for x in self.b):
            raise ValueError(f"simplex coordinates must be non-negative, got {self.b}")
        total = sum(x * y for x, y in zip(self.b, self.t))
        if abs(total - 1) > 1e-12:
            raise ValueError(f"sum b_j t_j = {total}, expected 1")


def _coords(b) -> Sequence:
    return b.b if isinstance(b, SimplexPoint) else b


def a_component(b, s, m: int, d) -> float:
    """A_m(b, s) with 1-based m."""
    b = _coords(b)
    if not 1 <= m <= len(b):
        raise IndexError(f"component index {m} outside 1..{len(b)}")
    return (d - 1) * s * b[m - 1] + (d * s - 1) * sum(b[: m - 1])


def a_of_b(b, s, d):
    """A(b, s) = max_m A_m(b, s)."""
    b = _coords(b)
    return max(a_component(b, s, m, d) for m in range(1, len(b) + 1))


# -- dense simplex ----------------------------------------------------------


class _Tableau:
    """Equality-form LP min c.x, Ax = rhs, x >= 0 solved in place."""

    def __init__(self, A, rhs, eps):
        self.A = [list(row) for row in A]
        self.rhs = list(rhs)
        self.eps = eps
        self.basis: list[int] = []

    def pivot(self, r: int, j: int) -> None:
        A, rhs = self.A, self.rhs
        p = A[r][j]
        A[r] = [v / p for v in A[r]]
        rhs[r] = rhs[r] / p
        for i in range(len(A)):
            if i != r and A[i][j] != 0:
                f = A[i][j]
                A[i] = [v - f * w for v, w in zip(A[i], A[r])]
                rhs[i] = rhs[i] - f * rhs[r]
        self.basis[r] = j

    def optimize(self, c, allowed) -> None:
        eps = self.eps
        for _ in range(10000):
            cb = [c[j] for j in self.basis]
            entering = None
            for j in allowed:
                if j in self.basis:
                    continue
                red = c[j] - sum(cb[i] * self.A[i][j] for i in range(len(self.A)))
                if red < -eps:
                    entering = j
                    break
            if entering is None:
                return
            best = None
            for i, row in enumerate(self.A):
                if row[entering] > eps:
                    ratio = self.rhs[i] / row[entering]
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise ConsistencyError("LP unbounded")
            self.pivot(best[1], entering)
        raise ConsistencyError("simplex iteration limit reached")


def _solve_lp(A, rhs, c, eps):
    """Two-phase simplex; returns x (length = number of columns)."""
    zero = rhs[0] * 0
    one = zero + 1
    A = [list(row) for row in A]
    rhs = list(rhs)
    for i in range(len(A)):
        if rhs[i] < 0:
            A[i] = [-v for v in A[i]]
            rhs[i] = -rhs[i]
    m, n = len(A), len(A[0])
    ext = [row + [one if k == i else zero for k in range(m)] for i, row in enumerate(A)]
    tab = _Tableau(ext, rhs, eps)
    tab.basis = [n + i for i in range(m)]
    phase1 = [zero] * n + [one] * m
    tab.optimize(phase1, range(n + m))
    if sum(tab.rhs[i] for i in range(m) if tab.basis[i] >= n) > max(eps, 0) * 1e3:
        raise ConsistencyError("LP infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if tab.basis[i] >= n:
            for j in range(n):
                if abs(tab.A[i][j]) > eps and j not in tab.basis:
                    tab.pivot(i, j)
                    break
    tab.optimize(list(c) + [zero] * m, range(n))
    x = [zero] * n
    for i, j in enumerate(tab.basis):
        if j < n:
            x[j] = tab.rhs[i]
    return x


def _program_rows(t, s, d, extra_caps=()):
    """Constraint rows over columns (b_1..b_k, z, slack_1..slack_k, cap slacks)."""
    k = len(t)
    zero, one = s * 0, s * 0 + 1
    ncap = len(extra_caps)
    ncol = 2 * k + 1 + ncap
    rows, rhs = [], []
    for m in range(k):
        row = [zero] * ncol
        for j in range(m):
            row[j] = d * s - 1
        row[m] = (d - 1) * s
        row[k] = -one
        row[k + 1 + m] = one
        rows.append(row)
        rhs.append(zero)
    row = [zero] * ncol
    for j in range(k):
        row[j] = t[j] * one
    rows.append(row)
    rhs.append(one)
    for c_idx, (col, cap) in enumerate(extra_caps):
        row = [zero] * ncol
        row[col] = one
        row[2 * k + 1 + c_idx] = one
        rows.append(row)
        rhs.append(cap)
    return rows, rhs, ncol


def _minmax(t, s, d, eps, fix_tol):
    k = len(t)
    rows, rhs, ncol = _program_rows(t, s, d)
    c = [s * 0] * ncol
    c[k] = s * 0 + 1
    x = _solve_lp(rows, rhs, c, eps)
    z = x[k]
    # lexicographically smallest minimizer: minimize b_1, then b_2, ... at fixed optimum
    caps = [(k, z + fix_tol)]
    b = x[:k]
    for j in range(k):
        rows, rhs, ncol = _program_rows(t, s, d, caps)
        c = [s * 0] * ncol
        c[j] = s * 0 + 1
        x = _solve_lp(rows, rhs, c, eps)
        b = x[:k]
        caps.append((j, x[j] + fix_tol))
    return z, b


def a_of_s(target: TargetSpec, s: float, d: float, exact: bool = False):
    """(A(s), argmin b) for the target's weights.

    ``exact=True`` pivots in rational arithmetic on the binary values of the
    inputs; the returned value and coordinates are then Fractions.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    t = target.weights
    if exact:
        S, D = Fraction(s), Fraction(d)
        T = [Fraction(x) for x in t]
        z, b = _minmax(T, S, D, Fraction(0), Fraction(0))
        return z, SimplexPoint(tuple(b), tuple(T))
    z, b = _minmax([float(x) for x in t], float(s), float(d), 1e-13, 1e-13 * max(1.0, abs(s)))
    # round-off from the pinned refinement steps: snap tiny coordinates to zero
    b = [float(x) if x > 1e-11 else 0.0 for x in b]
    total = math.fsum(x * y for x, y in zip(b, t))
    b = [x / total for x in b]
    value = a_of_b(b, s, d)
    if abs(value - z) > 1e-10:
        raise ConsistencyError(f"LP optimum {z} disagrees with A(b*, s) = {value}")
    return float(z), SimplexPoint(tuple(b), tuple(t))


# -- lattice oracle -----------------------------------------------------------


def _lattice_count(N: int, k: int) -> int:
    return math.comb(N + k - 1, k - 1)


def _eval_cols(cols, t, s: float, d: float) -> np.ndarray:
    """A(b, s) for columns cols[j] = b_j t_j (arrays or scalars broadcast together)."""
    c_own, c_prev = (d - 1) * s, d * s - 1
    best = None
    prefix = 0.0
    for m, col in enumerate(cols):
        b = col * (1.0 / t[m])
        val = c_own * b
        if m:
            val = val + c_prev * prefix
        best = val if best is None else np.maximum(best, val)
        prefix = prefix + b
    return np.broadcast_to(best, np.broadcast(*cols).shape)


def _eval_u(u: np.ndarray, t: np.ndarray, s: float, d: float) -> np.ndarray:
    """A(b, s) for rows u = (b_j t_j)."""
    return _eval_cols([u[:, j] for j in range(u.shape[1])], t, s, d)


def _exhaustive(t: np.ndarray, s: float, d: float, N: int) -> float:
    """Minimum over the full lattice; the last two coordinates are vectorized per head."""
    k = len(t)
    if k == 1:
        return float(_eval_u(np.ones((1, 1)), t, s, d)[0])
    grid = np.arange(N + 1) / N
    if k == 2:
        return float(_eval_cols([grid, 1 - grid], t, s, d).min())
    best = math.inf
    # heads fix the first k-2 coordinates; for k = 3 heads are batched as a 2-D block
    if k == 3:
        step = max(1, (1 << 22) // (N + 1))
        for h0 in range(0, N + 1, step):
            h = (np.arange(h0, min(h0 + step, N + 1)) / N)[:, None]
            u2 = grid[None, : N - h0 + 1]
            u3 = 1 - h - u2
            vals = _eval_cols([h, u2, u3], t, s, d)
            vals = np.where(u3 >= -0.5 / N, vals, np.inf)
            best = min(best, float(vals.min()))
        return best
    for head in product(range(N + 1), repeat=k - 2):
        rest = N - sum(head)
        if rest < 0:
            continue
        u2 = grid[: rest + 1]
        cols = [h / N for h in head] + [u2, rest / N - u2]
        best = min(best, float(_eval_cols(cols, t, s, d).min()))
    return best


def _zoom(t: np.ndarray, s: float, d: float, step: float, radius: int = 4) -> float:
    """Window lattice search, re-centering until the best point is interior, then refining."""
    k = len(t)
    N0 = 8
    while _lattice_count(2 * N0, k) <= 2 * 10**5:
        N0 *= 2
    N_final = round(1 / step)
    best_val = math.inf
    center = None
    N = N0
    while True:
        if center is None:
            best_val = _exhaustive(t, s, d, N)
            pts = _all_lattice(N, k)
            vals = _eval_u(pts / N, t, s, d)
            center = pts[int(np.argmin(vals))]
        for _ in range(10**4):
            offsets = np.array(list(product(range(-radius, radius + 1), repeat=k - 1)))
            free = center[: k - 1][None, :] + offsets
            last = N - free.sum(axis=1)
            ok = np.all(free >= 0, axis=1) & (last >= 0)
            pts = np.concatenate([free[ok], last[ok][:, None]], axis=1)
            vals = _eval_u(pts / N, t, s, d)
            i = int(np.argmin(vals))
            moved = not np.array_equal(pts[i], center) and vals[i] < best_val
            best_val = min(best_val, float(vals[i]))
            if not moved:
                break
            center = pts[i]
        if N >= N_final:
            return best_val
        factor = min(10, max(2, N_final // N))
        N_new = min(N * factor, N_final)
        center = np.round(center * N_new / N).astype(np.int64)
        center[-1] = N_new - center[:-1].sum()
        N = N_new


def _all_lattice(N: int, k: int) -> np.ndarray:
    if k == 1:
        return np.array([[N]])
    out = []
    for head in product(range(N + 1), repeat=k - 1):
        if sum(head) <= N:
            out.append(head + (N - sum(head),))
    return np.array(out, dtype=np.int64)


def a_of_s_grid_oracle(target: TargetSpec, s: float, d: float, step: float,
                       max_points: int = MAX_LATTICE, zoom: bool = False) -> float:
    """Brute-force minimum of A(b, s) over the lattice {b_j t_j in step * Z} on S.

    Lattices above ``max_points`` raise SizeCapError unless ``zoom=True``,
    which switches to a windowed search that only visits neighbourhoods of
    the running best point (valid because A(., s) is convex).
    """
    if not 1e-5 <= step <= 1e-1:
        raise ValueError("step must lie in [1e-5, 1e-1]")
    if target.k > 4:
        raise ValueError("grid oracle supports k <= 4")
    N = round(1 / step)
    t = np.asarray(target.weights, dtype=float)
    count = _lattice_count(N, target.k)
    if count > max_points:
        if not zoom:
            raise SizeCapError("lattice_points", count, max_points)
        return _zoom(t, s, d, step)
    return _exhaustive(t, s, d, N)
