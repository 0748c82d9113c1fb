"""Partition functions and pressure estimates.

Three backends produce a :class:`PressureEstimate`:

``exact-partition``
    ``P_{M,n}(s) = (1/n) log sum_{|w|=n} |C[w]|**s`` by streaming enumeration
    of exact cylinder lengths.
``transfer-eigenvalue``
    ``log`` of the leading eigenvalue of the transfer operator
    ``(Lf)(x) = sum_{a<=M} |T_a'(x)|**s f(T_a x)`` discretized on a uniform grid
    with piecewise-linear interpolation.
``tail-extrapolated``
    a non-decreasing sequence ``P_M(s)`` over growing ``M`` plus an upper
    envelope for the full alphabet.

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ConsistencyError, NumericError, SizeCapError
from .ifs_core import POWER_NORM_M, SystemSpec, _power_tables, max_log_distortion

MAX_PARTITION_WORDS = 10**9
MAX_SMEASURE_WORDS = 10**7
_CHUNK = 1 << 20


@dataclass(frozen=True)
class PressureEstimate:
    s: float
    M: int
    method: str
    value: float
    lo: float
    hi: float
    n: int | None = None
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if not (self.lo <= self.value <= self.hi):
            raise NumericError(f"estimate {self.value} outside its bracket [{self.lo}, {self.hi}]")


def _table_bracket(sys: SystemSpec, s: float, M: int) -> tuple[float, float]:
    """log of sum zeta_a**s and sum lambda_a**s over a <= M (swapped for s < 0)."""
    a = np.arange(1, M + 1, dtype=float)
    lo = math.log(math.fsum(sys.zeta(a) ** s))
    hi = math.log(math.fsum(sys.lam(a) ** s))
    return (lo, hi) if lo <= hi else (hi, lo)


# -- exact partition sums -------------------------------------------------


def _digit_block(M: int, n: int) -> np.ndarray:
    """All words of length n over 1..M, lexicographic, shape (M**n, n)."""
    idx = np.arange(M**n, dtype=np.int64)
    out = np.empty((M**n, n), dtype=np.int64)
    for j in range(n):
        out[:, j] = (idx // M ** (n - 1 - j)) % M + 1
    return out


def _continuant_matrices(words: np.ndarray) -> tuple[np.ndarray, ...]:
    """Entries of prod_i [[a_i, 1], [1, 0]] for each row of ``words``."""
    m = len(words)
    m00, m01 = np.ones(m), np.zeros(m)
    m10, m11 = np.zeros(m), np.ones(m)
    for j in range(words.shape[1]):
        a = words[:, j].astype(float)
        m00, m01 = m00 * a + m01, m00
        m10, m11 = m10 * a + m11, m10
    return m00, m01, m10, m11


def log_lengths(sys: SystemSpec, n: int, M: int | None = None) -> Iterator[np.ndarray]:
    """Stream log|C[w]| over all words of length n, in lexicographic order."""
    M = sys.M if M is None else M
    if sys.affine:
        base = np.log(sys.branch_lengths(np.arange(1, M + 1)))
        suffix_len = 0
        while suffix_len < n and M ** (suffix_len + 1) <= _CHUNK:
            suffix_len += 1
        suffix_len = max(suffix_len, 1)
        tail = np.zeros(1)
        for _ in range(suffix_len):
            tail = (tail[:, None] + base[None, :]).ravel()
        for prefix in _digit_block(M, n - suffix_len) if n > suffix_len else [np.empty(0, dtype=np.int64)]:
            yield base[prefix - 1].sum() + tail if len(prefix) else tail
        return
    suffix_len = 1
    while suffix_len < n and M ** (suffix_len + 1) <= _CHUNK:
        suffix_len += 1
    v00, v01, v10, v11 = _continuant_matrices(_digit_block(M, suffix_len))
    prefix_len = n - suffix_len
    if prefix_len == 0:
        yield -np.log(v00 * (v00 + v01))
        return
    u00, u01, _, _ = _continuant_matrices(_digit_block(M, prefix_len))
    U = np.stack([u00, u01], axis=1)
    Vq = np.stack([v00, v10])
    Vqq = np.stack([v01, v11])
    batch = max(1, (1 << 23) // len(v00))
    for start in range(0, len(U), batch):
        block = U[start:start + batch]
        q = block @ Vq
        out = block @ Vqq
        out += q
        # q (q + qq) stays far below 2**63 at desk scale
        out *= q
        np.log(out, out=out)
        np.negative(out, out=out)
        yield out.ravel()


def _log_partition(sys: SystemSpec, n: int, s_values: np.ndarray, M: int) -> np.ndarray:
    """log Z_{M,n}(s) for each s, summed in a fixed chunk order."""
    if sys.affine:
        lengths = sys.branch_lengths(np.arange(1, M + 1))
        return np.array([n * math.log(math.fsum(lengths**s)) for s in s_values])
    # shift by the largest term in each chunk to keep the sums in range
    acc = [[] for _ in s_values]
    buf = None
    for chunk in log_lengths(sys, n, M):
        top = float(chunk.max())
        if buf is None or len(buf) != len(chunk):
            buf = np.empty_like(chunk)
        for i, s in enumerate(s_values):
            # log-lengths are <= 0; shift only when the largest term would underflow
            shift = s * top if s * top < -600 else 0.0
            np.multiply(chunk, s, out=buf)
            if shift:
                buf -= shift
            np.exp(buf, out=buf)
            acc[i].append((shift, float(buf.sum())))
    out = []
    for parts in acc:
        ref = max(p[0] for p in parts)
        out.append(ref + math.log(math.fsum(v * math.exp(sh - ref) for sh, v in parts)))
    return np.array(out)


def _check_partition_size(sys: SystemSpec, n: int, M: int, limit: int) -> None:
    if n < 1:
        raise ValueError("level n must be >= 1")
    if not sys.affine and M**n > limit:
        raise SizeCapError("partition_words", M**n, limit)


def partition_pressures(sys: SystemSpec, n: int, s_values: Sequence[float], M: int | None = None,
                        max_words: int = MAX_PARTITION_WORDS) -> np.ndarray:
    """Vectorized P_{M,n}(s) over many s with a single enumeration pass."""
    M = sys.M if M is None else M
    _check_partition_size(sys, n, M, max_words)
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    return _log_partition(sys, n, s_values, M) / n


def partition_sum(sys: SystemSpec, n: int, s: float, M: int | None = None,
                  max_words: int = MAX_PARTITION_WORDS) -> PressureEstimate:
    """Exact-partition pressure P_{M,n}(s).

    Raises SizeCapError when ``M**n`` exceeds ``max_words``; use
    :func:`pressure_eigenvalue` for larger problems.
    """
    M = sys.M if M is None else M
    if s <= 1.0 / sys.d - 0.2:
        raise ValueError(f"s={s} below the guard 1/d - 0.2")
    value = float(partition_pressures(sys, n, [s], M, max_words)[0])
    lo, hi = _table_bracket(sys, s, M)
    return PressureEstimate(s, M, "exact-partition", value, min(lo, value), max(hi, value), n=n)


# -- transfer operator ------------------------------------------------------


def transfer_matrix(sys: SystemSpec, s: float, grid_size: int = 512, M: int | None = None) -> np.ndarray:
    """Dense discretization of the transfer operator on ``linspace(0, 1, grid_size)``."""
    M = sys.M if M is None else M
    if grid_size < 16:
        raise ValueError("grid_size must be >= 16")
    N = grid_size
    x = np.linspace(0.0, 1.0, N)
    rows = np.arange(N)
    L = np.zeros(N * N)
    step = max(1, (1 << 21) // N)
    for start in range(1, M + 1, step):
        a = np.arange(start, min(M, start + step - 1) + 1)
        y = sys.branch(a[:, None], x[None, :])
        if sys.affine:
            wgt = np.broadcast_to((sys.branch_lengths(a) ** s)[:, None], y.shape)
        else:
            wgt = sys.branch_derivative(a[:, None], x[None, :]) ** s
        pos = np.clip(y, 0.0, 1.0) * (N - 1)
        idx = np.minimum(pos.astype(np.int64), N - 2)
        frac = pos - idx
        flat = (rows[None, :] * N + idx)
        L += np.bincount(flat.ravel(), weights=(wgt * (1.0 - frac)).ravel(), minlength=N * N)
        L += np.bincount((flat + 1).ravel(), weights=(wgt * frac).ravel(), minlength=N * N)
    return L.reshape(N, N)


def leading_eigenpair(L: np.ndarray, tol: float = 1e-12, max_iter: int = 10**5) -> tuple[float, np.ndarray]:
    """Power iteration from the constant vector; returns (eigenvalue, max-normalized vector)."""
    v = np.ones(L.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        w = L @ v
        top = w.max()
        if not top > 0:
            raise NumericError("transfer operator annihilated the iterate")
        w /= top
        new = top
        if abs(new - lam) <= tol * new and np.max(np.abs(w - v)) <= 1e3 * tol:
            return new, w
        lam, v = new, w
    resid = float(np.max(np.abs(L @ v - lam * v)))
    raise NumericError(f"power iteration did not converge after {max_iter} steps (residual {resid:.3e})")


def pressure_eigenvalue(sys: SystemSpec, s: float, grid_size: int = 512, M: int | None = None,
                        tol: float = 1e-12) -> PressureEstimate:
    if s <= 0:
        raise ValueError("s must be positive")
    M = sys.M if M is None else M
    lam, vec = leading_eigenpair(transfer_matrix(sys, s, grid_size, M), tol)
    value = math.log(lam)
    lo, hi = _table_bracket(sys, s, M)
    return PressureEstimate(s, M, "transfer-eigenvalue", value, min(lo, value), max(hi, value),
                            extra={"eigenvector": vec, "eigenvalue": lam, "grid_size": grid_size})


# -- full-alphabet series (affine systems) -----------------------------------


def _lueroth_tail(s: float, A: int) -> float:
    """sum_{a > A} (a(a+1))**-s by Euler-Maclaurin with a binomial-series integral."""
    integral = 0.0
    coef = 1.0
    for j in range(40):
        if j:
            coef *= (-s - j + 1) / j
        term = coef * float(A) ** (1 - 2 * s - j) / (2 * s + j - 1)
        integral += term
        if abs(term) < 1e-18 * abs(integral):
            break
    f = (A * (A + 1.0)) ** (-s)
    fp = -s * (2 * A + 1.0) * (A * (A + 1.0)) ** (-s - 1)
    return integral - f / 2 - fp / 12


def series_partition(sys: SystemSpec, s: float, A: int = 10**4) -> float:
    """sum over the full alphabet of |C[a]|**s for an affine system."""
    if not sys.affine:
        raise ValueError("series pressure is exact only for affine systems")
    if sys.kind == "power":
        w, _ = _power_tables(sys.d)
        return math.fsum(np.sort(w**s))
    if s <= 0.5:
        return math.inf
    a = np.arange(1, A + 1, dtype=float)
    head = math.fsum((1.0 / (a * (a + 1.0)))[::-1] ** s)
    return head + _lueroth_tail(s, A)


def series_pressure(sys: SystemSpec, s: float) -> float:
    """P(s) of the full affine system; its level-n pressures all coincide."""
    return math.log(series_partition(sys, s))


def tail_bound(sys: SystemSpec, s: float, A: int) -> float:
    """Upper bound for sum_{a > A} lambda_a**s."""
    if sys.kind == "power":
        w, _ = _power_tables(sys.d)
        return math.fsum(w[A:] ** s) if A < POWER_NORM_M else 0.0
    if 2 * s <= 1:
        return math.inf
    # lambda_a <= a**-2 for gauss and lueroth
    return A ** (1 - 2 * s) / (2 * s - 1)


# -- tail extrapolation -------------------------------------------------------


def pressure_tail_extrapolate(sys: SystemSpec, s: float, M_list: Sequence[int], grid_size: int = 512,
                              envelope_factor: int = 4, tol: float = 1e-10) -> PressureEstimate:
    """P_M(s) over increasing M plus a full-alphabet upper envelope.

    The envelope comes from the Collatz-Wielandt bound
    ``lambda <= max_x (L g)(x) / g(x)`` with ``g`` the leading eigenvector of
    the operator truncated at ``envelope_factor * max(M_list)`` digits and the
    remaining digits bounded by :func:`tail_bound`.
    """
    M_list = [int(m) for m in M_list]
    if len(M_list) < 3:
        raise ValueError("M_list needs at least 3 entries")
    if any(b < a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("M_list must be non-decreasing")
    if s <= 1.0 / sys.d + 1e-6:
        raise ValueError(f"s={s} too close to the divergence point 1/d={1.0 / sys.d}")
    seq = [pressure_eigenvalue(sys, s, grid_size, M).value for M in M_list]
    for (m1, p1), (m2, p2) in zip(zip(M_list, seq), zip(M_list[1:], seq[1:])):
        if p2 < p1 - tol:
            raise ConsistencyError(f"P_M({s}) decreased from {p1} (M={m1}) to {p2} (M={m2})")
    M_max = M_list[-1]
    A = M_max * envelope_factor
    if sys.kind == "power":
        A = min(A, POWER_NORM_M)
    L = transfer_matrix(sys, s, grid_size, A)
    lam, g = leading_eigenpair(L)
    x = np.linspace(0.0, 1.0, grid_size)
    if A >= POWER_NORM_M and sys.kind == "power":
        tail = 0.0
    else:
        reach = sys.tail_length(A + 1)
        near = x <= reach + 1.0 / (grid_size - 1)
        tail = tail_bound(sys, s, A) * float(g[near].max())
    ratio = (L @ g + tail) / g
    upper = math.log(float(ratio.max()))
    upper = max(upper, math.log(lam))
    value = seq[-1]
    return PressureEstimate(s, M_max, "tail-extrapolated", value, value, max(upper, value),
                            extra={"sequence": list(zip(M_list, seq)), "envelope_M": A, "tail": tail})


# -- properties of the pressure curve ------------------------------------------


@dataclass
class PropertyReport:
    s_grid: list
    values: list
    decreasing: list = field(default_factory=list)
    convexity: list = field(default_factory=list)
    lipschitz: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.decreasing or self.convexity or self.lipschitz)


def _lipschitz_constant(sys: SystemSpec, s: float, M: int | None, method: str) -> float:
    """z(s) = (R1 - R2)/(s - s_mid) with R1, R2 from the derivative tables."""
    s_mid = (s + 1.0 / sys.d) / 2
    if method == "series":
        # affine: zeta = lambda = |C[a]|, so R1, R2 are full-alphabet pressures
        r1 = series_pressure(sys, s_mid)
        r2 = series_pressure(sys, s)
    else:
        a = np.arange(1, M + 1, dtype=float)
        r1 = math.log(math.fsum(sys.lam(a) ** s_mid))
        r2 = math.log(math.fsum(sys.zeta(a) ** s))
    return (r1 - r2) / (s - s_mid)


def pressure_properties_check(sys: SystemSpec, s_grid: Sequence[float], n: int = 1, M: int | None = None,
                              method: str = "partition", convex_tol: float = 1e-9) -> PropertyReport:
    """Check strict decrease, discrete convexity and the uniform Lipschitz bound on a grid.

    ``method='partition'`` uses P_{M,n}; ``method='series'`` uses the
    closed-form full-alphabet pressure of an affine system.
    """
    s_grid = [float(s) for s in s_grid]
    if any(b <= a for a, b in zip(s_grid, s_grid[1:])):
        raise ValueError("s_grid must be strictly increasing")
    M = sys.M if M is None else M
    if method == "series":
        vals = [series_pressure(sys, s) for s in s_grid]
    elif method == "partition":
        vals = [float(v) for v in partition_pressures(sys, n, s_grid, M)]
    else:
        raise ValueError(f"unknown method {method!r}")
    rep = PropertyReport(s_grid, vals)
    for i in range(len(s_grid) - 1):
        if not vals[i + 1] < vals[i]:
            rep.decreasing.append((s_grid[i], s_grid[i + 1]))
    slopes = [(vals[i + 1] - vals[i]) / (s_grid[i + 1] - s_grid[i]) for i in range(len(s_grid) - 1)]
    for i in range(len(slopes) - 1):
        if slopes[i + 1] - slopes[i] < -convex_tol:
            rep.convexity.append(s_grid[i + 1])
    for i in range(len(slopes)):
        t, s = s_grid[i], s_grid[i + 1]
        if t < (s + 1.0 / sys.d) / 2:
            continue
        z = _lipschitz_constant(sys, s, M, method)
        if abs(slopes[i]) > z + 1e-12:
            rep.lipschitz.append((t, s, abs(slopes[i]), z))
    return rep


# -- s-measures -----------------------------------------------------------------


@dataclass(frozen=True)
class SMeasureWeights:
    M: int
    s: float
    n: int
    words: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    normalization: float = 0.0
    log_ratio: np.ndarray = field(repr=False, default=None)
    rho: float = 0.0

    def weight(self, word) -> float:
        idx = 0
        for a in word:
            idx = idx * self.M + (int(a) - 1)
        return float(self.weights[idx])

    @property
    def sandwich_ok(self) -> bool:
        return bool(np.all(np.abs(self.log_ratio) <= self.rho + 1e-9))


def rho_hat(sys: SystemSpec, n: int, s: float, M: int | None = None, grid_size: int = 512) -> float:
    """Measured sandwich constant: s * worst log-distortion + log(max h / min h).

    ``h`` is the leading eigenvector of the truncated transfer operator; the
    two terms bound how far ``|C[w]|**s`` and ``L^n 1`` stray from
    ``|T_w'|**s`` and ``e^{nP_M}``.
    """
    M = sys.M if M is None else M
    if sys.affine:
        return 0.0
    est = pressure_eigenvalue(sys, s, grid_size, M)
    h = est.extra["eigenvector"]
    return abs(s) * max_log_distortion(sys, n, M) + math.log(h.max() / h.min())


def s_measure_weights(sys: SystemSpec, M: int, n: int, s: float, grid_size: int = 512) -> SMeasureWeights:
    """weight(w) = |C[w]|**s / Z_{M,n}(s) over all words of length n with digits <= M."""
    if M**n > MAX_SMEASURE_WORDS:
        raise SizeCapError("smeasure_words", M**n, MAX_SMEASURE_WORDS)
    logs = np.concatenate(list(log_lengths(sys, n, M)))
    top = logs.max()
    raw = np.exp(s * (logs - top))
    total = math.fsum(raw)
    weights = raw / total
    log_z = s * top + math.log(total)
    p_m = pressure_eigenvalue(sys, s, grid_size, M).value if s > 0 else math.log(M)
    # weight / (|C|^s e^{-n P_M}) = e^{n P_M} / Z
    log_ratio = np.full(len(weights), n * p_m - log_z)
    rho = rho_hat(sys, n, s, M, grid_size) if s > 0 else 0.0
    return SMeasureWeights(M, s, n, _digit_block(M, n), weights, math.exp(log_z), log_ratio, rho)
