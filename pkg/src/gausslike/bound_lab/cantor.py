"""Cantor subset F of E with the product measure mu, local dimensions and cover exponents.

Positions of a word fall into three roles:

* free: digits 1..M with s-measure weights p_a = |C[a]|**s / Z_M(s);
* filler: the single digit 1 (between special positions of one stage);
* special: digits uniform on the integers of [B**(n_j b_m) + 1, 2 B**(n_j b_m)].

Because the systems handled here are affine, mu is a product measure and
every cylinder is an affine image of [0, 1].  Ball masses are computed in the
local frame of the deepest cylinder of x that still contains the ball, so
radii far below double resolution of [0, 1] stay meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from ..errors import SizeCapError
from ..ifs_core import MAX_WORD_LENGTH, POWER_NORM_M, SystemSpec, _power_tables
from ..pressure import _lueroth_tail
from ..weight_program import SimplexPoint, TargetSpec, a_of_s

FREE, FILLER, SPECIAL = "free-block", "filler-ones", "special-digit"
MAX_NODES = 10**6
NEAR_INTEGER = 1e-9


@dataclass(frozen=True)
class CantorSpec:
    n1: int = 6
    stages: int = 2
    M: int = 10**4
    b: tuple | None = None  # simplex point; default is the A(s) argmin at s0
    n_seq: tuple | None = None  # explicit n_1 < n_2 < ...; default n_{j+1} = n_j**2
    tail_free: int = 6  # free digits generated after the last special position
    s: float | None = None  # exponent of the s-measure; default s0

    def __post_init__(self):
        if self.stages < 1:
            raise ValueError("need at least one stage")
        if self.M < 1:
            raise ValueError("M must be positive")
        if self.n_seq is not None:
            seq = tuple(int(n) for n in self.n_seq)
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise ValueError(f"n_j must be strictly increasing, got {seq}")
            object.__setattr__(self, "n_seq", seq)

    def sequence(self) -> tuple[int, ...]:
        if self.n_seq is not None:
            if len(self.n_seq) < self.stages:
                raise ValueError("n_seq shorter than the number of stages")
            return self.n_seq[: self.stages]
        seq = [self.n1]
        while len(seq) < self.stages:
            seq.append(seq[-1] ** 2)
        if seq[0] < 1 or any(b <= a for a, b in zip(seq, seq[1:])):
            raise ValueError(f"n_j must be strictly increasing positive integers, got {seq}")
        return tuple(seq)


@dataclass(frozen=True)
class MeasureNode:
    word: tuple
    mass: float
    stage: str


def special_range(B: float, n: int, b: float) -> tuple[int, int]:
    """Integers a with B**(n b) + 1 <= a <= 2 B**(n b); y is snapped to nearby integers."""
    y = B ** (n * b)
    if abs(y - round(y)) <= NEAR_INTEGER * max(1.0, y):
        y = float(round(y))
    lo = math.floor(y) + 1
    hi = math.floor(2 * y)
    if hi < lo:
        raise ValueError(f"empty special range for B**(n b) = {y}")
    return lo, hi


class _Position:
    """Digit distribution and geometry of one position of F."""

    def __init__(self, sys: SystemSpec, role: str, dlo: int, dhi: int, s: float):
        self.sys, self.role, self.dlo, self.dhi = sys, role, dlo, dhi
        if sys.kind == "power" and dhi > POWER_NORM_M:
            raise SizeCapError("power_alphabet", dhi, POWER_NORM_M)
        self.count = dhi - dlo + 1
        if role == FREE:
            w = sys.branch_lengths(np.arange(1, dhi + 1)) ** s
            self.p = w / math.fsum(w)
            self.cp = np.concatenate([[0.0], np.cumsum(self.p)])

    def prob(self, a: int) -> float:
        if not self.dlo <= a <= self.dhi:
            return 0.0
        if self.role == FREE:
            return float(self.p[a - 1])
        return 1.0 / self.count

    def prob_range(self, a1: int, a2: int) -> float:
        a1, a2 = max(a1, self.dlo), min(a2, self.dhi)
        if a2 < a1:
            return 0.0
        if self.role == FREE:
            return float(self.cp[a2] - self.cp[a1 - 1])
        return (a2 - a1 + 1) / self.count

    def total(self) -> float:
        if self.role == FREE:
            return math.fsum(self.p)
        return self.count * (1.0 / self.count)

    def lo(self, a: int) -> float:
        if self.sys.kind == "lueroth":
            return 1.0 / (a + 1.0)
        return float(self.sys.branch_lo([a])[0])

    def length(self, a: int) -> float:
        if self.sys.kind == "lueroth":
            return 1.0 / (a * (a + 1.0))
        return float(self.sys.branch_lengths([a])[0])

    def log_length(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if self.sys.kind == "lueroth":
            return -np.log(a) - np.log1p(a)
        return np.log(self.sys.branch_lengths(a))

    def digit_at(self, z: float) -> int:
        """Digit whose cylinder contains z, clipped to the allowed range."""
        if z <= 0:
            return self.dhi
        if z >= 1:
            return self.dlo
        if self.sys.kind == "lueroth":
            a = math.floor(1.0 / z)
        else:
            _, cum = _power_tables(self.sys.d)
            a = max(int(np.searchsorted(cum, 1.0 - z, side="left")), 1)
        return min(max(a, self.dlo), self.dhi)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.role == FILLER:
            return np.ones(size, dtype=np.int64)
        if self.role == SPECIAL:
            return rng.integers(self.dlo, self.dhi + 1, size=size)
        idx = np.searchsorted(self.cp, rng.random(size), side="right")
        return np.clip(idx, 1, self.dhi).astype(np.int64)

    def log_sum(self, sigma: float) -> float:
        """log of sum over allowed digits of |C[a]|**sigma."""
        if self.role == FILLER:
            return sigma * float(self.log_length(1))
        if self.count <= 10**6 or self.sys.kind != "lueroth":
            a = np.arange(self.dlo, self.dhi + 1, dtype=float)
            return math.log(math.fsum(np.exp(sigma * self.log_length(a))))
        # wide lueroth ranges: difference of Euler-Maclaurin tails, in scaled form
        head = self.dlo + 10**4
        a = np.arange(self.dlo, head, dtype=float)
        scale = self.dlo ** (-2 * sigma)
        part = math.fsum(np.exp(sigma * self.log_length(a))) / scale
        rest = (_lueroth_tail(sigma, head - 1) - _lueroth_tail(sigma, self.dhi)) / scale
        return math.log(scale) + math.log(part + rest)

    def union_log_length(self) -> float:
        """log |union of the allowed cylinders| (contiguous for affine systems)."""
        return math.log(self.lo(self.dlo) + self.length(self.dlo) - self.lo(self.dhi))


@dataclass
class CantorMeasure:
    sys: SystemSpec
    target: TargetSpec
    spec: CantorSpec
    s: float
    b: tuple
    n_seq: tuple
    positions: list = field(repr=False)  # positions[p - 1] is digit position p
    special_positions: list = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.positions)

    def stage_end(self, j: int) -> int:
        """Last digit position of stage j (1-based); stage 0 is the initial free block."""
        if j == 0:
            return self.n_seq[0] + self.target.positions[0] - 1
        return self.n_seq[j - 1] + self.target.positions[-1]

    def conservation_error(self) -> float:
        """max over positions of |sum of child weights - 1|."""
        return max(abs(p.total() - 1.0) for p in self.positions)

    # -- sampling --------------------------------------------------------

    def sample_words(self, count: int, seed: int = 0) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(seed))
        return np.stack([p.sample(rng, count) for p in self.positions], axis=1)

    def in_E(self, word: Sequence[int]) -> bool:
        """Check prod a_{n_j+i_m}**t_m >= B**n_j at every generated stage (in logs)."""
        logB = math.log(self.target.B)
        for n in self.n_seq:
            if n + self.target.positions[-1] > len(word):
                continue
            lhs = sum(t * math.log(int(word[n + i - 1])) for i, t in zip(self.target.positions, self.target.weights))
            if lhs < n * logB * (1 - 1e-12):
                return False
        return True

    # -- ball masses -----------------------------------------------------

    def _mass(self, level: int, u: float, v: float) -> float:
        """Conditional mu-mass of local [u, v] inside a node at the given depth."""
        u, v = max(u, 0.0), min(v, 1.0)
        if u >= v:
            return 0.0
        if u <= 0.0 and v >= 1.0:
            return 1.0
        if level == self.depth:
            return v - u  # mass spread uniformly below the generated depth
        pos = self.positions[level]
        a_big, a_small = pos.digit_at(u), pos.digit_at(v)
        if a_big == a_small:
            lo, ln = pos.lo(a_big), pos.length(a_big)
            return pos.prob(a_big) * self._mass(level + 1, (u - lo) / ln, (v - lo) / ln)
        inner = pos.prob_range(a_small + 1, a_big - 1)
        lo, ln = pos.lo(a_big), pos.length(a_big)
        left = pos.prob(a_big) * self._mass(level + 1, (u - lo) / ln, 1.0)
        lo, ln = pos.lo(a_small), pos.length(a_small)
        right = pos.prob(a_small) * self._mass(level + 1, 0.0, (v - lo) / ln)
        return inner + left + right

    def path(self, word: Sequence[int]):
        """(local coordinates y_l, log |C_l|, log mu(C_l)) for l = 0..depth, x at the leaf midpoint."""
        D = len(word)
        y = np.empty(D + 1)
        y[D] = 0.5
        for l in range(D - 1, -1, -1):
            pos, a = self.positions[l], int(word[l])
            y[l] = pos.lo(a) + pos.length(a) * y[l + 1]
        loglen = np.concatenate([[0.0], np.cumsum([float(p.log_length(int(a))) for p, a in zip(self.positions, word)])])
        logmu = np.concatenate([[0.0], np.cumsum([math.log(p.prob(int(a))) for p, a in zip(self.positions, word)])])
        return y, loglen, logmu

    def log_ball_mass(self, word: Sequence[int], log_r: float, cache=None) -> float:
        y, loglen, logmu = cache if cache is not None else self.path(word)
        best = 0
        for l in range(len(y) - 1, -1, -1):
            rho = math.exp(log_r - loglen[l])
            if y[l] - rho >= 0.0 and y[l] + rho <= 1.0:
                best = l
                break
        rho = math.exp(log_r - loglen[best])
        m = self._mass(best, y[best] - rho, y[best] + rho)
        return float(logmu[best]) + math.log(m)


def cantor_measure(sys: SystemSpec, target: TargetSpec, spec: CantorSpec | None = None) -> CantorMeasure:
    """Build the position table of F and mu for an affine system."""
    spec = spec or CantorSpec()
    if not sys.affine:
        raise ValueError("the Cantor construction is implemented for affine systems (lueroth, power)")
    if spec.s is None or spec.b is None:
        from ..dimension import critical_exponent

        s0 = critical_exponent(sys, target, 1e-10).s0
    s = spec.s if spec.s is not None else s0
    if spec.b is not None:
        b = tuple(float(x) for x in spec.b)
        SimplexPoint(b, target.weights)
    else:
        b = a_of_s(target, s0, sys.d)[1].b
    n_seq = spec.sequence()
    pos_idx = target.positions
    if any(n_seq[j + 1] + pos_idx[0] <= n_seq[j] + pos_idx[-1] for j in range(len(n_seq) - 1)):
        raise ValueError("stages overlap: need n_{j+1} + i_1 > n_j + i_k")
    depth = n_seq[-1] + pos_idx[-1] + spec.tail_free
    if depth > MAX_WORD_LENGTH:
        raise SizeCapError("depth", depth, MAX_WORD_LENGTH)
    roles = {}
    specials = []
    for n in n_seq:
        for m, i in enumerate(pos_idx):
            roles[n + i] = (SPECIAL, special_range(target.B, n, b[m]))
            specials.append(n + i)
        for i in range(n + pos_idx[0] + 1, n + pos_idx[-1]):
            roles.setdefault(i, (FILLER, (1, 1)))
    free = _Position(sys, FREE, 1, spec.M, s)
    positions = []
    for p in range(1, depth + 1):
        role, (lo, hi) = roles.get(p, (FREE, (1, spec.M)))
        positions.append(free if role == FREE else _Position(sys, role, lo, hi, s))
    return CantorMeasure(sys, target, spec, s, b, n_seq, positions, specials)


def cantor_generate(sys: SystemSpec, target: TargetSpec, spec: CantorSpec | None = None, stage: int = 1,
                    max_nodes: int = MAX_NODES, measure: CantorMeasure | None = None) -> list[MeasureNode]:
    """All cylinders of F (with mu-masses) through the end of the given stage.

    Stage 0 ends before the first special digit; stage j >= 1 ends at
    position n_j + i_k.  Intended for small M: the node count is the product
    of the per-position alphabet sizes and is capped by ``max_nodes``.
    """
    cm = measure or cantor_measure(sys, target, spec)
    if not 0 <= stage <= len(cm.n_seq):
        raise ValueError(f"stage must lie in 0..{len(cm.n_seq)}")
    end = cm.stage_end(stage)
    count = 1
    for p in cm.positions[:end]:
        count *= p.count
        if count > max_nodes:
            raise SizeCapError("cantor_nodes", count, max_nodes)
    label = FREE if stage == 0 else SPECIAL
    nodes = []
    ranges = [range(p.dlo, p.dhi + 1) for p in cm.positions[:end]]
    for word in product(*ranges):
        mass = math.prod(p.prob(a) for p, a in zip(cm.positions, word))
        nodes.append(MeasureNode(word, mass, label))
    return nodes


# -- local dimensions ------------------------------------------------------------


@dataclass
class LocalDimensionStats:
    s0: float
    rows: list  # (sample, x, log_r, ratio, case)
    grouped_rows: list  # same layout, radii = hull of a special block
    in_E: int
    samples: int

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min())

    @property
    def mean_ratio(self) -> float:
        return float(self.ratios.mean())

    @property
    def grouped_min(self) -> float:
        return min((r[3] for r in self.grouped_rows), default=math.nan)


def _case(cm: CantorMeasure, n: int) -> str:
    if n <= cm.stage_end(0):
        return "case1"
    for j, nj in enumerate(cm.n_seq):
        if nj + cm.target.positions[0] <= n <= nj + cm.target.positions[-1]:
            return "case2"
    return "case3"


def local_dimension_sample(sys: SystemSpec, target: TargetSpec, spec: CantorSpec | None = None,
                           sample_count: int = 1000, seed: int = 0, measure: CantorMeasure | None = None,
                           n_min: int | None = None) -> LocalDimensionStats:
    """log mu(B(x, r)) / log r at the cylinder scales r_n = |C[x_1..x_n]| of sampled x in F.

    Radii run over n_1 <= n <= depth.  Separately, ``grouped_rows`` use the
    radius of the hull of each special block below x's cylinder, which is the
    least favourable scale for the ratio.
    """
    cm = measure or cantor_measure(sys, target, spec)
    if cm.depth < cm.stage_end(min(2, len(cm.n_seq))):
        raise ValueError("construction too shallow for local-dimension sampling")
    words = cm.sample_words(sample_count, seed)
    n_min = cm.n_seq[0] if n_min is None else n_min
    rows, grouped, inside = [], [], 0
    for k, word in enumerate(words):
        inside += cm.in_E(word)
        cache = cm.path(word)
        y, loglen, _ = cache
        x = float(y[0])
        for n in range(n_min, cm.depth + 1):
            log_r = float(loglen[n])
            ratio = cm.log_ball_mass(word, log_r, cache) / log_r
            rows.append((k, x, log_r, ratio, _case(cm, n)))
        for p in cm.special_positions:
            log_r = float(loglen[p - 1]) + cm.positions[p - 1].union_log_length()
            ratio = cm.log_ball_mass(word, log_r, cache) / log_r
            grouped.append((k, x, log_r, ratio, "case2-hull"))
    return LocalDimensionStats(cm.s, rows, grouped, inside, sample_count)


def natural_cover_exponent(cm: CantorMeasure) -> tuple[float, list]:
    """Smallest sigma solving sum |C|**sigma = 1 over the natural covers of the final stage.

    Covers are all cylinders of one level L (from the end of the previous
    stage to the generated depth), and for each special position of the
    final stage, the cylinders just above it each replaced by the hull of
    its special block.  Returns (exponent, [(label, root), ...]).
    """
    first = cm.stage_end(len(cm.n_seq) - 1) + 1 if len(cm.n_seq) > 1 else cm.n_seq[0]

    def level_root(L: int, grouped_at: int | None) -> float:
        def f(sigma):
            total = math.fsum(cm.positions[p].log_sum(sigma) for p in range(L))
            if grouped_at is not None:
                total += sigma * cm.positions[grouped_at - 1].union_log_length()
            return total
        return brentq(f, 1e-9, 1.0, xtol=1e-12)

    roots = []
    for L in range(first, cm.depth + 1):
        roots.append((f"level-{L}", level_root(L, None)))
    for p in cm.special_positions:
        if p >= first:
            roots.append((f"hull-{p}", level_root(p - 1, p)))
    return min(r for _, r in roots), roots
