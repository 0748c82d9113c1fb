import math
from fractions import Fraction

import numpy as np
import pytest

from gausslike.bound_lab.cantor import (
    FILLER,
    SPECIAL,
    CantorSpec,
    cantor_generate,
    cantor_measure,
    local_dimension_sample,
    special_range,
)
from gausslike.bound_lab.covers import (
    CoverSpec,
    ceil_root,
    cover_cost_exact,
    cover_cost_transition,
    cover_validity,
)
from gausslike.dimension import critical_exponent
from gausslike.errors import SizeCapError
from gausslike.ifs_core import SystemSpec, cylinder_interval, tail_union
from gausslike.pressure import series_partition
from gausslike.weight_program import TargetSpec

L = SystemSpec("lueroth", 200)
G = SystemSpec("gauss", 200)


def k1(B):
    return TargetSpec((0,), (1.0,), B)


K2 = TargetSpec((0, 1), (1.0, 1.0), 2.0)


# -- covers ---------------------------------------------------------------------


def test_single_position_example():
    # B^5 = 32: every digit a >= 32 is covered by one tail of length 1/32, Z(1) = 1
    c = cover_cost_exact(L, k1(2.0), 5, 1.0)
    assert c.cost == pytest.approx(1 / 32, rel=1e-12)
    assert c.lo == c.hi == c.cost
    assert c.tie


def test_costs_at_s_one_bounded_by_one():
    for target in (k1(2.0), K2, TargetSpec((0, 2), (1.0, 0.5), 1.5)):
        for n in (3, 6, 9):
            assert cover_cost_exact(L, target, n, 1.0).cost <= 1 + 1e-12


def threshold_brute_force(R, s, gap_factor):
    """Oracle for k = 2, t = (1, 1): scan every first threshold in plain Python."""
    best = math.inf
    cmax = math.ceil(R - 1e-9)
    for c1 in range(1, cmax + 1):
        total = c1 ** -s
        for a in range(1, c1):
            c2 = max(1, math.ceil(R / a - 1e-9))
            total += (a * (a + 1)) ** -s * gap_factor * c2 ** -s
        best = min(best, total)
    return best


@pytest.mark.parametrize("s", [0.6, 0.8, 1.0])
def test_two_position_dp_matches_brute_force(s):
    Z = series_partition(L, s)
    for n in (4, 7):
        R = 2.0**n
        expect = Z ** (n - 1) * threshold_brute_force(R, s, 1.0)
        assert cover_cost_exact(L, K2, n, s).cost == pytest.approx(expect, rel=1e-12)
    target = TargetSpec((0, 3), (1.0, 1.0), 2.0)
    R = 2.0**5
    expect = Z**4 * threshold_brute_force(R, s, Z**2)
    assert cover_cost_exact(L, target, 5, s).cost == pytest.approx(expect, rel=1e-12)


def cover_from_intervals(sys, R, s):
    """Oracle: sum |D|^s over the threshold cover built from exact tail hulls (no free prefix)."""
    best = None
    cmax = math.ceil(R - 1e-9)
    for c1 in range(1, cmax + 1):
        hull = tail_union(sys, [c1])
        total = float(hull.inf_hi - hull.inf_lo) ** s
        for a in range(1, c1):
            c2 = max(1, math.ceil(R / a - 1e-9))
            h = tail_union(sys, [a, c2])
            total += float(h.inf_hi - h.inf_lo) ** s
        best = total if best is None else min(best, total)
    return best


def test_cover_cost_equals_interval_sums():
    # n = 1 with B = 24 puts the first special digit at position 1
    target = TargetSpec((0, 1), (1.0, 1.0), 24.0)
    for s in (0.7, 1.0):
        expect = cover_from_intervals(L, 24.0, s)
        assert cover_cost_exact(L, target, 1, s).cost == pytest.approx(expect, rel=1e-12)
        g = cover_cost_exact(G, target, 1, s)
        assert g.lo <= cover_from_intervals(G, 24.0, s) <= g.hi


def test_cover_validity_membership():
    assert cover_validity(L, k1(2.0), 9, 0.8) == []
    assert cover_validity(L, K2, 9, 0.8) == []
    assert cover_validity(L, TargetSpec((0, 2), (1.0, 1.0), 2.0), 8, 0.75) == []


def test_block_mode_is_a_restriction():
    spec = CoverSpec(n=8, s=0.8, delta=0.25, mode="block")
    exact = cover_cost_exact(L, K2, 8, 0.8).cost
    assert cover_cost_exact(L, K2, 8, 0.8, spec).cost >= exact - 1e-15


def test_cover_caps_and_guards():
    with pytest.raises(SizeCapError):
        cover_cost_exact(L, k1(2.0), 17, 0.8)
    with pytest.raises(SizeCapError):
        cover_cost_exact(L, TargetSpec((0, 1, 2, 3), (1.0,) * 4, 2.0), 4, 0.8)
    with pytest.raises(ValueError):
        cover_cost_exact(L, k1(2.0), 4, 0.5)
    with pytest.raises(ValueError):
        cover_cost_exact(SystemSpec("power", 10, 2.5), k1(2.0), 4, 0.8)
    with pytest.raises(ValueError):
        CoverSpec(n=0, s=0.8)


def test_ceil_root_guard():
    c, tie = ceil_root(2.0**5, 1.0)
    assert int(c) == 32 and bool(tie)
    c, tie = ceil_root(10.0, 2.0)
    assert int(c) == 4 and not bool(tie)


def test_transition_single_position():
    tr = cover_cost_transition(L, k1(2.0), s_grid=np.round(np.arange(0.6, 1.0, 0.02), 10))
    s0 = critical_exponent(L, k1(2.0), 1e-8).s0
    assert abs(tr.crossing - s0) <= 0.03
    assert tr.slope_at(0.99) < 0
    with pytest.raises(ValueError):
        cover_cost_transition(L, k1(2.0), [5, 6], [0.7, 0.8])


# -- Cantor set and measure ------------------------------------------------------------


def test_special_ranges():
    assert special_range(2.0, 6, 1.0) == (65, 128)
    y = 1.5**6
    lo, hi = special_range(1.5, 6, 1.0)
    assert hi - lo + 1 == math.floor(2 * y) - math.floor(y)
    # B^(n b) within rounding of an integer snaps to it
    assert special_range(10.0, 3, 1 / 3) == (11, 20)


def small_measure(**kw):
    spec = CantorSpec(n1=3, stages=1, M=3, tail_free=3, **kw)
    return cantor_measure(L, k1(2.0), spec)


def test_generate_masses_and_membership():
    cm = small_measure()
    nodes = cantor_generate(L, k1(2.0), stage=1, measure=cm)
    assert len(nodes) == 3 * 3 * 8
    assert math.fsum(n.mass for n in nodes) == pytest.approx(1.0, abs=1e-12)
    assert all(0 < n.mass <= 1 for n in nodes)
    assert all(cm.in_E(n.word) for n in nodes)
    stage0 = cantor_generate(L, k1(2.0), stage=0, measure=cm)
    # children of each stage-0 node carry exactly its mass
    for parent in stage0:
        kids = [n.mass for n in nodes if n.word[:2] == parent.word]
        assert math.fsum(kids) == pytest.approx(parent.mass, rel=1e-12)
    with pytest.raises(SizeCapError):
        cantor_generate(L, k1(2.0), stage=1, measure=cm, max_nodes=10)


def test_default_construction_layout():
    cm = cantor_measure(L, k1(2.0), CantorSpec(M=200))
    assert cm.n_seq == (6, 36) and cm.depth == 42
    assert cm.special_positions == [6, 36]
    assert cm.positions[5].role == SPECIAL and (cm.positions[5].dlo, cm.positions[5].dhi) == (65, 128)
    assert cm.conservation_error() <= 1e-12
    words = cm.sample_words(200, seed=3)
    assert all(cm.in_E(w) for w in words)
    bad = words[0].copy()
    bad[5] = 3
    assert not cm.in_E(bad)


def test_filler_positions_for_two_specials():
    cm = cantor_measure(L, TargetSpec((0, 3), (1.0, 1.0), 2.0), CantorSpec(M=50, stages=1, n1=5))
    roles = [p.role for p in cm.positions[:9]]
    assert roles[4] == SPECIAL and roles[5] == roles[6] == FILLER and roles[7] == SPECIAL


def brute_ball_mass(cm, word, r):
    """Oracle: enumerate every leaf with exact endpoints; mass spread uniformly inside a leaf."""
    leaf = cylinder_interval(L, tuple(int(a) for a in word))
    x = (leaf.lo + leaf.hi) / 2
    lo, hi = x - Fraction(r), x + Fraction(r)
    from itertools import product

    total = 0.0
    ranges = [range(p.dlo, p.dhi + 1) for p in cm.positions]
    for w in product(*ranges):
        c = cylinder_interval(L, w)
        overlap = min(c.hi, hi) - max(c.lo, lo)
        if overlap > 0:
            mass = math.prod(p.prob(a) for p, a in zip(cm.positions, w))
            total += mass * float(overlap / c.length)
    return total


def test_ball_mass_matches_enumeration():
    cm = small_measure()
    words = cm.sample_words(4, seed=1)
    for word in words:
        y, loglen, _ = cm.path(word)
        for n in (2, 3, 4, 5):
            log_r = float(loglen[n])
            got = math.exp(cm.log_ball_mass(word, log_r))
            assert got == pytest.approx(brute_ball_mass(cm, word, math.exp(log_r)), rel=1e-9)


def test_local_dimension_sample_shapes():
    cm = cantor_measure(L, k1(2.0), CantorSpec(M=200))
    stats = local_dimension_sample(L, k1(2.0), sample_count=20, measure=cm)
    assert stats.in_E == 20
    assert len(stats.rows) == 20 * (cm.depth - 6 + 1)
    assert {r[4] for r in stats.rows} == {"case2", "case3"}
    assert np.all(np.isfinite(stats.ratios)) and stats.min_ratio > 0
    assert len(stats.grouped_rows) == 20 * 2


def test_gauss_construction_rejected():
    with pytest.raises(ValueError):
        cantor_measure(G, k1(2.0))
