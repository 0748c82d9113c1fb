import json
import math
from importlib import resources

import numpy as np
import pytest

from gausslike.dimension import (
    CLAMPED_LOW,
    _check_monotone,
    convergence_diagnostics,
    critical_exponent,
    critical_exponent_sweep,
)
from gausslike.errors import ConsistencyError
from gausslike.ifs_core import SystemSpec
from gausslike.pressure import series_pressure
from gausslike.weight_program import TargetSpec

GOLDEN = json.loads(resources.files("gausslike").joinpath("data/golden.json").read_text())
L = SystemSpec("lueroth", 200)
G = SystemSpec("gauss", 200)


def k1(B, t=1.0):
    return TargetSpec((0,), (t,), B)


def check_invariants(res, sys, tol):
    assert 1 / sys.d <= res.lo <= res.s0 <= res.hi <= 1
    assert res.width <= tol


def test_lueroth_k1_golden():
    res = critical_exponent(L, k1(math.e), 1e-10)
    assert res.s0 == pytest.approx(GOLDEN["lueroth_k1_B_e_s0"], abs=1e-8)
    assert res.method == "series" and not res.flags
    check_invariants(res, L, 1e-10)


def test_k1_reduction_with_non_unit_weight():
    mp = pytest.importorskip("mpmath")
    from test_pressure import hurwitz_series

    mp.mp.dps = 30
    B, t = 3.0, 2.0
    ref = mp.findroot(lambda s: mp.log(hurwitz_series(mp, s)) - s / t * mp.log(B), 0.8)
    assert critical_exponent(L, k1(B, t), 1e-10).s0 == pytest.approx(float(ref), abs=1e-8)


def test_k2_root_solves_quadratic_equation():
    res = critical_exponent(L, TargetSpec((0, 1), (1.0, 1.0), 2.0), 1e-10)
    assert res.s0 == pytest.approx(GOLDEN["lueroth_k2_t11_B2_s0"], abs=1e-8)
    assert series_pressure(L, res.s0) == pytest.approx(res.s0**2 * math.log(2.0), abs=1e-8)


def test_sweep_matches_golden_and_decreases():
    results = critical_exponent_sweep(L, k1(2.0), [2.0, 4.0, 8.0], 1e-10)
    s = [r.s0 for r in results]
    assert all(b < a for a, b in zip(s, s[1:]))
    for B, r in zip((2, 4, 8), results):
        assert r.s0 == pytest.approx(GOLDEN["lueroth_k1_B_sweep"][str(B)], abs=1e-8)
    assert len(critical_exponent_sweep(L, k1(2.0), [3.0])) == 1
    with pytest.raises(ValueError):
        critical_exponent_sweep(L, k1(2.0), [4.0, 2.0])
    with pytest.raises(ValueError):
        critical_exponent_sweep(L, k1(2.0), [1.0, 2.0])


def test_gauss_B_limits():
    hi = critical_exponent(G, k1(1e8), 1e-8)
    assert abs(hi.s0 - 0.5) <= 0.05 and hi.flags == (CLAMPED_LOW,)
    lo = critical_exponent(G, k1(1 + 1e-4), 1e-8)
    assert abs(lo.s0 - 1) <= 0.05 and not lo.flags
    check_invariants(lo, G, 1e-8)


def test_partition_backend_matches_eigenvalue_for_lueroth():
    sys = SystemSpec("lueroth", 30)
    a = critical_exponent(sys, k1(2.0), 1e-9, "partition", n=2)
    b = critical_exponent(sys, k1(2.0), 1e-9, "eigenvalue")
    assert abs(a.s0 - b.s0) <= 2e-9


def test_truncated_root_below_full_root():
    full = critical_exponent(L, k1(2.0), 1e-10).s0
    trunc = critical_exponent(SystemSpec("lueroth", 50), k1(2.0), 1e-10, "eigenvalue").s0
    assert trunc < full


def test_extrapolated_bracket_contains_larger_truncation():
    res = critical_exponent(SystemSpec("gauss", 100), k1(2.0), 1e-8, extrapolate=True)
    lo, hi = res.full_bracket
    assert lo <= critical_exponent(G, k1(2.0), 1e-8).s0 <= hi


def test_convergence_diagnostics_lueroth():
    table = convergence_diagnostics(L, k1(2.0), [10, 40, 160], [1, 2, 3], partition_M=20)
    s_M = [r[1] for r in table.M_rows]
    assert all(b > a for a, b in zip(s_M, s_M[1:]))
    s_n = [r[1] for r in table.n_rows]
    assert max(s_n) - min(s_n) <= 1e-7
    assert table.n_rows[-1][2] == 0.0


def test_convergence_diagnostics_gauss_differences_shrink():
    table = convergence_diagnostics(G, k1(2.0), [25, 50, 100], [], grid_size=256)
    assert table.M_differences_shrink
    with pytest.raises(ValueError):
        convergence_diagnostics(G, k1(2.0), [50, 25], [])


def test_monotonicity_guard():
    with pytest.raises(ConsistencyError):
        _check_monotone([(0.6, 1.0), (0.7, 2.0)], 1e-9)
    _check_monotone([(0.6, 1.0), (0.7, 0.5)], 1e-9)


def test_parameter_validation():
    with pytest.raises(ValueError):
        critical_exponent(L, k1(2.0), 1e-12)
    with pytest.raises(ValueError):
        critical_exponent(G, k1(2.0), 1e-6, "series")
    with pytest.raises(ValueError):
        critical_exponent(L, k1(2.0), 1e-6, "newton")
