from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gausslike.errors import SizeCapError
from gausslike.weight_program import (
    SimplexPoint,
    TargetSpec,
    a_component,
    a_of_b,
    a_of_s,
    a_of_s_grid_oracle,
)


def T(weights, B=2.0):
    return TargetSpec(tuple(range(len(weights))), tuple(weights), B)


def test_component_examples():
    assert a_component((0.0, 1.0), 0.8, 2, 2.0) == pytest.approx(0.8)
    assert a_component((1.0,), 0.7, 1, 2.5) == pytest.approx(1.5 * 0.7)
    b = (1 / 3, 1 / 3, 1 / 3)
    assert a_component(b, 0.9, 3, 2.0) == pytest.approx(0.9 / 3 + 0.8 * 2 / 3)
    with pytest.raises(IndexError):
        a_component((1.0,), 0.5, 2, 2.0)


def test_a_of_b_examples():
    assert a_of_b((1.0, 0.0), 0.8, 2.0) == pytest.approx(0.8)
    assert a_of_b(SimplexPoint((0.5,), (2.0,)), 0.6, 2.0) == pytest.approx(0.3)


def test_a_of_s_examples():
    value, b = a_of_s(T([2.0]), 0.6, 2.0)
    assert value == pytest.approx(0.3, abs=1e-12) and b.b == pytest.approx((0.5,))
    value, b = a_of_s(T([1.0, 1.0]), 0.8, 2.0)
    assert value == pytest.approx(0.64, abs=1e-10)
    assert b.b == pytest.approx((0.8, 0.2), abs=1e-10)
    assert a_of_s(T([1.0, 1.0]), 0.5, 2.0)[0] == pytest.approx(0.25, abs=1e-10)


def test_exact_rational_pivoting():
    value, b = a_of_s(T([1.0, 1.0]), 0.75, 2.0, exact=True)
    assert value == Fraction(9, 16)
    assert b.b == (Fraction(3, 4), Fraction(1, 4))


def random_target(rng, k):
    return T(list(np.round(rng.uniform(0.5, 2.0, k), 4)))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_float_and_exact_solvers_agree(k):
    rng = np.random.default_rng(k)
    for _ in range(5):
        target = random_target(rng, k)
        s, d = float(rng.uniform(0.4, 1.0)), float(rng.uniform(1.5, 3.0))
        exact = float(a_of_s(target, s, d, exact=True)[0])
        assert a_of_s(target, s, d)[0] == pytest.approx(exact, abs=1e-11)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.3, 3.0), min_size=1, max_size=4), st.floats(0.05, 1.5), st.floats(1.2, 3.0),
       st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
def test_min_property_and_positivity(weights, s, d, raw):
    target = T(weights)
    value, point = a_of_s(target, s, d)
    assert value > 0
    t = np.array(target.weights)
    u = np.array(raw[: len(t)]) + 1e-3
    b = u / (u @ t)  # random point of the simplex
    assert value <= a_of_b(tuple(b), s, d) + 1e-10
    assert abs(sum(x * y for x, y in zip(point.b, point.t)) - 1) <= 1e-12


def test_monotone_in_s():
    for weights in ([1.0], [1.0, 1.0], [0.7, 1.3, 2.0], [1.0, 0.5, 1.5, 0.8]):
        vals = [a_of_s(T(weights), s, 2.2)[0] for s in np.linspace(0.1, 1.2, 23)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_scaling_consistency():
    base = [0.7, 1.3, 2.0]
    for c in (0.5, 2.0, 4.0):
        v1 = a_of_s(T(base), 0.8, 2.0, exact=True)[0]
        v2 = a_of_s(T([c * x for x in base]), 0.8, 2.0, exact=True)[0]
        assert v2 == v1 / Fraction(c)
        f1 = a_of_s(T(base), 0.8, 2.0)[0]
        f2 = a_of_s(T([c * x for x in base]), 0.8, 2.0)[0]
        assert f2 == pytest.approx(f1 / c, rel=1e-12)


def test_grid_oracle_k1_exact():
    target = T([1.7])
    assert a_of_s_grid_oracle(target, 0.6, 2.0, 0.01) == pytest.approx(a_of_s(target, 0.6, 2.0)[0], abs=1e-15)


@pytest.mark.parametrize("weights", [[1.0, 1.0], [0.6, 1.9], [1.0, 2.0, 0.5]])
def test_grid_oracle_sandwich_and_convergence(weights):
    target = T(weights)
    s, d = 0.7, 2.0
    lp = a_of_s(target, s, d)[0]
    slope = max(abs((d - 1) * s), abs(d * s - 1)) / min(weights) * len(weights)
    errs = []
    for step in (1e-2, 5e-3, 2.5e-3):
        g = a_of_s_grid_oracle(target, s, d, step)
        assert g >= lp - 1e-12
        assert g - lp <= step * slope
        errs.append(g - lp)
    assert errs[-1] <= errs[0] + 1e-15


def test_grid_oracle_size_cap_and_zoom():
    target = T([1.0, 2.0, 0.5, 1.5])
    with pytest.raises(SizeCapError):
        a_of_s_grid_oracle(target, 0.7, 2.0, 1e-4)
    z = a_of_s_grid_oracle(target, 0.7, 2.0, 1e-4, zoom=True)
    assert abs(z - a_of_s(target, 0.7, 2.0)[0]) <= 1e-3
    with pytest.raises(ValueError):
        a_of_s_grid_oracle(target, 0.7, 2.0, 0.5)
    with pytest.raises(ValueError):
        a_of_s_grid_oracle(T([1.0] * 5), 0.7, 2.0, 0.1)


def test_target_validation():
    with pytest.raises(ValueError):
        TargetSpec((1, 1), (1.0, 1.0), 2.0)
    with pytest.raises(ValueError):
        TargetSpec((0,), (0.0,), 2.0)
    with pytest.raises(ValueError):
        TargetSpec((0,), (1.0,), 1.0)
    with pytest.raises(ValueError):
        TargetSpec((-1,), (1.0,), 2.0)
    with pytest.raises(SizeCapError):
        TargetSpec(tuple(range(17)), (1.0,) * 17, 2.0)
    with pytest.raises(ValueError):
        SimplexPoint((0.5, 0.4), (1.0, 1.0))
