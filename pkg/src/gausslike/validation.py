"""Acceptance checks shared by the test suite and the ``validate`` command.

Each check returns a :class:`CheckResult` with the measured quantities, so a
report can be written without timings or other run-dependent data.  The
``quick`` profile shrinks sample counts and levels for the CLI; the full
profile uses the acceptance parameters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .bound_lab.cantor import CantorSpec, cantor_measure, local_dimension_sample, natural_cover_exponent
from .bound_lab.covers import cover_cost_transition
from .dimension import critical_exponent, critical_exponent_sweep
from .ifs_core import SystemSpec
from .pressure import (
    partition_pressures,
    pressure_eigenvalue,
    pressure_properties_check,
    pressure_tail_extrapolate,
    series_pressure,
)
from .weight_program import TargetSpec, a_of_s, a_of_s_grid_oracle


@dataclass
class CheckResult:
    criterion: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = [f"{k}={_fmt(v)}" for k, v in self.metrics.items()]
        return f"criterion {self.criterion} [{status}] {self.name}: " + ", ".join(parts)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return "[" + " ".join(_fmt(x) for x in v) + "]"
    return str(v)


def golden() -> dict:
    return json.loads(resources.files("gausslike").joinpath("data/golden.json").read_text())


def k1(B: float, t: float = 1.0) -> TargetSpec:
    return TargetSpec((0,), (t,), B)


# -- criteria ------------------------------------------------------------------------


def check_normalization(quick: bool = False) -> CheckResult:
    M = 200
    est = pressure_tail_extrapolate(SystemSpec("gauss", M), 1.0, [50, 100, M])
    lue = series_pressure(SystemSpec("lueroth", M), 1.0)
    width = est.hi - est.lo
    ok = est.lo <= 0.0 <= est.hi and width <= 2 / (M + 1) and abs(lue) <= 1e-9
    return CheckResult(1, "pressure normalization P(1)=0", ok,
                       {"gauss_lo": est.lo, "gauss_hi": est.hi, "width": width,
                        "width_limit": 2 / (M + 1), "lueroth_P1": lue})


def check_shape(quick: bool = False) -> CheckResult:
    grid = np.linspace(0.55, 1.3, 50)
    g = pressure_properties_check(SystemSpec("gauss", 30), grid, n=3, method="partition")
    lue = pressure_properties_check(SystemSpec("lueroth", 30), grid, method="series")
    counts = {
        "gauss_decreasing_violations": len(g.decreasing),
        "gauss_convexity_violations": len(g.convexity),
        "lueroth_decreasing_violations": len(lue.decreasing),
        "lueroth_convexity_violations": len(lue.convexity),
    }
    return CheckResult(2, "pressure strictly decreasing and convex", not any(counts.values()), counts)


def check_backends(quick: bool = False) -> CheckResult:
    n = 4 if quick else 6
    s_vals = [0.6, 0.8, 1.0]
    g = SystemSpec("gauss", 30)
    part = partition_pressures(g, n, s_vals)
    eig = [pressure_eigenvalue(g, s).value for s in s_vals]
    gdiff = [abs(float(a) - b) for a, b in zip(part, eig)]
    lsys = SystemSpec("lueroth", 30)
    lpart = partition_pressures(lsys, n, s_vals)
    leig = [pressure_eigenvalue(lsys, s).value for s in s_vals]
    ldiff = [abs(float(a) - b) for a, b in zip(lpart, leig)]
    ok = max(gdiff) <= 0.05 and max(ldiff) <= 1e-12
    return CheckResult(3, f"eigenvalue vs partition (n={n})", ok,
                       {"gauss_max_diff": max(gdiff), "lueroth_max_diff": max(ldiff)})


def random_instances(count: int, seed: int = 0) -> list:
    """(target, s, d) instances with k <= 4, d in [1.5, 3], s in [0.4, 1]."""
    rng = np.random.Generator(np.random.Philox(seed))
    out = []
    for _ in range(count):
        k = int(rng.integers(1, 5))
        weights = tuple(float(x) for x in np.round(rng.uniform(0.5, 2.0, k), 6))
        target = TargetSpec(tuple(range(0, 2 * k, 2)), weights, 2.0)
        out.append((target, float(rng.uniform(0.4, 1.0)), float(rng.uniform(1.5, 3.0))))
    return out


def check_exponent_functional(quick: bool = False) -> CheckResult:
    step = 1e-3 if quick else 1e-4
    worst = 0.0
    for target, s, d in random_instances(50):
        lp = a_of_s(target, s, d)[0]
        grid = a_of_s_grid_oracle(target, s, d, step, zoom=True)
        worst = max(worst, abs(grid - lp))
    sq = max(abs(a_of_s(TargetSpec((0, 1), (1, 1), 2.0), s, 2.0)[0] - s * s) for s in np.linspace(0.4, 1.0, 13))
    ok = worst <= 1e-3 and sq <= 1e-9
    return CheckResult(4, f"A(s) LP vs lattice oracle (step={step:g})", ok,
                       {"max_lp_grid_diff": worst, "max_s_squared_error": sq})


def check_B_limits(quick: bool = False) -> CheckResult:
    g = SystemSpec("gauss", 200)
    hi_B = critical_exponent(g, k1(1e8), 1e-8)
    lo_B = critical_exponent(g, k1(1 + 1e-4), 1e-8)
    sweep = critical_exponent_sweep(g, k1(2.0), [2.0, 4.0, 8.0, 16.0], 1e-8)
    s = [r.s0 for r in sweep]
    dec = all(b < a for a, b in zip(s, s[1:]))
    ok = abs(hi_B.s0 - 0.5) <= 0.05 and abs(lo_B.s0 - 1) <= 0.05 and dec
    return CheckResult(5, "B-limits of s0 (gauss, k=1)", ok,
                       {"s0_B1e8": hi_B.s0, "s0_B1p1e-4": lo_B.s0, "sweep": s, "strictly_decreasing": dec})


def check_k1_reduction(quick: bool = False) -> CheckResult:
    res = critical_exponent(SystemSpec("lueroth", 200), k1(math.e), 1e-10)
    ref = golden()["lueroth_k1_B_e_s0"]
    return CheckResult(6, "k=1 reduction vs series-root oracle", abs(res.s0 - ref) <= 1e-8,
                       {"s0": res.s0, "oracle": ref, "diff": abs(res.s0 - ref)})


def check_transition(quick: bool = False) -> CheckResult:
    sys = SystemSpec("lueroth", 200)
    metrics, ok = {}, True
    for k in (1, 2):
        for B in (1.5, 2.0):
            target = TargetSpec(tuple(range(k)), (1.0,) * k, B)
            s0 = critical_exponent(sys, target, 1e-8).s0
            grid = np.round(np.arange(0.55, 1.0 + 1e-9, 0.02 if quick else 0.01), 10)
            tr = cover_cost_transition(sys, target, s_grid=grid)
            above, below = tr.slope_at(s0 + 0.05), tr.slope_at(s0 - 0.05)
            tag = f"k{k}_B{B:g}"
            metrics[f"{tag}_crossing_error"] = abs(tr.crossing - s0)
            metrics[f"{tag}_slope_above"] = above
            metrics[f"{tag}_slope_below"] = below
            ok &= abs(tr.crossing - s0) <= 0.03 and above < 0 < below
    return CheckResult(7, "cover-cost transition at s0 (lueroth)", ok, metrics)


def check_cantor(quick: bool = False, seed: int = 0) -> CheckResult:
    sys = SystemSpec("lueroth", 200)
    target = k1(2.0)
    cm = cantor_measure(sys, target, CantorSpec(n1=6, stages=2))
    samples = 200 if quick else 1000
    stats = local_dimension_sample(sys, target, sample_count=samples, seed=seed, measure=cm)
    nat, _ = natural_cover_exponent(cm)
    cons = cm.conservation_error()
    metrics = {
        "s0": cm.s,
        "mass_conservation_error": cons,
        "leaves_in_E": stats.in_E,
        "samples": samples,
        "min_ratio": stats.min_ratio,
        "ratio_floor": cm.s - 0.1,
        "mean_ratio": stats.mean_ratio,
        "hull_min_ratio": stats.grouped_min,
        "natural_cover_exponent": nat,
    }
    ok = (cons <= 1e-12 and stats.in_E == samples and stats.min_ratio >= cm.s - 0.1
          and abs(nat - cm.s) <= 0.05)
    return CheckResult(8, "Cantor subset and mass distribution (lueroth, k=1, B=2)", ok, metrics)


CHECKS = (check_normalization, check_shape, check_backends, check_exponent_functional,
          check_B_limits, check_k1_reduction, check_transition, check_cantor)


def run_all(quick: bool = True) -> list[CheckResult]:
    return [check(quick) for check in CHECKS]


def write_report(results: list[CheckResult], out_dir) -> None:
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = [r.line() for r in results]
    passed = sum(r.passed for r in results)
    lines.append(f"summary: {passed}/{len(results)} passed")
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    payload = [{"criterion": r.criterion, "name": r.name, "passed": bool(r.passed),
                "metrics": {k: _jsonable(v) for k, v in r.metrics.items()}} for r in results]
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v
