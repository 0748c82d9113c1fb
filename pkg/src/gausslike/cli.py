"""Command-line entry point: ``gausslike <command> [--config FILE] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import csv
import json
import sys as _sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import validation
from .bound_lab.cantor import CantorSpec, cantor_measure, local_dimension_sample, natural_cover_exponent
from .bound_lab.covers import CoverSpec, cover_cost_exact, cover_cost_transition
from .config import RunConfig, load_config, parse_int_range, parse_range
from .dimension import critical_exponent, critical_exponent_sweep
from .errors import ConfigError, GaussLikeError, NumericError, ValidationFailure
from .pressure import (
    _table_bracket,
    partition_pressures,
    pressure_eigenvalue,
    pressure_tail_extrapolate,
    series_pressure,
)
from .weight_program import a_of_s

COMMANDS = ("pressure", "aofs", "dim", "sweep", "coverscan", "cantor", "localdim", "validate")


def _num(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(x) for x in row])


def write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serializable: {type(v)}")


# -- commands ---------------------------------------------------------------------


def cmd_pressure(cfg: RunConfig, out: Path, args) -> None:
    sys = cfg.system()
    method = cfg["pressure.method"]
    s_grid = parse_range(cfg["pressure.s_grid"])
    rows = []
    if method == "partition":
        n = cfg["pressure.n"]
        vals = partition_pressures(sys, n, s_grid)
        for s, v in zip(s_grid, vals):
            lo, hi = _table_bracket(sys, s, sys.M)
            rows.append((s, float(v), min(lo, v), max(hi, v), method, sys.M, n))
    elif method == "eigenvalue":
        for s in s_grid:
            e = pressure_eigenvalue(sys, s, cfg["pressure.grid_size"])
            rows.append((s, e.value, e.lo, e.hi, method, sys.M, ""))
    elif method == "series":
        for s in s_grid:
            v = series_pressure(sys, s)
            rows.append((s, v, v, v, method, "full", ""))
    elif method == "tail":
        for s in s_grid:
            e = pressure_tail_extrapolate(sys, s, cfg["pressure.M_list"], cfg["pressure.grid_size"])
            rows.append((s, e.value, e.lo, e.hi, method, e.M, ""))
    else:
        raise ConfigError(f"pressure.method must be partition|eigenvalue|series|tail, got {method!r}")
    write_csv(out / "pressure.csv", ["s", "P", "lo", "hi", "method", "M", "n"], rows)


def cmd_aofs(cfg: RunConfig, out: Path, args) -> None:
    sys, target = cfg.system(), cfg.target()
    rows = []
    for s in parse_range(cfg["aofs.s_grid"]):
        value, point = a_of_s(target, s, sys.d)
        rows.append((s, value, *point.b))
    write_csv(out / "aofs.csv", ["s", "A"] + [f"b{j + 1}" for j in range(target.k)], rows)


def _dim_kwargs(cfg: RunConfig) -> dict:
    kw = {"n": cfg["dim.n"]}
    if cfg["dim.method"]:
        kw["method"] = cfg["dim.method"]
    return kw


DIM_HEADER = ["B", "s0", "lo", "hi", "M", "method", "flags"]


def cmd_dim(cfg: RunConfig, out: Path, args) -> None:
    if getattr(args, "sweep", None):
        return cmd_sweep(cfg, out, args)
    sys, target = cfg.system(), cfg.target()
    res = critical_exponent(sys, target, cfg["dim.tol"], **_dim_kwargs(cfg))
    payload = asdict(res)
    payload["flags"] = list(res.flags)
    payload["system"] = {"kind": sys.kind, "M": sys.M, "d": sys.d}
    payload["target"] = {"positions": list(target.positions), "weights": list(target.weights), "B": target.B}
    write_json(out / "dim.json", payload)
    r = res.row()
    write_csv(out / "dim.csv", DIM_HEADER, [[r[h] for h in DIM_HEADER]])


def cmd_sweep(cfg: RunConfig, out: Path, args) -> None:
    sys, target = cfg.system(), cfg.target()
    spec = getattr(args, "sweep", None) or cfg["dim.sweep"]
    B_grid = parse_range(spec, log=True)
    results = critical_exponent_sweep(sys, target, B_grid, cfg["dim.tol"], **_dim_kwargs(cfg))
    write_csv(out / "sweep.csv", DIM_HEADER, [[r.row()[h] for h in DIM_HEADER] for r in results])


def cmd_coverscan(cfg: RunConfig, out: Path, args) -> None:
    sys, target = cfg.system(), cfg.target()
    n_range = parse_int_range(cfg["coverscan.n_range"]) if cfg["coverscan.n_range"] else None
    s_grid = parse_range(cfg["coverscan.s_grid"])
    spec = CoverSpec(n=1, s=1.0, delta=cfg["coverscan.delta"], mode=cfg["coverscan.mode"])
    tr = cover_cost_transition(sys, target, n_range, s_grid, spec)
    rows = []
    for s in tr.s_grid:
        for n in tr.n_values:
            c = cover_cost_exact(sys, target, n, s, spec)
            rows.append((n, s, c.cost, c.lo, c.hi))
    write_csv(out / "cover_costs.csv", ["n", "s", "cost", "lo", "hi"], rows)
    write_json(out / "transition.json", {
        "crossing": tr.crossing, "half_width": tr.half_width, "n_values": tr.n_values,
        "s_grid": tr.s_grid, "slopes": tr.slopes, "slope_errors": tr.slope_errors,
    })


def _cantor_spec(cfg: RunConfig) -> CantorSpec:
    return CantorSpec(n1=cfg["cantor.n1"], stages=cfg["cantor.stages"], M=cfg["cantor.M"],
                      tail_free=cfg["cantor.tail_free"])


def cmd_cantor(cfg: RunConfig, out: Path, args) -> None:
    sys, target = cfg.system(), cfg.target()
    cm = cantor_measure(sys, target, _cantor_spec(cfg))
    nat, roots = natural_cover_exponent(cm)
    write_csv(out / "cantor_positions.csv", ["position", "role", "dlo", "dhi"],
              [(p + 1, pos.role, pos.dlo, pos.dhi) for p, pos in enumerate(cm.positions)])
    write_json(out / "cantor.json", {
        "s": cm.s, "b": list(cm.b), "n_seq": list(cm.n_seq), "depth": cm.depth,
        "special_positions": cm.special_positions, "mass_conservation_error": cm.conservation_error(),
        "natural_cover_exponent": nat, "cover_roots": [[k, v] for k, v in roots],
    })


def cmd_localdim(cfg: RunConfig, out: Path, args) -> None:
    sys, target = cfg.system(), cfg.target()
    cm = cantor_measure(sys, target, _cantor_spec(cfg))
    stats = local_dimension_sample(sys, target, sample_count=cfg["cantor.samples"], seed=cfg["run.seed"], measure=cm)
    rows = [(x, float(np.exp(lr)), ratio, case, lr) for _, x, lr, ratio, case in stats.rows]
    write_csv(out / "localdim.csv", ["x", "r", "ratio", "case", "log_r"], rows)
    write_json(out / "localdim.json", {
        "s0": stats.s0, "samples": stats.samples, "leaves_in_E": stats.in_E,
        "min_ratio": stats.min_ratio, "mean_ratio": stats.mean_ratio, "hull_min_ratio": stats.grouped_min,
    })


def cmd_validate(cfg: RunConfig, out: Path, args) -> None:
    results = validation.run_all(quick=not args.full)
    validation.write_report(results, out)
    for r in results:
        print(r.line())
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        raise ValidationFailure(f"criteria failed: {failed}")


HANDLERS = {
    "pressure": cmd_pressure, "aofs": cmd_aofs, "dim": cmd_dim, "sweep": cmd_sweep,
    "coverscan": cmd_coverscan, "cantor": cmd_cantor, "localdim": cmd_localdim, "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gausslike", description="Pressure, critical exponents and covers for Gauss-like systems.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI-style run configuration")
        sp.add_argument("--out", help="output directory (overrides run.output)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--seed", type=int, help="sampler seed (overrides run.seed)")
        if name in ("dim", "sweep"):
            sp.add_argument("--tol", type=float)
            sp.add_argument("--B", type=float)
            sp.add_argument("--sweep", help="B grid start:end:count, log-spaced")
        if name == "validate":
            sp.add_argument("--full", action="store_true", help="acceptance-scale parameters")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = item.split("=", 1)
            cfg.set(key.strip(), value.strip())
        if args.seed is not None:
            cfg.values["run.seed"] = args.seed
        if getattr(args, "tol", None) is not None:
            cfg.values["dim.tol"] = args.tol
        if getattr(args, "B", None) is not None:
            cfg.values["target.B"] = args.B
        cfg.system()
        cfg.target()
        out = Path(args.out or cfg["run.output"])
        HANDLERS[args.command](cfg, out, args)
    except GaussLikeError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return exc.exit_code
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return ConfigError.exit_code
    except ArithmeticError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return NumericError.exit_code
    return 0


def main() -> None:
    _sys.exit(run())


if __name__ == "__main__":
    main()
