"""Run configuration: INI-style sections flattened to dotted keys.

    [system]
    kind = lueroth
    M = 200

    [target]
    positions = 0
    weights = 1
    B = 2.718281828459045

gives keys ``system.kind``, ``system.M``, ``target.B`` ...  Unknown sections
or keys are rejected with the offending line number.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .ifs_core import SystemSpec
from .weight_program import TargetSpec


def _float_list(text: str) -> tuple:
    return tuple(float(x) for x in re.split(r"[,\s]+", text.strip()) if x)


def _int_list(text: str) -> tuple:
    return tuple(int(x) for x in re.split(r"[,\s]+", text.strip()) if x)


def parse_range(text: str, log: bool = False) -> list[float]:
    """'a:b:n' -> n points from a to b (geometric when log=True); otherwise a list."""
    import numpy as np

    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must look like start:end:count")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ValueError("range count must be positive")
        pts = np.geomspace(a, b, n) if log else np.linspace(a, b, n)
        return [float(x) for x in np.round(pts, 12)]
    return list(_float_list(text))


def parse_int_range(text: str) -> list[int]:
    """'a:b' -> a..b inclusive; otherwise a list."""
    if ":" in text:
        a, b = text.split(":")
        return list(range(int(a), int(b) + 1))
    return list(_int_list(text))


# key -> (parser, default); None default means "required when used"
SCHEMA = {
    "system.kind": (str, "lueroth"),
    "system.d": (float, 2.0),
    "system.M": (int, 200),
    "target.positions": (_int_list, (0,)),
    "target.weights": (_float_list, (1.0,)),
    "target.B": (float, 2.0),
    "pressure.method": (str, "eigenvalue"),
    "pressure.grid_size": (int, 512),
    "pressure.n": (int, 3),
    "pressure.M_list": (_int_list, (50, 100, 200)),
    "pressure.s_grid": (str, "0.55:1.3:16"),
    "aofs.s_grid": (str, "0.4:1:13"),
    "dim.tol": (float, 1e-8),
    "dim.method": (str, ""),
    "dim.n": (int, 3),
    "dim.sweep": (str, "2:16:4"),
    "coverscan.n_range": (str, ""),
    "coverscan.s_grid": (str, "0.55:0.99:45"),
    "coverscan.mode": (str, "exact"),
    "coverscan.delta": (float, 1.0),
    "cantor.n1": (int, 6),
    "cantor.stages": (int, 2),
    "cantor.M": (int, 10**4),
    "cantor.tail_free": (int, 6),
    "cantor.samples": (int, 1000),
    "run.output": (str, "out"),
    "run.seed": (int, 0),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def __getitem__(self, key: str):
        if key in self.values:
            return self.values[key]
        return SCHEMA[key][1]

    def system(self) -> SystemSpec:
        try:
            return SystemSpec(self["system.kind"], self["system.M"], self["system.d"])
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [system] {exc}") from exc

    def target(self) -> TargetSpec:
        try:
            return TargetSpec(self["target.positions"], self["target.weights"], self["target.B"])
        except ValueError as exc:
            raise ConfigError(f"{self.source}: [target] {exc}") from exc

    def set(self, key: str, raw: str, where: str = "override") -> None:
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key '{key}'")
        parser = SCHEMA[key][0]
        try:
            self.values[key] = parser(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for '{key}': {raw!r} ({exc})") from exc


def _line_of(text: str, section: str, key: str) -> int:
    current = None
    for no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return no
    return 0


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (B, M)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    cfg = RunConfig(source=source)
    for section in cp.sections():
        for key, raw in cp.items(section):
            line = _line_of(text, section, key)
            cfg.set(f"{section}.{key}", raw, f"{source}:{line}")
    # validate the core blocks eagerly so errors surface before any work
    cfg.system()
    cfg.target()
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))
