"""Experiment configuration: an INI file with one section per concern.

Example (every key shown; only the sections a command uses are required)::

    [grid]
    dimension = 1           # 1, 2 or 3
    half_width = 16         # box [-L, L)^N
    points = 256            # even, >= 16

    [drift]
    matrix = 1              # rows separated by ';', entries by ','  e.g. 1, 0; 0, -2

    [time]
    theta = 1
    k = 20                  # samples t_i = i theta / k

    [initial]
    kind = gaussian         # gaussian | mixture | file
    center = 0              # gaussian: center (comma-separated coordinates)
    width = 1               # gaussian: profile exp(-|x-c|^2/(4 width))
    amplitude = 1
    # centers = -1; 1.5     # mixture: points separated by ';'
    # widths = 0.7, 1.0
    # amplitudes = 1, -0.6
    # file = u0.ougs        # file: an OUGS1 state

    [observation]
    set =                   # thick-set directives, one per indented line
        periodic 1
        box 0 0.5
        thickness 0.5 1

    [thickness]
    window = -8, 8          # lo, hi per axis
    resolution = 64

    [convexity]
    ensemble = 20           # mixtures of shifted Gaussians
    route = direct          # direct | factorized
    n_times = 256
    n_directions = 64

    [observability]
    ensemble = 12

    [admissible]
    R = 10
    epsilon = 0.5

    [stability]
    p = 1.5
    s = 0.2

    [reconstruct]
    alpha = 1e-10
    iters = 200

    [noise]
    levels = 0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1
    reps = 5

    [run]
    seed = 0
    output = out

Inline comments start with '#' preceded by whitespace (';' separates rows).  Every
problem is reported as ``file:line: [section] key: message``.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .field import GridSpec
from .geometry import ThickSet, parse_thickset
from .inverse.types import AdmissibleClass, StabilityParams
from .linops import DriftMatrix

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(InvalidInputError):
    """A configuration problem, located by line, section and key."""

    def __init__(self, message, source="<config>", line=None, section=None, key=None):
        where = f"{source}:{line}" if line else source
        what = f"[{section}] {key}: " if key else (f"[{section}]: " if section else "")
        super().__init__(f"{where}: {what}{message}")
        self.line, self.section, self.key = line, section, key


_KNOWN = {
    "grid": {"dimension", "half_width", "points"},
    "drift": {"matrix"},
    "time": {"theta", "k"},
    "initial": {"kind", "center", "width", "amplitude", "centers", "widths", "amplitudes", "file"},
    "observation": {"set"},
    "thickness": {"window", "resolution"},
    "convexity": {"ensemble", "route", "n_times", "n_directions"},
    "observability": {"ensemble"},
    "admissible": {"r", "epsilon"},
    "stability": {"p", "s"},
    "reconstruct": {"alpha", "iters"},
    "noise": {"levels", "reps"},
    "run": {"seed", "output"},
}


@dataclass
class ExperimentConfig:
    source: str
    base_dir: Path
    grid: Optional[GridSpec] = None
    drift: Optional[DriftMatrix] = None
    theta: Optional[float] = None
    k: int = 20
    initial: Dict[str, object] = field(default_factory=dict)
    omega: Optional[ThickSet] = None
    window: Optional[List[Tuple[float, float]]] = None
    resolution: int = 64
    convexity: Dict[str, object] = field(default_factory=lambda: {
        "ensemble": 20, "route": "direct", "n_times": 256, "n_directions": 64})
    observability_ensemble: int = 12
    admissible: Optional[AdmissibleClass] = None
    stability: Optional[StabilityParams] = None
    alpha: float = 1e-10
    iters: int = 200
    noise_levels: Optional[List[float]] = None
    reps: int = 5
    seed: int = 0
    output: Optional[Path] = None
    _lines: Dict[Tuple[str, str], int] = field(default_factory=dict, repr=False)

    def require(self, *names: str) -> None:
        """Raise ConfigError if any of the named settings was not given."""
        labels = {"grid": "[grid]", "drift": "[drift] matrix", "theta": "[time] theta",
                  "omega": "[observation] set", "window": "[thickness] window",
                  "noise_levels": "[noise] levels", "admissible": "[admissible] R"}
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"missing {labels.get(name, name)}", self.source)
        if "drift" in names and "grid" in names and self.drift.n != self.grid.n:
            raise ConfigError(f"drift is {self.drift.n}x{self.drift.n} but the grid is {self.grid.n}-D",
                              self.source, self._lines.get(("drift", "matrix")), "drift", "matrix")


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", raw)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([A-Za-z_][\w]*)\s*[=:]", raw)
        if m and section is not None:
            lines.setdefault((section, m.group(1).lower()), i)
    return lines


class _Reader:
    def __init__(self, parser, lines, source):
        self.parser, self.lines, self.source = parser, lines, source

    def fail(self, section, key, message):
        raise ConfigError(message, self.source, self.lines.get((section, key)), section, key)

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key):
        return self.parser.get(section, key).strip()

    def number(self, section, key, kind=float, default=None, check=None, rule=""):
        if not self.has(section, key):
            if default is None:
                self.fail(section, key, "missing required value")
            return default
        text = self.raw(section, key)
        try:
            value = kind(text)
        except ValueError:
            self.fail(section, key, f"expected {'an integer' if kind is int else 'a number'}, got {text!r}")
        if kind is float and not np.isfinite(value):
            self.fail(section, key, f"must be finite, got {text!r}")
        if check is not None and not check(value):
            self.fail(section, key, f"{rule}, got {text!r}")
        return value

    def vector(self, section, key, sep=","):
        text = self.raw(section, key)
        try:
            vals = [float(v) for v in text.replace("\n", " ").split(sep) if v.strip()]
        except ValueError:
            self.fail(section, key, f"expected numbers separated by {sep!r}, got {text!r}")
        if not vals or not all(np.isfinite(vals)):
            self.fail(section, key, f"expected finite numbers, got {text!r}")
        return vals

    def points(self, section, key, what="points 'x, y; x, y'"):
        text = self.raw(section, key)
        out = []
        for chunk in text.split(";"):
            try:
                out.append([float(v) for v in chunk.split(",")])
            except ValueError:
                self.fail(section, key, f"expected {what}, got {text!r}")
        return out


def parse_config(text: str, source: str = "<config>", base_dir=None) -> ExperimentConfig:
    # ';' separates matrix rows and points, so only '#' may start an inline comment
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], source, line) from None
    lines = _key_lines(text)
    rd = _Reader(parser, lines, source)
    for section in parser.sections():
        known = _KNOWN.get(section.lower())
        if known is None:
            raise ConfigError(f"unknown section [{section}]", source, None, section)
        for key in parser.options(section):
            if key not in known:
                rd.fail(section, key, f"unknown key (expected one of {', '.join(sorted(known))})")

    cfg = ExperimentConfig(source, Path(base_dir) if base_dir is not None else Path("."))
    cfg._lines = lines

    if parser.has_section("grid"):
        n = rd.number("grid", "dimension", int, check=lambda v: 1 <= v <= 3, rule="must be 1, 2 or 3")
        L = rd.number("grid", "half_width", check=lambda v: v > 0, rule="must be positive")
        M = rd.number("grid", "points", int, check=lambda v: v >= 16 and v % 2 == 0,
                      rule="must be even and >= 16")
        cfg.grid = GridSpec(n, L, M)

    if parser.has_section("drift"):
        if not rd.has("drift", "matrix"):
            rd.fail("drift", "matrix", "missing required value")
        rows = rd.points("drift", "matrix", "rows 'a, b; c, d'")
        try:
            cfg.drift = DriftMatrix(np.array(rows, dtype=float))
        except (InvalidInputError, ValueError) as exc:
            rd.fail("drift", "matrix", str(exc))

    if parser.has_section("time"):
        cfg.theta = rd.number("time", "theta", check=lambda v: v > 0, rule="must be positive")
        cfg.k = rd.number("time", "k", int, default=20, check=lambda v: v >= 1, rule="must be >= 1")

    if parser.has_section("initial"):
        kind = rd.raw("initial", "kind") if rd.has("initial", "kind") else "gaussian"
        init = {"kind": kind}
        if kind == "gaussian":
            init["center"] = rd.vector("initial", "center") if rd.has("initial", "center") else None
            init["width"] = rd.number("initial", "width", default=1.0, check=lambda v: v > 0,
                                      rule="must be positive")
            init["amplitude"] = rd.number("initial", "amplitude", default=1.0)
        elif kind == "mixture":
            for key in ("centers", "widths", "amplitudes"):
                if not rd.has("initial", key):
                    rd.fail("initial", key, "required for kind = mixture")
            init["centers"] = rd.points("initial", "centers")
            init["widths"] = rd.vector("initial", "widths")
            init["amplitudes"] = rd.vector("initial", "amplitudes")
            if not (len(init["centers"]) == len(init["widths"]) == len(init["amplitudes"])):
                rd.fail("initial", "amplitudes", "centers, widths and amplitudes differ in length")
            if min(init["widths"]) <= 0:
                rd.fail("initial", "widths", "widths must be positive")
        elif kind == "file":
            if not rd.has("initial", "file"):
                rd.fail("initial", "file", "required for kind = file")
            init["file"] = cfg.base_dir / rd.raw("initial", "file")
        else:
            rd.fail("initial", "kind", f"must be gaussian, mixture or file, got {kind!r}")
        if cfg.grid is not None:
            for c in ([init["center"]] if init.get("center") else []) + init.get("centers", []):
                if len(c) != cfg.grid.n:
                    rd.fail("initial", "centers" if "centers" in init else "center",
                            f"points need {cfg.grid.n} coordinates, got {len(c)}")
        cfg.initial = init

    if parser.has_section("observation"):
        if not rd.has("observation", "set"):
            rd.fail("observation", "set", "missing required value")
        line = lines.get(("observation", "set"))
        try:
            cfg.omega = parse_thickset(rd.raw("observation", "set"),
                                       n=cfg.grid.n if cfg.grid else None,
                                       source=f"{source}:[observation] set")
        except InvalidInputError as exc:
            raise ConfigError(str(exc), source, line, "observation", "set") from None

    if parser.has_section("thickness"):
        if rd.has("thickness", "window"):
            vals = rd.vector("thickness", "window")
            if len(vals) % 2 or any(lo >= hi for lo, hi in zip(vals[0::2], vals[1::2])):
                rd.fail("thickness", "window", "need lo, hi pairs with lo < hi")
            cfg.window = list(zip(vals[0::2], vals[1::2]))
        cfg.resolution = rd.number("thickness", "resolution", int, default=64,
                                   check=lambda v: v >= 4, rule="must be >= 4")

    if parser.has_section("convexity"):
        c = cfg.convexity
        c["ensemble"] = rd.number("convexity", "ensemble", int, default=20, check=lambda v: v >= 1,
                                  rule="must be >= 1")
        c["route"] = rd.raw("convexity", "route") if rd.has("convexity", "route") else "direct"
        if c["route"] not in ("direct", "factorized"):
            rd.fail("convexity", "route", f"must be direct or factorized, got {c['route']!r}")
        c["n_times"] = rd.number("convexity", "n_times", int, default=256, check=lambda v: v >= 64,
                                 rule="must be >= 64")
        c["n_directions"] = rd.number("convexity", "n_directions", int, default=64,
                                      check=lambda v: v >= 1, rule="must be >= 1")

    if parser.has_section("observability"):
        cfg.observability_ensemble = rd.number("observability", "ensemble", int, default=12,
                                               check=lambda v: v >= 1, rule="must be >= 1")

    if parser.has_section("admissible"):
        R = rd.number("admissible", "r", check=lambda v: v > 0, rule="must be positive")
        eps = rd.number("admissible", "epsilon", default=None) if rd.has("admissible", "epsilon") else None
        if eps is not None and not 0 < eps < 1:
            rd.fail("admissible", "epsilon", f"must lie in (0, 1), got {eps!r}")
        cfg.admissible = AdmissibleClass("graph_norm_ball", R, eps)

    if parser.has_section("stability"):
        p = rd.number("stability", "p") if rd.has("stability", "p") else None
        s = rd.number("stability", "s") if rd.has("stability", "s") else None
        eps = cfg.admissible.epsilon if cfg.admissible is not None else None
        try:
            cfg.stability = StabilityParams(p=p, s=s, epsilon=eps)
        except InvalidInputError as exc:
            key = "s" if str(exc).split()[0] == "s" else "p"
            rd.fail("stability", key, str(exc))

    if parser.has_section("reconstruct"):
        cfg.alpha = rd.number("reconstruct", "alpha", default=1e-10, check=lambda v: v > 0,
                              rule="must be positive")
        cfg.iters = rd.number("reconstruct", "iters", int, default=200, check=lambda v: v >= 1,
                              rule="must be >= 1")

    if parser.has_section("noise"):
        if not rd.has("noise", "levels"):
            rd.fail("noise", "levels", "missing required value")
        levels = rd.vector("noise", "levels")
        if min(levels) < 0:
            rd.fail("noise", "levels", "noise levels must be >= 0")
        cfg.noise_levels = levels
        cfg.reps = rd.number("noise", "reps", int, default=5, check=lambda v: v >= 1, rule="must be >= 1")

    if parser.has_section("run"):
        cfg.seed = rd.number("run", "seed", int, default=0, check=lambda v: v >= 0, rule="must be >= 0")
        if rd.has("run", "output"):
            cfg.output = cfg.base_dir / rd.raw("run", "output")
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config ({exc.strerror})", str(path)) from None
    return parse_config(text, str(path), path.parent)
