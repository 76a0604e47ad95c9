"""Experiment configuration files.

One INI-style ``[experiment]`` section of ``key = value`` lines; unknown
keys are rejected. Lists are comma separated. Function slots are
``f0``, ``f1``, ... with a generator name followed by ``key=value`` options::

    [experiment]
    name = bumps
    kernel = hilbert
    m = 1
    ladder = 8, 16, 32, 64
    top = 3
    exponents = 2, 2
    f0 = bump center=1.0 radius=1.5
    f1 = bump center=0.5 radius=1.5

Generators: ``gaussian`` (center, width), ``bump`` (center, radius),
``indicator`` (region as ``lo:hi`` per axis), ``random-sign`` (seed, block),
``constant`` (value), ``zero``. All take an optional ``box`` (half width).
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import gridfunc
from .kernels import ScaleWindow

__all__ = ["ConfigError", "FunctionSpec", "ExperimentConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


GENERATORS = ("gaussian", "bump", "indicator", "random-sign", "constant", "zero")


@dataclass(frozen=True)
class FunctionSpec:
    generator: str
    options: tuple[tuple[str, str], ...] = ()

    @classmethod
    def parse(cls, text: str) -> "FunctionSpec":
        parts = text.split()
        if not parts:
            raise ConfigError("empty function spec")
        gen = parts[0]
        if gen not in GENERATORS:
            raise ConfigError(f"unknown generator {gen!r}; known: {', '.join(GENERATORS)}")
        opts = []
        for p in parts[1:]:
            key, eq, val = p.partition("=")
            if not eq:
                raise ConfigError(f"generator option {p!r} is not key=value")
            opts.append((key, val))
        return cls(gen, tuple(opts))

    def __str__(self) -> str:
        return " ".join([self.generator] + [f"{k}={v}" for k, v in self.options])

    def build(self, m: int, level: int) -> gridfunc.GridFunction:
        opts = dict(self.options)
        allowed = {
            "gaussian": {"center", "width", "box"},
            "bump": {"center", "radius", "box"},
            "indicator": {"region", "box"},
            "random-sign": {"seed", "block", "box"},
            "constant": {"value", "box"},
            "zero": {"box"},
        }[self.generator]
        extra = set(opts) - allowed
        if extra:
            raise ConfigError(f"{self.generator}: unknown options {sorted(extra)}")
        half = float(opts.get("box", 4.0))
        box = ((-half, half),) * m
        try:
            if self.generator == "gaussian":
                return gridfunc.gaussian(m, _floats(opts.get("center", "0")), box, level,
                                         float(opts.get("width", 1.0)))
            if self.generator == "bump":
                return gridfunc.smooth_bump(m, _floats(opts.get("center", "0")),
                                            float(opts.get("radius", 1.0)), box, level)
            if self.generator == "indicator":
                region = [tuple(float(v) for v in r.split(":")) for r in opts.get("region", "-1:1").split(",")]
                if len(region) == 1:
                    region = region * m
                return gridfunc.indicator(m, region, box, level)
            if self.generator == "random-sign":
                return gridfunc.random_sign(m, int(opts.get("seed", 0)), float(opts.get("block", 0.5)), box, level)
            if self.generator == "constant":
                return gridfunc.constant(m, float(opts.get("value", 1.0)), box, level)
            return gridfunc.constant(m, 0.0, box, level)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad options for {self}: {exc}") from exc


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    kernel: str = "hilbert"
    m: int = 1
    window: tuple[int, int] | None = None
    ladder: tuple[int, ...] = ()
    top: int = 3
    functions: tuple[FunctionSpec, ...] = ()
    exponents: tuple[float, ...] = ()
    delta: float = 0.1
    alpha: float = 0.9
    epsilon: tuple[float, ...] = (0.08, 0.02)
    level: int = 4
    budget: int = 2**25
    seed: int = 0
    instances: int = 5
    random_family: int = 0
    cap: int = 6
    tile_k: int = 0
    tile_offsets: tuple[int, ...] = ()
    d: int = 1
    speeds: tuple[float, ...] = (1.0,)
    modulation: tuple[str, ...] = ()
    shrink: float | None = None
    max_decay: float | None = None
    out: str | None = None
    threads: int = field(default=1, metadata={"echo": False})

    def __post_init__(self):
        if self.m not in (1, 2, 3):
            raise ConfigError("m must be 1, 2 or 3")
        if self.exponents:
            if len(self.exponents) != self.m + 1:
                raise ConfigError(f"need {self.m + 1} exponents")
            if any(p <= 1 for p in self.exponents):
                raise ConfigError("exponents must exceed 1")
            s = sum(0.0 if math.isinf(p) else 1.0 / p for p in self.exponents)
            if abs(s - 1.0) > 1e-12:
                raise ConfigError(f"exponents are not a Hoelder tuple (sum 1/p = {s})")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("alpha must lie in [0, 1]")

    @property
    def scale_window(self) -> ScaleWindow:
        if self.window is None:
            raise ConfigError("config has no window")
        return ScaleWindow(*self.window)

    def build_functions(self, count: int | None = None) -> list[gridfunc.GridFunction]:
        n = self.m + 1 if count is None else count
        if len(self.functions) != n:
            raise ConfigError(f"need {n} function slots f0..f{n - 1}, got {len(self.functions)}")
        return [spec.build(self.m, self.level) for spec in self.functions]

    def random_sign_family(self, index: int) -> list[gridfunc.GridFunction]:
        """Adversarial probe ``index``: m+1 random sign fields seeded from the config seed."""
        seeds = np.random.SeedSequence([self.seed, index]).generate_state(self.m + 1)
        return [gridfunc.random_sign(self.m, int(s), 0.5, ((-2.0, 2.0),) * self.m, self.level) for s in seeds]

    def echo(self) -> dict:
        """Resolved config without the execution-only fields."""
        out = {}
        for f in fields(self):
            if f.metadata.get("echo", True):
                v = getattr(self, f.name)
                if f.name == "functions":
                    v = [str(s) for s in v]
                out[f.name] = v
        return out

    def echo_json(self) -> str:
        return json.dumps(self.echo(), sort_keys=True, default=list)


_PARSERS = {
    "name": str,
    "kernel": str,
    "m": int,
    "window": lambda s: tuple(_ints(s)),
    "ladder": lambda s: tuple(_ints(s)),
    "top": int,
    "exponents": lambda s: tuple(math.inf if v.strip() == "inf" else float(v) for v in s.split(",")),
    "delta": float,
    "alpha": float,
    "epsilon": lambda s: tuple(_floats(s)),
    "level": int,
    "budget": int,
    "seed": int,
    "instances": int,
    "random_family": int,
    "cap": int,
    "tile_k": int,
    "tile_offsets": lambda s: tuple(_ints(s)),
    "d": int,
    "speeds": lambda s: tuple(_floats(s)),
    "modulation": lambda s: tuple(v.strip() for v in s.split(";") if v.strip()),
    "shrink": float,
    "max_decay": float,
    "out": str,
}


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown_sections = [s for s in parser.sections() if s != "experiment"]
    if unknown_sections:
        raise ConfigError(f"unknown sections {unknown_sections}")
    if not parser.has_section("experiment"):
        return ExperimentConfig()
    values, funcs = {}, {}
    for key, raw in parser.items("experiment"):
        if key.startswith("f") and key[1:].isdigit():
            funcs[int(key[1:])] = FunctionSpec.parse(raw)
            continue
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    if funcs:
        if sorted(funcs) != list(range(len(funcs))):
            raise ConfigError("function slots must be f0, f1, ... without gaps")
        values["functions"] = tuple(funcs[i] for i in range(len(funcs)))
    if "window" in values and len(values["window"]) != 2:
        raise ConfigError("window needs two integers lo, hi")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
