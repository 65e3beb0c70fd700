"""Run configuration, flat key-value config files and named presets.

Config file grammar, one setting per line::

    # comment
    key = value

Blank lines and ``#`` comments are ignored; keys are the RunConfig field
names. List values (``epsilons``) are comma separated; ``x0`` is a half-plane
point ``a+bi`` for n = 2 or the rows of a group element ``a,b,c;d,e,f;g,h,i``
for n >= 3.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass
from typing import Any

import numpy as np

from .covering import Region, SamplerConfig
from .hecke_enum import DEFAULT_CAP, is_prime
from .spherical import parse_complex
from .symspace import SymPoint, from_group, from_half_plane

THREADS_ENV = "HECKE_LAB_THREADS"
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    p: int = 3
    epsilons: tuple[float, ...] = (3.0 ** -3,)
    k_min: int = 0
    k_max: int = 3
    x0: str = "0.13807118745769834+1.3591409142295225i"
    y_max: float = 2.0
    x_bound: float = 0.5
    root_min: float = math.log(3 / 4)
    root_max: float = 1.0
    samples: int = 4000
    seed: int = 0
    target: float = 0.9
    cap: int = DEFAULT_CAP
    outdir: str = "out"
    metric_scale: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if not is_prime(self.p):
            raise ConfigError(f"p = {self.p} is not prime")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if self.cap < 1:
            raise ConfigError("cap must be positive")
        if not self.epsilons or any(not e > 0 for e in self.epsilons):
            raise ConfigError("epsilons must be a non-empty list of positive numbers")
        if not 0 <= self.k_min <= self.k_max:
            raise ConfigError("k range must satisfy 0 <= k_min <= k_max")
        if not 0 < self.target < 1:
            raise ConfigError("target must lie in (0, 1)")
        if not self.metric_scale > 0:
            raise ConfigError("metric_scale must be positive")

    def region(self) -> Region:
        try:
            if self.n == 2:
                return Region(2, y_max=self.y_max)
            return Region(self.n, x_bound=self.x_bound, root_min=self.root_min, root_max=self.root_max)
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.region(), self.samples, self.seed)

    def basepoint(self) -> SymPoint:
        return parse_basepoint(self.x0, self.n)

    def to_dict(self) -> dict:
        """Provenance record; the output directory is excluded so results do not depend on it."""
        d = dataclasses.asdict(self)
        d["epsilons"] = list(self.epsilons)
        del d["outdir"]
        return d


def parse_basepoint(text: str, n: int) -> SymPoint:
    try:
        if ";" not in text:
            if n != 2:
                raise ConfigError("a half-plane basepoint needs n = 2")
            z = parse_complex(text)
            if not z.imag > 0:
                raise ConfigError("half-plane basepoint needs positive imaginary part")
            return from_half_plane(z)
        rows = [[float(v) for v in r.split(",")] for r in text.split(";")]
        g = np.array(rows)
        if g.shape != (n, n):
            raise ConfigError(f"basepoint matrix must be {n}x{n}")
        # rescale to determinant one; the point only depends on the class mod scalars
        d = np.linalg.det(g)
        if not d > 0:
            raise ConfigError("basepoint matrix must have positive determinant")
        return from_group(g / d ** (1 / n))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"bad basepoint {text!r}: {e}") from None


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, value: str) -> Any:
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELDS[key].type
    try:
        if key == "epsilons":
            return tuple(parse_number(v) for v in value.split(",") if v.strip())
        if kind == "int":
            return int(value)
        if kind == "float":
            return parse_number(value)
        return value
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def parse_number(text: str) -> float:
    """Decimal, or ``a^b`` / ``a**b`` for exact powers such as ``3^-3``."""
    s = text.strip().replace("**", "^")
    if "^" in s:
        base, exp = s.split("^")
        return float(base) ** float(exp)
    return float(s)


def parse_config_text(text: str) -> dict[str, Any]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = _convert(key, value)
    return out


def load_config_file(path: str) -> dict[str, Any]:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


PRESETS: dict[str, str] = {
    "figure1": """
        n = 2
        p = 3
        k_min = 3
        k_max = 3
        epsilons = 3^-3
        x0 = 0.13807118745769834+1.3591409142295225i
        y_max = 2
        samples = 20000
        seed = 0
    """,
    "kappa-n2-p3": """
        n = 2
        p = 3
        epsilons = 3^-2, 3^-3, 3^-4
        k_min = 0
        k_max = 6
        x0 = 0.13807118745769834+1.3591409142295225i
        y_max = 2
        samples = 4000
        target = 0.95
        seed = 0
    """,
    "kappa-n3-p2": """
        n = 3
        p = 2
        epsilons = 0.4, 0.17, 0.075
        k_min = 0
        k_max = 3
        x0 = 1.1,0.2984425,-0.26;0,0.95,0.5523;0,0,0.9569378
        samples = 2000
        target = 0.95
        seed = 0
    """,
}


def preset(name: str) -> dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return parse_config_text(PRESETS[name])


def build_config(base: dict[str, Any] | None = None, **overrides: Any) -> RunConfig:
    values = dict(base or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


def resolve_threads(flag: int | None) -> int:
    """Thread count from the flag, else the environment, else 1."""
    if flag is not None:
        threads = flag
    else:
        env = os.environ.get(THREADS_ENV, "").strip()
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if threads < 1:
        raise ConfigError("thread count must be positive")
    return threads
