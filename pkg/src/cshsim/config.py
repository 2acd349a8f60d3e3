"""Line-oriented run configuration.

Format::

    # comment
    [grid]
    n = 64
    [scheme]
    dt = 1e-3
    t_end = 1.0

Sections and keys are fixed by the dataclasses below; unknown keys, missing
required keys and out-of-range values raise :class:`ConfigError` carrying the
offending line number.  :func:`serialize_config` writes every key, so
``parse(serialize(parse(text))) == parse(text)``.
"""
from __future__ import annotations

import math
import typing
from dataclasses import MISSING, dataclass, field, fields, replace

from .dynamics import FORMULATIONS
from .estimates import INEQUALITIES
from .initial import KINDS


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class GridSection:
    n: int
    L: float = 2 * math.pi


@dataclass(frozen=True)
class SchemeSection:
    dt: float
    t_end: float
    formulation: str = "reformulated"
    stride: int = 1
    dealias: bool = True
    gauge_coupling: bool = True
    potential_on: bool = True


@dataclass(frozen=True)
class PotentialSection:
    coefficients: tuple[float, ...] = (0.0, 1.0)
    alpha: float = 1.0


@dataclass(frozen=True)
class InitialSection:
    kind: str = "random-band"
    seed: int = 0
    amplitude: float = 0.1
    velocity: float = 0.1
    gauge_amplitude: float = 0.05
    kmax: int = 3
    mode: tuple[int, ...] = (1, 0)
    sign: int = 1
    width: float = 0.5
    a_mean: tuple[float, ...] = (0.0, 0.0)
    path: str = ""


@dataclass(frozen=True)
class DiagnosticsSection:
    record: bool = True
    epsilon: float = 0.1
    snapshots: bool = True
    bounds: bool = True


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"


@dataclass(frozen=True)
class EstimatesSection:
    inequalities: tuple[str, ...] = ("Str", "T")
    resolutions: tuple[int, ...] = (32, 64, 128)
    seeds: int = 100
    band: tuple[float, ...] = (1.0, 4.0)
    duration: float = 2 * math.pi
    epsilon: float = 0.01
    samples: int = 1_000_000


@dataclass(frozen=True)
class GaugeSection:
    chi_amplitude: float = 0.5
    chi_mode: tuple[int, ...] = (1, 1)


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection
    scheme: SchemeSection
    potential: PotentialSection = field(default_factory=PotentialSection)
    initial: InitialSection = field(default_factory=InitialSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)
    estimates: EstimatesSection = field(default_factory=EstimatesSection)
    gauge: GaugeSection = field(default_factory=GaugeSection)

    def with_overrides(self, *, out: str | None = None, seed: int | None = None) -> "RunConfig":
        cfg = self
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, dir=out))
        if seed is not None:
            cfg = replace(cfg, initial=replace(cfg.initial, seed=seed))
        return cfg


_SECTIONS = {f.name: f.type for f in fields(RunConfig)}
_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _section_class(name):
    return {
        "grid": GridSection,
        "scheme": SchemeSection,
        "potential": PotentialSection,
        "initial": InitialSection,
        "diagnostics": DiagnosticsSection,
        "output": OutputSection,
        "estimates": EstimatesSection,
        "gauge": GaugeSection,
    }[name]


def _convert(raw: str, tp, where: str):
    origin = typing.get_origin(tp)
    if origin is tuple:
        (inner, _) = typing.get_args(tp)
        items = [s.strip() for s in raw.split(",") if s.strip()]
        return tuple(_convert(s, inner, where) for s in items)
    if tp is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"{where} must be a boolean, got {raw!r}")
    if tp is int:
        return int(raw)
    if tp is float:
        return float(raw)
    return raw


def _validate(cfg: RunConfig, lines: dict):
    def fail(key, msg):
        raise ConfigError(msg, lines.get(key))

    if cfg.grid.n < 4 or cfg.grid.n % 2:
        fail("grid.n", "grid.n must be even and >= 4")
    if not cfg.grid.L > 0:
        fail("grid.L", "grid.L must be positive")
    s = cfg.scheme
    if not s.dt > 0:
        fail("scheme.dt", "scheme.dt must be positive")
    if not s.t_end >= 0:
        fail("scheme.t_end", "scheme.t_end must be nonnegative")
    if s.stride < 1:
        fail("scheme.stride", "scheme.stride must be >= 1")
    if s.formulation not in FORMULATIONS:
        fail("scheme.formulation", f"scheme.formulation must be one of {', '.join(FORMULATIONS)}")
    if cfg.potential.alpha < 0:
        fail("potential.alpha", "potential.alpha must be >= 0")
    ini = cfg.initial
    if ini.kind not in KINDS:
        fail("initial.kind", f"initial.kind must be one of {', '.join(KINDS)}")
    if ini.kind == "from-snapshot" and not ini.path:
        fail("initial.path", "initial.path is required for kind = from-snapshot")
    if len(ini.mode) != 2:
        fail("initial.mode", "initial.mode needs two integers")
    if len(ini.a_mean) != 2:
        fail("initial.a_mean", "initial.a_mean needs two numbers")
    if ini.sign not in (-1, 1):
        fail("initial.sign", "initial.sign must be 1 or -1")
    if ini.kind == "random-band" and (ini.kmax < 0 or 3 * ini.kmax >= cfg.grid.n):
        fail("initial.kmax", "initial.kmax must lie in [0, n/3)")
    if ini.width <= 0:
        fail("initial.width", "initial.width must be positive")
    if cfg.diagnostics.epsilon < 0:
        fail("diagnostics.epsilon", "diagnostics.epsilon must be >= 0")
    est = cfg.estimates
    bad = [i for i in est.inequalities if i not in INEQUALITIES]
    if bad:
        fail("estimates.inequalities", f"unknown inequalities {bad}")
    if any(n < 4 or n % 2 for n in est.resolutions):
        fail("estimates.resolutions", "estimates.resolutions must be even and >= 4")
    if len(est.band) != 2 or not 0 <= est.band[0] < est.band[1]:
        fail("estimates.band", "estimates.band must be two wavenumbers 0 <= lo < hi")
    if any(est.band[1] >= math.pi * n / cfg.grid.L for n in est.resolutions):
        fail("estimates.band", "estimates.band exceeds the coarsest resolution")
    if est.seeds < 1 or est.samples < 1:
        fail("estimates.seeds", "estimates.seeds and estimates.samples must be positive")
    if not 0 < est.epsilon < 0.5:
        fail("estimates.epsilon", "estimates.epsilon must lie in (0, 0.5)")
    if len(cfg.gauge.chi_mode) != 2:
        fail("gauge.chi_mode", "gauge.chi_mode needs two integers")


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict] = {name: {} for name in _SECTIONS}
    lines: dict[str, int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        cls = _section_class(section)
        types = typing.get_type_hints(cls)
        if key not in types:
            raise ConfigError(f"unknown key {section}.{key}", lineno)
        where = f"{section}.{key}"
        if where in lines:
            raise ConfigError(f"duplicate key {where}", lineno)
        try:
            values[section][key] = _convert(val, types[key], where)
        except ValueError as exc:
            raise ConfigError(f"bad value for {where}: {exc}", lineno) from None
        lines[where] = lineno

    sections = {}
    for name in _SECTIONS:
        cls = _section_class(name)
        for f in fields(cls):
            if f.default is MISSING and f.default_factory is MISSING and f.name not in values[name]:
                raise ConfigError(f"missing required key {name}.{f.name}")
        sections[name] = cls(**values[name])
    cfg = RunConfig(**sections)
    _validate(cfg, lines)
    return cfg


def _format(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(x) for x in v)
    return str(v)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for name in _SECTIONS:
        sec = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(sec):
            out.append(f"{f.name} = {_format(getattr(sec, f.name))}")
        out.append("")
    return "\n".join(out)
