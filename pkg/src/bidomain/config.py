"""Run configuration: flat INI-style text with dotted key paths.

The format is deliberately minimal: ``[section]`` headers, ``key = value``
lines, ``#``/``;`` comments.  Parsing is done by hand so every diagnostic can
name the offending ``section.key`` and its line number.  Unknown sections or
keys are hard errors; model parameter ranges are enforced at parse time.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from bidomain.ionic import CertificateInfeasibleError, IonicModel, VARIANTS

__all__ = ["ConfigError", "RunConfig", "parse_config", "parse_config_text", "echo_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        loc = ""
        if key is not None:
            loc += f" [{key}"
            loc += f", line {line}]" if line is not None else "]"
        super().__init__(f"{message}{loc}")
        self.key = key
        self.line = line


@dataclass
class GridConfig:
    dimension: int = 1
    extents: tuple[float, ...] = (1.0,)
    counts: tuple[int, ...] = (65,)


@dataclass
class ConductivityConfig:
    sigma_i: float = 1.0
    sigma_e: float = 1.0
    csv_i: str | None = None
    csv_e: str | None = None


@dataclass
class ModelConfig:
    variant: str = "fitzhugh_nagumo"
    a: float = 0.1
    eps: float = 0.01
    k: float = 1.0
    b: float = 1.0
    d: float = 0.5


@dataclass
class ForcingConfig:
    period: float = 10.0
    kind: str = "modal"  # modal | nodal
    amplitude: float = 1.0
    mode_index: int = 1
    profile_csv_i: str | None = None
    profile_csv_e: str | None = None
    shape: str = "sin"  # sin | cos | square | csv
    shape_csv: str | None = None


@dataclass
class SolverConfig:
    k: int = 16
    tol: float = 1e-8
    max_iter: int = 500
    accel: str = "none"  # none | extrapolation
    accel_window: int = 5
    integrator_tol: float | None = None
    scheme: str = "dopri5"  # dopri5 | bs32
    t1: float | None = None  # solve-ivp horizon; defaults to the period
    n_samples: int = 129
    k_list: tuple[int, ...] = (8, 16, 32)
    tol_b: float = 1e-9  # second tolerance for the uniqueness runs
    horizon: float | None = None


@dataclass
class OutputConfig:
    directory: str = "out"
    plots: bool = False
    eigenvectors: bool = False
    probe_nodes: tuple[int, ...] = ()


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    conductivity: ConductivityConfig = field(default_factory=ConductivityConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    forcing: ForcingConfig = field(default_factory=ForcingConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _to_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _to_tuple(cast):
    def parse(raw: str):
        items = [p.strip() for p in raw.split(",") if p.strip()]
        return tuple(cast(p) for p in items)

    return parse


def _to_optional(cast):
    def parse(raw: str):
        return None if raw.strip().lower() in ("", "none", "auto") else cast(raw)

    return parse


# section -> key -> converter; the dataclass defaults define optionality
_SCHEMA = {
    "grid": {"dimension": int, "extents": _to_tuple(float), "counts": _to_tuple(int)},
    "conductivity": {
        "sigma_i": float, "sigma_e": float,
        "csv_i": _to_optional(str), "csv_e": _to_optional(str),
    },
    "model": {"variant": str, "a": float, "eps": float, "k": float, "b": float, "d": float},
    "forcing": {
        "period": float, "kind": str, "amplitude": float, "mode_index": int,
        "profile_csv_i": _to_optional(str), "profile_csv_e": _to_optional(str),
        "shape": str, "shape_csv": _to_optional(str),
    },
    "solver": {
        "k": int, "tol": float, "max_iter": int, "accel": str, "accel_window": int,
        "integrator_tol": _to_optional(float), "scheme": str,
        "t1": _to_optional(float), "n_samples": int, "k_list": _to_tuple(int),
        "tol_b": float, "horizon": _to_optional(float),
    },
    "output": {
        "directory": str, "plots": _to_bool, "eigenvectors": _to_bool,
        "probe_nodes": _to_tuple(int),
    },
}

_BLOCKS = {
    "grid": GridConfig, "conductivity": ConductivityConfig, "model": ModelConfig,
    "forcing": ForcingConfig, "solver": SolverConfig, "output": OutputConfig,
}


def _parse_ini(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", line=lineno)
        if current is None:
            raise ConfigError(f"key outside any [section]: {raw!r}", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        if key in sections[current]:
            raise ConfigError("duplicate key", key=f"{current}.{key}", line=lineno)
        sections[current][key] = (value.split("#", 1)[0].strip(), lineno)
    return sections


def _validate(cfg: RunConfig, raw: dict, base_dir: str) -> RunConfig:
    def line_of(section: str, key: str) -> int | None:
        entry = raw.get(section, {}).get(key)
        return entry[1] if entry else None

    g = cfg.grid
    if g.dimension not in (1, 2):
        raise ConfigError("dimension must be 1 or 2", "grid.dimension", line_of("grid", "dimension"))
    if len(g.extents) != g.dimension or len(g.counts) != g.dimension:
        raise ConfigError(
            f"extents/counts need {g.dimension} entries",
            "grid.extents", line_of("grid", "extents"),
        )
    if any(e <= 0 for e in g.extents):
        raise ConfigError("extents must be positive", "grid.extents", line_of("grid", "extents"))
    if any(c < 3 for c in g.counts):
        raise ConfigError("need at least 3 nodes per axis", "grid.counts", line_of("grid", "counts"))

    c = cfg.conductivity
    if c.sigma_i <= 0 or c.sigma_e <= 0:
        raise ConfigError("conductivities must be positive", "conductivity.sigma_i",
                          line_of("conductivity", "sigma_i"))

    m = cfg.model
    if m.variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}", "model.variant",
                          line_of("model", "variant"))
    if not 0.0 < m.a < 1.0:
        raise ConfigError("parameter a must lie in (0, 1)", "model.a", line_of("model", "a"))
    try:
        IonicModel(variant=m.variant, a=m.a, eps=m.eps, k=m.k, b=m.b, d=m.d)
    except CertificateInfeasibleError as exc:
        raise ConfigError(str(exc), "model.b", line_of("model", "b")) from exc
    except ValueError as exc:
        raise ConfigError(str(exc), "model.eps", line_of("model", "eps")) from exc

    f = cfg.forcing
    if f.period <= 0:
        raise ConfigError("period must be positive", "forcing.period", line_of("forcing", "period"))
    if f.kind not in ("modal", "nodal"):
        raise ConfigError("kind must be 'modal' or 'nodal'", "forcing.kind", line_of("forcing", "kind"))
    if f.shape not in ("sin", "cos", "square", "csv"):
        raise ConfigError("shape must be sin|cos|square|csv", "forcing.shape",
                          line_of("forcing", "shape"))
    if f.shape == "csv" and not f.shape_csv:
        raise ConfigError("shape=csv requires shape_csv", "forcing.shape_csv",
                          line_of("forcing", "shape"))
    if f.kind == "nodal" and not (f.profile_csv_i and f.profile_csv_e):
        raise ConfigError("kind=nodal requires profile_csv_i and profile_csv_e",
                          "forcing.profile_csv_i", line_of("forcing", "kind"))
    if f.kind == "modal" and f.mode_index < 0:
        raise ConfigError("mode_index must be >= 0", "forcing.mode_index",
                          line_of("forcing", "mode_index"))

    s = cfg.solver
    if s.tol <= 0 or s.tol_b <= 0 or (s.integrator_tol is not None and s.integrator_tol <= 0):
        raise ConfigError("tolerances must be positive", "solver.tol", line_of("solver", "tol"))
    if s.k + 1 > math.prod(g.counts):
        raise ConfigError("k+1 exceeds the number of grid nodes", "solver.k", line_of("solver", "k"))
    if s.accel not in ("none", "extrapolation"):
        raise ConfigError("accel must be none|extrapolation", "solver.accel",
                          line_of("solver", "accel"))
    if s.scheme not in ("dopri5", "bs32"):
        raise ConfigError("scheme must be dopri5|bs32", "solver.scheme", line_of("solver", "scheme"))
    if s.n_samples < 2:
        raise ConfigError("n_samples must be >= 2", "solver.n_samples",
                          line_of("solver", "n_samples"))
    if cfg.forcing.mode_index > s.k and f.kind == "modal":
        raise ConfigError("mode_index exceeds the truncation order k", "forcing.mode_index",
                          line_of("forcing", "mode_index"))

    for section, key, path in [
        ("conductivity", "csv_i", c.csv_i), ("conductivity", "csv_e", c.csv_e),
        ("forcing", "profile_csv_i", f.profile_csv_i),
        ("forcing", "profile_csv_e", f.profile_csv_e),
        ("forcing", "shape_csv", f.shape_csv),
    ]:
        if path is not None:
            resolved = path if os.path.isabs(path) else os.path.join(base_dir, path)
            if not os.path.exists(resolved):
                raise ConfigError(f"referenced file does not exist: {resolved}",
                                  f"{section}.{key}", line_of(section, key))
    return cfg


def parse_config_text(text: str, base_dir: str = ".") -> RunConfig:
    raw = _parse_ini(text)
    cfg = RunConfig()
    for section, entries in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", section)
        block = getattr(cfg, section)
        for key, (value, lineno) in entries.items():
            if key not in _SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}", lineno)
            try:
                setattr(block, key, _SCHEMA[section][key](value))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value {value!r} ({exc})", f"{section}.{key}", lineno) from exc
    return _validate(cfg, raw, base_dir)


def parse_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def echo_config(cfg: RunConfig) -> str:
    """Canonical INI text; reparses to an equivalent RunConfig."""
    lines = []
    for section, cls in _BLOCKS.items():
        lines.append(f"[{section}]")
        block = getattr(cfg, section)
        for key in _SCHEMA[section]:
            lines.append(f"{key} = {_fmt(getattr(block, key))}")
        lines.append("")
    return "\n".join(lines)
