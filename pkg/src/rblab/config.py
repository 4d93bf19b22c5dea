"""Flat ``key = value`` configuration files with a closed schema."""

from __future__ import annotations

from dataclasses import dataclass, field

from .flux import FluxModel, parse_flux
from .grid import DIRICHLET, PERIODIC, Grid1D, InitialDatum, parse_datum
from .rb import RECONSTRUCTIONS, ViscosityPolicy
from .trajectory import config_hash


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _domain(text: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in text.split(":"))
    if not hi > lo:
        raise ValueError("domain must be <xmin>:<xmax> with xmin < xmax")
    return lo, hi


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {'|'.join(options)}, got {text!r}")
        return text
    return parse


def _entropy_visc(text: str):
    return "auto" if text == "auto" else float(text)


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise ValueError("must be a positive integer")
    return v


# key -> (parser, default text)
SCHEMA = {
    "flux": (parse_flux, "burgers"),
    "datum": (parse_datum, "gaussian:1:1"),
    "domain": (_domain, "-20:20"),
    "cells": (_positive_int, "1600"),
    "boundary": (_choice(DIRICHLET, PERIODIC), DIRICHLET),
    "helmholtz": (_choice("tridiagonal", "green"), "tridiagonal"),
    "ell": (float, "0.2"),
    "visc": (ViscosityPolicy.parse, "mesh:1"),
    "reconstruction": (_choice(*RECONSTRUCTIONS), "muscl"),
    "cfl": (float, "0.5"),
    "t_end": (float, "2"),
    "snapshots": (_floats, "0.25,0.5,0.75,1,1.25,1.5,1.75,2"),
    "viscosity": (_entropy_visc, "0"),
    "ell_list": (_floats, "0.2,0.1,0.05,0.025"),
    "p_list": (lambda s: tuple(int(v) for v in s.split(",")), "1,2,4"),
    "grid_policy": (_choice("scaled", "fixed"), "scaled"),
    "reference_refinement": (_positive_int, "4"),
    "ref_cfl": (float, "0.9"),
    "snapshot_dt": (float, "0.25"),
    "verify_reference": (_bool, "false"),
}


@dataclass
class RunConfig:
    values: dict
    raw: dict[str, str]
    defaults_applied: list[str] = field(default_factory=list)
    lines: dict[str, int] = field(default_factory=dict)

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def flux_model(self) -> FluxModel:
        return self.values["flux"]

    @property
    def datum_obj(self) -> InitialDatum:
        return self.values["datum"]

    def grid(self) -> Grid1D:
        lo, hi = self.values["domain"]
        return Grid1D(lo, hi, self.values["cells"], self.values["boundary"])

    def resolved_text(self) -> str:
        out = []
        for key in SCHEMA:
            note = "  # default" if key in self.defaults_applied else ""
            out.append(f"{key} = {self.raw[key]}{note}")
        return "\n".join(out) + "\n"

    def hash(self) -> str:
        return config_hash(tuple((k, self.raw[k]) for k in SCHEMA))


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse config text; ``overrides`` are extra ``key=value`` strings.

    Unknown keys, malformed values and violated invariants raise
    ``ConfigError`` carrying the offending line number.
    """
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    entries = [(i, ln) for i, ln in enumerate(text.splitlines(), 1)]
    entries += [(None, o) for o in overrides]
    for lineno, line in entries:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        raw[key] = value
        lines[key] = lineno
    defaults = [k for k in SCHEMA if k not in raw]
    for k in defaults:
        raw[k] = SCHEMA[k][1]
    values = {}
    for key, (parser, _) in SCHEMA.items():
        try:
            values[key] = parser(raw[key])
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lines.get(key)) from exc
    cfg = RunConfig(values, raw, defaults, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    v = cfg.values
    try:
        g = cfg.grid()
    except ValueError as exc:
        raise ConfigError(str(exc), cfg.lines.get("cells")) from exc
    if not 0.0 < v["ell"] <= 1.0:
        raise ConfigError("ell must lie in (0, 1]", cfg.lines.get("ell"))
    if v["ell"] < 4.0 * g.dx * (1 - 1e-12):
        raise ConfigError(f"ell={v['ell']} < 4 dx = {4 * g.dx:.6g}; refine cells or raise ell",
                          cfg.lines.get("ell") or cfg.lines.get("cells"))
    for key in ("cfl", "ref_cfl"):
        if not 0.0 < v[key] < 1.0:
            raise ConfigError(f"{key} must lie in (0, 1)", cfg.lines.get(key))
    if not v["t_end"] > 0:
        raise ConfigError("t_end must be positive", cfg.lines.get("t_end"))
    if any(t <= 0 for t in v["snapshots"]):
        raise ConfigError("snapshot times must be positive", cfg.lines.get("snapshots"))
    if v["viscosity"] != "auto" and v["viscosity"] < 0:
        raise ConfigError("viscosity must be non-negative or auto", cfg.lines.get("viscosity"))
    if v["reference_refinement"] < 4:
        raise ConfigError("reference_refinement must be at least 4",
                          cfg.lines.get("reference_refinement"))
    if not v["snapshot_dt"] > 0:
        raise ConfigError("snapshot_dt must be positive", cfg.lines.get("snapshot_dt"))
