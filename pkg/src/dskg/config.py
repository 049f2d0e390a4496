"""Run configuration: JSON parsing, validation, and construction of solver objects."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, DskgError, ForbiddenInterval
from .kernels import classify_mass
from .semilinear import CauchyData, Nonlinearity, SourceDriven, expected_gamma
from .transform import QuadratureSpec, time_grid
from .wave_base import ConstantLaplacian, Field, GridKind, SpatialGrid, VarCoeff1D

SUBCOMMANDS = (
    "solve-linear",
    "solve-source",
    "solve-semilinear",
    "verify-kernels",
    "verify-estimates",
    "verify-huygens",
    "verify-asymptotics",
    "fit-decay",
)
PRESETS = ("gaussian-bump", "sine-mode", "constant", "zero")
NEEDS_MASS = {"solve-linear", "solve-source", "solve-semilinear", "verify-huygens", "fit-decay"}


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    field: str
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.level}: {self.field}: {self.message}{where}"


@dataclass
class RunConfig:
    subcommand: str
    raw: dict
    mass: dict = field(default_factory=dict)
    operator: dict = field(default_factory=lambda: {"kind": "laplacian", "c2": 1.0})
    grid: dict = field(default_factory=lambda: {"kind": "Periodic1D", "N": 128, "L": 20.0})
    data: dict = field(default_factory=dict)
    nonlinearity: dict = field(default_factory=lambda: {"kind": "OddCubic", "c": 1.0})
    time: dict = field(default_factory=lambda: {"T": 8.0, "samples": 81, "spacing": "uniform"})
    quadrature: dict = field(default_factory=dict)
    norm: dict = field(default_factory=lambda: {"s": 1.0, "gamma": "auto"})
    verify: dict = field(default_factory=dict)
    output: Optional[str] = None
    seed: int = 0

    # -- builders -------------------------------------------------------
    def mass_params(self):
        return classify_mass(int(self.mass["n"]), float(self.mass["m"]))

    def build_grid(self) -> SpatialGrid:
        g = self.grid
        return SpatialGrid(GridKind(g.get("kind", "Periodic1D")), int(g["N"]), float(g["L"]))

    def build_operator(self):
        op = self.operator
        kind = op.get("kind", "laplacian")
        if kind == "laplacian":
            return ConstantLaplacian(float(op.get("c2", 1.0)))
        grid = self.build_grid()
        mean, amp, k = float(op.get("mean", 1.0)), float(op.get("amp", 0.0)), int(op.get("k", 1))
        L = grid.L
        return VarCoeff1D(lambda x: mean + amp * np.cos(2.0 * np.pi * k * x / L), float(op.get("cfl", 0.9)))

    def build_times(self) -> np.ndarray:
        t = self.time
        return time_grid(float(t["T"]), int(t["samples"]), t.get("spacing", "uniform"))

    def build_quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(**self.quadrature)

    def build_nonlinearity(self) -> Nonlinearity:
        nl = dict(self.nonlinearity)
        table = nl.pop("table", None)
        if table is not None:
            table = (table["x"], table["y"])
        return Nonlinearity(nl.pop("kind"), table=table, **nl)

    def field_from(self, key: str) -> Field:
        grid = self.build_grid()
        spec = self.data.get(key) or {"preset": "zero"}
        return Field(grid, preset_values(grid, spec))

    def source_spec(self) -> Optional[dict]:
        return self.data.get("source")

    @property
    def s(self) -> float:
        return float(self.norm.get("s", 1.0))

    @property
    def alpha(self) -> float:
        kind = self.nonlinearity.get("kind", "OddCubic")
        return 2.0 if kind == "OddCubic" else float(self.nonlinearity.get("alpha", 2.0))

    def problem(self):
        src = self.source_spec()
        if self.subcommand == "solve-source" or (src is not None and self.subcommand == "solve-semilinear"):
            return SourceDriven(float(src.get("decay", 0.0)))
        psi0 = self.data.get("psi0") or {"preset": "zero"}
        return CauchyData(self.norm.get("gamma0"), psi0.get("preset", "zero") == "zero")


def preset_values(grid: SpatialGrid, spec: dict) -> np.ndarray:
    """Grid samples of a named data preset scaled by its amplitude."""
    name = spec.get("preset", "zero")
    amp = float(spec.get("amplitude", 1.0))
    x = grid.x
    if name == "zero":
        return np.zeros(grid.N)
    if name == "constant":
        return np.full(grid.N, amp)
    if name == "sine-mode":
        k = int(spec.get("k", 1))
        if grid.kind is GridKind.RADIAL_3D:
            return amp * np.sin(np.pi * k * x / ((grid.N + 1) * grid.h)) / x
        return amp * np.sin(2.0 * np.pi * k * x / grid.L)
    if name == "gaussian-bump":
        w = float(spec.get("width", 1.0))
        if grid.kind is GridKind.RADIAL_3D:
            return amp * np.exp(-((x / w) ** 2))
        c = float(spec.get("center", 0.5 * grid.L))
        d = (x - c + 0.5 * grid.L) % grid.L - 0.5 * grid.L
        return amp * np.exp(-((d / w) ** 2))
    raise ValueError(f"unknown preset {name!r}")


# ---------------------------------------------------------------- loading


def parse_json(text: str) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([Diagnostic("error", "<json>", exc.msg + f" at column {exc.colno}", exc.lineno)])
    if not isinstance(obj, dict):
        raise ConfigError([Diagnostic("error", "<root>", "configuration must be a JSON object", 1)])
    return obj


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return i
    return None


def build_config(obj: dict, subcommand: str, text: str = "") -> RunConfig:
    cfg = RunConfig(subcommand=subcommand, raw=obj)
    for key in ("mass", "operator", "grid", "data", "nonlinearity", "time", "quadrature", "norm", "verify"):
        if key in obj:
            val = obj[key]
            if isinstance(val, dict):
                base = getattr(cfg, key)
                merged = dict(base)
                merged.update(val)
                setattr(cfg, key, merged)
            else:
                setattr(cfg, key, val)
    cfg.output = obj.get("output")
    cfg.seed = obj.get("seed", 0)
    return cfg


def validate(cfg: RunConfig, text: str = "") -> list:
    """All violations of cfg; errors block the run, warnings are reported."""
    out: list[Diagnostic] = []

    def locate(fld):
        for part in reversed(fld.split(".")):
            line = _line_of(text, part) if text else None
            if line is not None:
                return line
        return None

    def err(fld, msg):
        out.append(Diagnostic("error", fld, msg, locate(fld)))

    def warn(fld, msg):
        out.append(Diagnostic("warning", fld, msg, locate(fld)))

    known = {"subcommand", "mass", "operator", "grid", "data", "nonlinearity", "time", "quadrature", "norm",
             "verify", "output", "seed"}
    for key in cfg.raw:
        if key not in known:
            warn(key, "unknown key ignored")
    if cfg.subcommand not in SUBCOMMANDS:
        err("subcommand", f"unknown subcommand {cfg.subcommand!r}")

    mp = None
    need_mass = cfg.subcommand in NEEDS_MASS
    if need_mass or cfg.mass:
        for k in ("n", "m") if need_mass else ("n",):
            if k not in cfg.mass:
                err(f"mass.{k}", "required field missing")
        if "n" in cfg.mass and "m" not in cfg.mass and not isinstance(cfg.mass["n"], int):
            err("mass.n", "must be a positive integer")
        if "n" in cfg.mass and "m" in cfg.mass:
            n, m = cfg.mass["n"], cfg.mass["m"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                err("mass.n", "must be a positive integer")
            elif not _is_num(m) or not m > 0:
                err("mass.m", "must be a positive number")
            else:
                mp = classify_mass(n, float(m))

    g = cfg.grid
    kind = g.get("kind", "Periodic1D")
    if kind not in ("Periodic1D", "Radial3D"):
        err("grid.kind", f"unknown grid kind {kind!r}")
    N = g.get("N")
    if not isinstance(N, int) or isinstance(N, bool) or N < 16:
        err("grid.N", "must be an integer >= 16")
    elif kind == "Periodic1D" and cfg.operator.get("kind", "laplacian") == "laplacian" and N & (N - 1):
        err("grid.N", "Periodic1D spectral path needs N to be a power of two")
    if not _is_num(g.get("L")) or not g.get("L") > 0:
        err("grid.L", "must be a positive number")

    op = cfg.operator
    if op.get("kind", "laplacian") not in ("laplacian", "varcoeff1d"):
        err("operator.kind", "must be 'laplacian' or 'varcoeff1d'")
    elif op.get("kind") == "varcoeff1d":
        if kind != "Periodic1D":
            err("operator.kind", "varcoeff1d needs a Periodic1D grid")
        mean, amp = op.get("mean", 1.0), op.get("amp", 0.0)
        if not (_is_num(mean) and _is_num(amp)) or mean - abs(amp) <= 0:
            err("operator.amp", "coefficient a(x) = mean + amp cos(.) must stay positive")
    elif not _is_num(op.get("c2", 1.0)) or not op.get("c2", 1.0) > 0:
        err("operator.c2", "must be positive")

    t = cfg.time
    if not _is_num(t.get("T")) or not t.get("T") > 0:
        err("time.T", "T must be positive")
    if not isinstance(t.get("samples"), int) or t.get("samples") < 2:
        err("time.samples", "must be an integer >= 2")
    if t.get("spacing", "uniform") not in ("uniform", "phi"):
        err("time.spacing", "must be 'uniform' or 'phi'")

    for key in ("psi0", "psi1", "source"):
        spec = cfg.data.get(key)
        if spec is None:
            continue
        if not isinstance(spec, dict):
            err(f"data.{key}", "must be an object")
            continue
        if spec.get("preset", "zero") not in PRESETS:
            err(f"data.{key}.preset", f"unknown preset {spec.get('preset')!r}; choose from {', '.join(PRESETS)}")
        a = spec.get("amplitude", 1.0)
        if not _is_num(a) or not a > 0:
            err(f"data.{key}.amplitude", "amplitude (epsilon) must be > 0")

    try:
        cfg.build_quadrature()
    except (DskgError, TypeError) as exc:
        err("quadrature", str(exc))
    try:
        if cfg.subcommand == "solve-semilinear":
            cfg.build_nonlinearity()
    except (DskgError, TypeError, KeyError, ValueError) as exc:
        err("nonlinearity", str(exc))

    s = cfg.norm.get("s", 1.0)
    if not _is_num(s) or s < 0:
        err("norm.s", "must be >= 0")
    gamma = cfg.norm.get("gamma", "auto")
    if gamma != "auto" and not _is_num(gamma):
        err("norm.gamma", "must be a number or 'auto'")

    if mp is not None and not any(d.level == "error" for d in out):
        try:
            bound = expected_gamma(mp, cfg.alpha, cfg.problem())
        except ForbiddenInterval as exc:
            if cfg.subcommand == "solve-semilinear":
                err("mass.m", str(exc))
            else:
                warn("mass.m", str(exc))
            bound = None
        except DskgError as exc:
            err("norm.gamma0", str(exc))
            bound = None
        if bound is not None and _is_num(gamma) and not bound.admits(float(gamma)):
            frac = Fraction(bound.value).limit_denominator(1000)
            shown = str(frac) if abs(float(frac) - bound.value) < 1e-9 else f"{bound.value:.6g}"
            warn("norm.gamma", f"γ exceeds theorem bound {shown}")
    return out


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def load(text: str, subcommand: str) -> tuple:
    """Parse and validate; returns (config, warnings) or raises ConfigError."""
    obj = parse_json(text)
    cfg = build_config(obj, subcommand, text)
    diags = validate(cfg, text)
    errors = [d for d in diags if d.level == "error"]
    if errors:
        raise ConfigError(errors)
    return cfg, [d for d in diags if d.level == "warning"]
