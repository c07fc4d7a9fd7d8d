"""Flat key = value run configuration with line-level diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .numerics import Tolerances
from .system import COMPOSITION_ORDERS, GLUING_KINDS, PHI_ORIENTATIONS, build_system


@dataclass
class RunConfig:
    c11: int = 2
    c12: int = 1
    c21: int = 1
    c22: int = 1
    rho0: float = 0.2
    gluing_kind: str = "plain_H"
    n_exponent: int = 1
    composition_order: str = "blend_after_linear"
    phi_orientation: str = "decreasing"
    eq_tol: float = 1e-9
    fix_tol: float = 1e-12
    quad_tol: float = 1e-8
    fd_step: float = 1e-6
    grid: tuple = (64, 64, 16)
    tangency_tol: float = 1e-3
    iters: int = 12
    attractor_density: int = 96
    attractor_nz: int = 5
    cloud_density: int = 96
    cloud_iters: int = 30
    energy_budget: int = 4000
    check_samples: int = 10000
    orbit_side: str = "R"
    orbit_u: float = 0.35
    orbit_v: float = 0.6
    orbit_z: float = 0.03
    seed: int = 0
    out_dir: str = "out"

    def matrix(self):
        return [[self.c11, self.c12], [self.c21, self.c22]]

    def tolerances(self):
        return Tolerances(
            eq_tol=self.eq_tol,
            fix_tol=self.fix_tol,
            quad_tol=self.quad_tol,
            fd_step=self.fd_step,
        )

    def build(self):
        return build_system(
            self.matrix(),
            rho0=self.rho0,
            gluing_kind=self.gluing_kind,
            n_exponent=self.n_exponent,
            composition_order=self.composition_order,
            phi_orientation=self.phi_orientation,
            tol=self.tolerances(),
        )

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_ENUMS = {
    "gluing_kind": GLUING_KINDS,
    "composition_order": COMPOSITION_ORDERS,
    "phi_orientation": PHI_ORIENTATIONS,
    "orbit_side": ("A", "R"),
}


def parse_grid(text):
    parts = str(text).lower().replace("x", " ").split()
    if len(parts) != 3:
        raise ValueError("grid must look like NxMxK")
    vals = tuple(int(p) for p in parts)
    if any(v < 2 for v in vals):
        raise ValueError("grid dimensions must be >= 2")
    return vals


def _coerce(name, raw, line_no):
    proto = RunConfig.__dataclass_fields__
    if name not in proto:
        raise ConfigError(f"unknown key '{name}'", line=line_no, field=name)
    default = proto[name].default
    try:
        if name == "grid":
            return parse_grid(raw)
        if name in _ENUMS:
            if raw not in _ENUMS[name]:
                raise ValueError(f"must be one of {_ENUMS[name]}")
            return raw
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r}: {exc}", line=line_no, field=name)


def parse_config_text(text):
    """Parse flat key = value lines ('#' comments) into a RunConfig."""
    cfg = RunConfig()
    seen = set()
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=line_no)
        name, _, raw = line.partition("=")
        name = name.strip()
        raw = raw.strip()
        if name in seen:
            raise ConfigError(f"duplicate key '{name}'", line=line_no, field=name)
        seen.add(name)
        setattr(cfg, name, _coerce(name, raw, line_no))
    return cfg


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
