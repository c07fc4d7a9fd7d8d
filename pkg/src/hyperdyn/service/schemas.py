"""Pydantic request/response models for the laboratory service."""

from __future__ import annotations

from typing import List, Optional, Tuple

from pydantic import BaseModel, Field

from ..config import RunConfig


class ConfigModel(BaseModel):
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
    grid: Tuple[int, int, int] = (64, 64, 16)
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

    def to_run_config(self) -> RunConfig:
        data = self.model_dump()
        data["grid"] = tuple(data["grid"])
        return RunConfig(**data)


class BuildRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class BuildResponse(BaseModel):
    lam: float
    r_star: float
    t_star: float
    v_u: List[float]
    v_s: List[float]
    gluing_kind: str
    n_exponent: int
    hole_radius: float
    z_halfwidth: float


class CheckRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    samples: Optional[int] = None


class CheckResponse(BaseModel):
    name: str
    passed: bool
    max_residual: float
    tolerance: float
    worst_sample: List

    detail: str


class IterateRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    steps: Optional[int] = None


class CsvArtifact(BaseModel):
    name: str
    text: str


class PgmArtifact(BaseModel):
    name: str
    data_b64: str


class IterateResponse(BaseModel):
    steps: int
    csv: CsvArtifact


class AttractorRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    grid_density: Optional[int] = None
    iters: Optional[int] = None


class AttractorResponse(BaseModel):
    points: int
    z_extent: float
    min_margin: float
    csv: CsvArtifact
    pgm: PgmArtifact


class TangencyRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    grid: Optional[Tuple[int, int, int]] = None
    tangency_tol: Optional[float] = None


class TangencyResponse(BaseModel):
    nodes: int
    loci: int
    loci_in_band: int
    band_halfwidth: float
    min_gap: float
    min_refined_gap: float
    min_gap_in_band: float
    csv: CsvArtifact
    pgm: PgmArtifact


class EnergyBuildRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class EnergyBuildResponse(BaseModel):
    eps3: float
    gamma_csv: CsvArtifact
    g_csv: CsvArtifact


class EnergyVerifyRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    budget: Optional[int] = None


class EnergyVerifyResponse(BaseModel):
    passed: bool
    report: str
    decrease_violations: int
    worst_margin: float
    grad_magnitudes: List[float]
    margins_csv: CsvArtifact
