"""FastAPI service wrapping the laboratory core.

Built systems and energy contexts are cached per configuration, so a client
can construct once and keep probing the same system cheaply.
"""

from __future__ import annotations

import base64
import json
import threading

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import artifacts as art
from .. import energy as en
from ..checks import run_check
from ..errors import ConfigError, HyperdynError
from ..gluing import profile
from ..io_utils import csv_text, pgm_bytes
from .schemas import (
    AttractorRequest,
    AttractorResponse,
    BuildRequest,
    BuildResponse,
    CheckRequest,
    CheckResponse,
    CsvArtifact,
    EnergyBuildRequest,
    EnergyBuildResponse,
    EnergyVerifyRequest,
    EnergyVerifyResponse,
    IterateRequest,
    IterateResponse,
    PgmArtifact,
    TangencyRequest,
    TangencyResponse,
)


class _Cache:
    def __init__(self):
        self._lock = threading.Lock()
        self._systems = {}
        self._energies = {}

    @staticmethod
    def _key(cfg_model):
        return json.dumps(cfg_model.model_dump(), sort_keys=True)

    def system(self, cfg_model):
        key = self._key(cfg_model)
        with self._lock:
            if key not in self._systems:
                self._systems[key] = cfg_model.to_run_config().build()
            return self._systems[key]

    def energy(self, cfg_model):
        key = self._key(cfg_model)
        with self._lock:
            ctx = self._energies.get(key)
        if ctx is not None:
            return ctx
        cfg = cfg_model.to_run_config()
        sys_ = self.system(cfg_model)
        ctx = en.build_energy(
            sys_,
            rng=np.random.default_rng(cfg.seed),
            cloud_density=cfg.cloud_density,
            cloud_iters=cfg.cloud_iters,
            budget=cfg.energy_budget,
        )
        with self._lock:
            self._energies[key] = ctx
        return ctx


def create_app():
    app = FastAPI(title="hyperdyn laboratory", version="0.1.0")
    cache = _Cache()

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(status_code=400, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.exception_handler(HyperdynError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/build", response_model=BuildResponse)
    def build(req: BuildRequest):
        sys_ = cache.system(req.config)
        prof = profile(sys_)
        return BuildResponse(
            lam=sys_.lam,
            r_star=prof.r_star,
            t_star=prof.t_star,
            v_u=[float(x) for x in sys_.v_u],
            v_s=[float(x) for x in sys_.v_s],
            gluing_kind=sys_.gluing_kind,
            n_exponent=sys_.n_exponent,
            hole_radius=sys_.hole_radius,
            z_halfwidth=sys_.z_halfwidth,
        )

    @app.post("/check/{name}", response_model=CheckResponse)
    def check(name: str, req: CheckRequest):
        cfg = req.config.to_run_config()
        sys_ = cache.system(req.config)
        samples = req.samples or cfg.check_samples
        rng = np.random.default_rng(cfg.seed)
        try:
            result = run_check(sys_, name, samples=samples, rng=rng)
        except KeyError as exc:
            raise ConfigError(str(exc), field="check")
        return CheckResponse(
            name=result.name,
            passed=result.passed,
            max_residual=result.max_residual,
            tolerance=result.tolerance,
            worst_sample=[x for x in result.worst_sample],
            detail=result.detail,
        )

    @app.post("/iterate", response_model=IterateResponse)
    def iterate(req: IterateRequest):
        cfg = req.config.to_run_config()
        sys_ = cache.system(req.config)
        steps = cfg.iters if req.steps is None else req.steps
        rows = art.orbit_rows(
            sys_, cfg.orbit_side, (cfg.orbit_u, cfg.orbit_v, cfg.orbit_z), steps
        )
        return IterateResponse(
            steps=steps,
            csv=CsvArtifact(name="orbit.csv", text=csv_text(art.CLOUD_HEADER, rows)),
        )

    @app.post("/attractor", response_model=AttractorResponse)
    def attractor(req: AttractorRequest):
        cfg = req.config.to_run_config()
        sys_ = cache.system(req.config)
        density = req.grid_density or cfg.attractor_density
        iters = cfg.iters if req.iters is None else req.iters
        _, rows, field, stats = art.attractor_artifacts(sys_, density, iters, cfg.attractor_nz)
        return AttractorResponse(
            points=stats["points"],
            z_extent=stats["z_extent"],
            min_margin=stats["min_margin"],
            csv=CsvArtifact(name="attractor.csv", text=csv_text(art.CLOUD_HEADER, rows)),
            pgm=PgmArtifact(
                name="attractor_density.pgm",
                data_b64=base64.b64encode(pgm_bytes(field, 0.0, 1.0)).decode("ascii"),
            ),
        )

    @app.post("/tangency", response_model=TangencyResponse)
    def tangency(req: TangencyRequest):
        cfg = req.config.to_run_config()
        sys_ = cache.system(req.config)
        grid = tuple(req.grid) if req.grid else cfg.grid
        tol = req.tangency_tol or cfg.tangency_tol
        _, rows, field, stats = art.tangency_artifacts(sys_, grid, tol)
        return TangencyResponse(
            nodes=stats["nodes"],
            loci=stats["loci"],
            loci_in_band=stats["loci_in_band"],
            band_halfwidth=stats["band_halfwidth"],
            min_gap=stats["min_gap"],
            min_refined_gap=stats["min_refined_gap"],
            min_gap_in_band=stats["min_gap_in_band"],
            csv=CsvArtifact(name="tangency.csv", text=csv_text(art.TANGENCY_HEADER, rows)),
            pgm=PgmArtifact(
                name="tangency_gap.pgm",
                data_b64=base64.b64encode(pgm_bytes(field, 0.0, 0.5)).decode("ascii"),
            ),
        )

    @app.post("/energy/build", response_model=EnergyBuildResponse)
    def energy_build(req: EnergyBuildRequest):
        ctx = cache.energy(req.config)
        return EnergyBuildResponse(
            eps3=float(ctx.gfun.epsilons[3]),
            gamma_csv=CsvArtifact(
                name="gamma.csv", text=csv_text(art.GAMMA_HEADER, art.gamma_rows(ctx.gamma))
            ),
            g_csv=CsvArtifact(name="g.csv", text=csv_text(art.G_HEADER, art.g_rows(ctx.gfun))),
        )

    @app.post("/energy/verify", response_model=EnergyVerifyResponse)
    def energy_verify(req: EnergyVerifyRequest):
        cfg = req.config.to_run_config()
        ctx = cache.energy(req.config)
        budget = req.budget or cfg.energy_budget
        rng = np.random.default_rng(cfg.seed + 1)
        report = en.verify_energy(ctx, budget=budget, rng=rng)
        rows = art.energy_margin_rows(ctx, min(budget, 4000), np.random.default_rng(cfg.seed + 2))
        return EnergyVerifyResponse(
            passed=report.passed,
            report=report.to_text(),
            decrease_violations=report.decrease_violations,
            worst_margin=report.worst_margin,
            grad_magnitudes=list(report.grad_magnitudes),
            margins_csv=CsvArtifact(
                name="energy_margins.csv", text=csv_text(art.MARGIN_HEADER, rows)
            ),
        )

    return app
