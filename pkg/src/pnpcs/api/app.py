"""FastAPI service wrapping the core package.

Run with `uvicorn pnpcs.api.app:app`.  The endpoints mirror the CLI
subcommands: bound calculators, denoiser construction, single-instance
solves, and campaign runs (campaigns write their artifacts server-side and
return the summary rows).
"""

from __future__ import annotations

import math
from dataclasses import asdict
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import __version__, bounds
from ..denoiser import GuideKernelConfig, build_dsg_nlm, truncate_rank
from ..experiments import run_concentration, run_ecg, run_recovery_campaign, run_robust
from ..experiments.config import parse_config_text
from ..recovery import solve_exact, solve_robust_admm, solve_robust_direct
from ..sensing import make_gaussian, make_rademacher, make_structured
from ..signals import scanline, synthetic_ecg
from .schemas import (
    BoundRequest,
    BoundResponse,
    CampaignRequest,
    CampaignResponse,
    DenoiserRequest,
    DenoiserResponse,
    ErrorBoundRequest,
    ErrorBoundResponse,
    KernelParams,
    SolveRequest,
    SolveResponse,
    ThresholdRequest,
    ThresholdResponse,
)

app = FastAPI(title="pnpcs", version=__version__)


@app.exception_handler(ValueError)
async def _value_error_handler(request, exc):  # noqa: ANN001
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/bounds/exact", response_model=BoundResponse)
def bounds_exact(req: BoundRequest) -> BoundResponse:
    spec = bounds.BoundSpec(ensemble=req.ensemble, r=req.r, beta=req.beta)
    return BoundResponse(
        ensemble=req.ensemble,
        r=req.r,
        beta=req.beta,
        m_bound=bounds.exact_measurement_bound(spec),
    )


@app.post("/bounds/robust", response_model=BoundResponse)
def bounds_robust(req: BoundRequest) -> BoundResponse:
    if req.epsilon is None:
        raise HTTPException(status_code=400, detail="epsilon is required for robust bounds")
    spec = bounds.BoundSpec(ensemble=req.ensemble, r=req.r, beta=req.beta, epsilon=req.epsilon)
    return BoundResponse(
        ensemble=req.ensemble,
        r=req.r,
        beta=req.beta,
        epsilon=req.epsilon,
        m_bound=bounds.robust_measurement_bound(spec),
        raw_value=bounds.robust_bound_value(spec),
    )


@app.post("/bounds/error", response_model=ErrorBoundResponse)
def bounds_error(req: ErrorBoundRequest) -> ErrorBoundResponse:
    return ErrorBoundResponse(
        rhs=bounds.robust_error_rhs(req.epsilon, req.delta, req.eta_norm, req.dist)
    )


@app.post("/bounds/thresholds", response_model=ThresholdResponse)
def bounds_thresholds(req: ThresholdRequest) -> ThresholdResponse:
    spec = bounds.BoundSpec(ensemble=req.ensemble, r=req.r, beta=0.5, n=req.n)
    result = bounds.proposition_thresholds(spec)
    if result is None:
        floor = bounds.robust_bound_value(
            bounds.BoundSpec(ensemble=req.ensemble, r=req.r, beta=1 - 1e-12, epsilon=1 - 1e-12)
        )
        return ThresholdResponse(feasible=False, floor=floor)
    epsilon1 = None
    if req.beta1 is not None:
        epsilon1 = bounds.epsilon_for_beta(spec, req.beta1)
    return ThresholdResponse(
        feasible=True,
        floor=result.floor,
        beta0=result.beta0,
        epsilon0=result.epsilon0,
        epsilon1=epsilon1,
    )


def _kernel_config(params: KernelParams, n: int) -> GuideKernelConfig:
    return GuideKernelConfig(
        patch_radius=params.patch_radius,
        search_radius=n if params.search_radius < 0 else params.search_radius,
        bandwidth=params.bandwidth,
        sinkhorn_iters=params.sinkhorn_iters,
        sinkhorn_tol=params.sinkhorn_tol,
    )


def _guide_signal(name: str, n: int) -> np.ndarray:
    return scanline(n) if name == "scanline" else synthetic_ecg(n)


@app.post("/denoiser/summary", response_model=DenoiserResponse)
def denoiser_summary(req: DenoiserRequest) -> DenoiserResponse:
    if req.guide is not None:
        guide = np.asarray(req.guide, dtype=float)
    else:
        guide = _guide_signal(req.synthetic, req.n)
    d = build_dsg_nlm(guide, _kernel_config(req.kernel, guide.size))
    if req.rank is not None:
        d = truncate_rank(d, req.rank)
    return DenoiserResponse(
        n=d.n,
        rank=d.rank,
        eig_min=float(d.eig_values.min()),
        eig_max=float(d.eig_values.max()),
        row_sum_deviation=float(d.provenance.get("row_sum_deviation", math.nan)),
        min_eig_before_clamp=float(d.provenance.get("min_eig_before_clamp", math.nan)),
        truncation_residual=float(d.provenance.get("truncation_residual", math.nan)),
        summary=d.summary(),
    )


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    guide = _guide_signal(req.guide, req.n)
    d = truncate_rank(build_dsg_nlm(guide, _kernel_config(req.kernel, req.n)), req.rank)
    if req.op_kind == "gaussian":
        op = make_gaussian(req.m, req.n, req.seed)
    elif req.op_kind == "rademacher":
        op = make_rademacher(req.m, req.n, req.seed)
    else:
        op = make_structured(req.m, req.n, req.transform, req.seed)
    xi = guide if req.off_range else d.apply(guide)
    if req.noise_std > 0:
        eta = np.random.default_rng(req.noise_seed).normal(0.0, req.noise_std, op.out_dim)
    else:
        eta = np.zeros(op.out_dim)
    b = op.apply(xi) + eta
    delta = req.delta_rule * float(np.linalg.norm(eta))
    if req.solver == "admm":
        sol = solve_robust_admm(op, b, delta, d, iters=req.admm_iters)
    elif delta > 0:
        sol = solve_robust_direct(op, b, delta, d)
    else:
        sol = solve_exact(op, b, d)
    record = sol.to_record(ground_truth=xi)
    return SolveResponse(
        **record,
        x_star=list(map(float, sol.x_star)) if req.include_signals else None,
        ground_truth=list(map(float, xi)) if req.include_signals else None,
    )


@app.post("/campaign", response_model=CampaignResponse)
def campaign(req: CampaignRequest) -> CampaignResponse:
    text = "\n".join(f"{k}={v}" for k, v in req.config.items())
    cfg = parse_config_text(text)
    out_dir = Path(req.out_dir)
    if cfg.kind in ("phase_gaussian", "exact_rademacher", "structured"):
        grid = run_recovery_campaign(cfg, out_dir)
        summary = [asdict(cell) for cell in grid.cells]
    elif cfg.kind == "robust":
        summary = [asdict(rep) for rep in run_robust(cfg, out_dir)]
    elif cfg.kind == "concentration":
        summary = [asdict(study) for study in run_concentration(cfg, out_dir)]
    elif cfg.kind == "ecg":
        report = run_ecg(cfg, out_dir, smoke=bool(int(cfg.extras.get("smoke", "0"))))
        summary = [dict(report.rows())]
    else:
        raise HTTPException(status_code=400, detail=f"unknown campaign kind {cfg.kind!r}")
    files = sorted(str(p.relative_to(out_dir)) for p in out_dir.glob("*") if p.is_file())
    return CampaignResponse(kind=cfg.kind, out_dir=str(out_dir), files=files, summary=summary)
