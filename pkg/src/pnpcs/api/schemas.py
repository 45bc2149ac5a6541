"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Ensemble = Literal["gaussian", "rademacher"]
OperatorKind = Literal["gaussian", "rademacher", "structured"]
Transform = Literal["walsh_hadamard", "dft"]


class BoundRequest(BaseModel):
    ensemble: Ensemble
    r: int = Field(ge=1)
    beta: float = Field(gt=0, lt=1)
    epsilon: Optional[float] = Field(default=None, gt=0, lt=1)


class BoundResponse(BaseModel):
    ensemble: Ensemble
    r: int
    beta: float
    epsilon: Optional[float] = None
    m_bound: int
    raw_value: Optional[float] = None


class ErrorBoundRequest(BaseModel):
    epsilon: float = Field(gt=0, lt=1)
    delta: float = Field(ge=0)
    eta_norm: float = Field(ge=0)
    dist: float = Field(ge=0)


class ErrorBoundResponse(BaseModel):
    rhs: float


class ThresholdRequest(BaseModel):
    ensemble: Ensemble
    r: int = Field(ge=1)
    n: int = Field(ge=1)
    beta1: Optional[float] = Field(default=None, gt=0, lt=1)


class ThresholdResponse(BaseModel):
    feasible: bool
    floor: float
    beta0: Optional[float] = None
    epsilon0: Optional[float] = None
    epsilon1: Optional[float] = None


class KernelParams(BaseModel):
    patch_radius: int = Field(default=2, ge=0)
    search_radius: int = -1  # -1 selects a full window
    bandwidth: float = Field(default=0.3, gt=0)
    sinkhorn_iters: int = Field(default=2000, ge=1)
    sinkhorn_tol: float = Field(default=1e-10, gt=0)


class DenoiserRequest(BaseModel):
    guide: Optional[list[float]] = None
    synthetic: Literal["scanline", "ecg"] = "scanline"
    n: int = Field(default=128, ge=4)
    rank: Optional[int] = Field(default=None, ge=1)
    kernel: KernelParams = KernelParams()


class DenoiserResponse(BaseModel):
    n: int
    rank: int
    eig_min: float
    eig_max: float
    row_sum_deviation: float
    min_eig_before_clamp: float
    truncation_residual: float
    summary: str


class SolveRequest(BaseModel):
    op_kind: OperatorKind = "gaussian"
    transform: Transform = "walsh_hadamard"
    m: int = Field(ge=1)
    n: int = Field(default=128, ge=4)
    seed: int = Field(default=0, ge=0)
    rank: int = Field(default=20, ge=1)
    guide: Literal["scanline", "ecg"] = "scanline"
    off_range: bool = False
    noise_std: float = Field(default=0.0, ge=0)
    noise_seed: int = Field(default=1, ge=0)
    delta_rule: float = Field(default=0.0, ge=0)
    solver: Literal["direct", "admm"] = "direct"
    admm_iters: int = Field(default=400, ge=1)
    kernel: KernelParams = KernelParams()
    include_signals: bool = False


class SolveResponse(BaseModel):
    status: str
    residual: float
    objective: float
    multiplier: Optional[float] = None
    iterations: int
    feasibility_gap: float
    relative_error: Optional[float] = None
    x_star: Optional[list[float]] = None
    ground_truth: Optional[list[float]] = None


class CampaignRequest(BaseModel):
    config: dict[str, str]
    out_dir: str


class CampaignResponse(BaseModel):
    kind: str
    out_dir: str
    files: list[str]
    summary: list[dict]
