"""Compressed sensing with plug-and-play symmetric linear denoisers.

Subpackages: denoiser construction and the induced regularizer, random
sensing operators, reduced-space and ADMM recovery solvers, sparse baselines,
closed-form sample-complexity bounds, and reproducible experiment campaigns.
"""

__version__ = "0.1.0"

from . import baselines, bounds, denoiser, recovery, sensing, signals
from .denoiser import GuideKernelConfig, LinearDenoiser, build_dsg_nlm, truncate_rank
from .recovery import (
    RecoverySolution,
    kkt_check,
    pnp_ista,
    solve_exact,
    solve_robust_admm,
    solve_robust_direct,
)
from .sensing import SensingOperator, make_gaussian, make_rademacher, make_structured

__all__ = [
    "GuideKernelConfig",
    "LinearDenoiser",
    "RecoverySolution",
    "SensingOperator",
    "__version__",
    "baselines",
    "bounds",
    "build_dsg_nlm",
    "denoiser",
    "kkt_check",
    "make_gaussian",
    "make_rademacher",
    "make_structured",
    "pnp_ista",
    "recovery",
    "sensing",
    "signals",
    "solve_exact",
    "solve_robust_admm",
    "solve_robust_direct",
    "truncate_rank",
]
