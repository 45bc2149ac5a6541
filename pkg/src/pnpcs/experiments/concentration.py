"""Empirical checks of the norm-concentration inequalities behind the bounds.

Three study shapes:

* scalar  - frequency of (1-eps)||x||^2 <= ||Ax||^2 <= (1+eps)||x||^2 for a
  fixed unit vector, against the single-vector lower bound 1 - 2 exp(-m g(eps)).
* subspace - frequency of (1-eps)||z|| <= ||Az|| <= (1+eps)||z|| holding for
  every z in a fixed r-dimensional subspace (checked exactly through the
  extreme singular values of A restricted to the subspace), against the
  covering-argument bound 1 - 2 (12/eps)^r exp(-m g(eps/2)).
* column  - sanity check that Rademacher columns have unit norm exactly.

All checks are one-sided: the empirical frequency (its Wilson lower edge)
must dominate the theoretical lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..bounds import concentration_exponent
from ..sensing import make_gaussian, make_rademacher
from .config import CampaignConfig, write_manifest
from .records import fmt, wilson_interval

__all__ = ["ConcentrationStudy", "run_concentration", "default_studies"]

STUDY_HEADER = (
    "study,ensemble,m,n,r,epsilon,draws,successes,frequency,wilson_lo,bound,dominated"
)


@dataclass
class ConcentrationStudy:
    study: str
    ensemble: str
    m: int
    n: int
    r: int
    epsilon: float
    draws: int
    successes: int
    frequency: float
    wilson_lo: float
    bound: float
    dominated: bool

    def csv_row(self) -> str:
        return ",".join(
            fmt(v)
            if not isinstance(v, str)
            else v
            for v in [
                self.study,
                self.ensemble,
                self.m,
                self.n,
                self.r,
                self.epsilon,
                self.draws,
                self.successes,
                self.frequency,
                self.wilson_lo,
                self.bound,
                self.dominated,
            ]
        )


def _maker(ensemble: str):
    return make_gaussian if ensemble == "gaussian" else make_rademacher


def _fixed_unit_vector(n: int, master_seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0xF1]))
    x = rng.standard_normal(n)
    return x / np.linalg.norm(x)


def _fixed_subspace(n: int, r: int, master_seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([master_seed, 0xF2]))
    basis, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return basis


def scalar_study(
    ensemble: str, m: int, n: int, epsilon: float, draws: int, master_seed: int
) -> ConcentrationStudy:
    x = _fixed_unit_vector(n, master_seed)
    make = _maker(ensemble)
    seeds = np.random.SeedSequence([master_seed, 0xA1]).generate_state(draws, dtype=np.uint64)
    wins = 0
    for seed in seeds:
        energy = float(np.sum(make(m, n, int(seed)).apply(x) ** 2))
        wins += (1.0 - epsilon) <= energy <= (1.0 + epsilon)
    bound = 1.0 - 2.0 * np.exp(-m * concentration_exponent(ensemble, epsilon))
    lo, _ = wilson_interval(wins, draws)
    return ConcentrationStudy(
        study="scalar",
        ensemble=ensemble,
        m=m,
        n=n,
        r=1,
        epsilon=epsilon,
        draws=draws,
        successes=wins,
        frequency=wins / draws,
        wilson_lo=lo,
        bound=float(bound),
        dominated=lo >= bound,
    )


def subspace_study(
    ensemble: str, m: int, n: int, r: int, epsilon: float, draws: int, master_seed: int
) -> ConcentrationStudy:
    basis = _fixed_subspace(n, r, master_seed)
    make = _maker(ensemble)
    seeds = np.random.SeedSequence([master_seed, 0xA2]).generate_state(draws, dtype=np.uint64)
    wins = 0
    for seed in seeds:
        restricted = make(m, n, int(seed)).dense_entries @ basis
        svals = np.linalg.svd(restricted, compute_uv=False)
        wins += svals[-1] >= (1.0 - epsilon) and svals[0] <= (1.0 + epsilon)
    bound = 1.0 - 2.0 * (12.0 / epsilon) ** r * np.exp(
        -m * concentration_exponent(ensemble, epsilon / 2.0)
    )
    lo, _ = wilson_interval(wins, draws)
    return ConcentrationStudy(
        study="subspace",
        ensemble=ensemble,
        m=m,
        n=n,
        r=r,
        epsilon=epsilon,
        draws=draws,
        successes=wins,
        frequency=wins / draws,
        wilson_lo=lo,
        bound=float(bound),
        dominated=lo >= bound,
    )


def column_norm_study(m: int, n: int, draws: int, master_seed: int) -> ConcentrationStudy:
    """Rademacher columns have exactly unit norm: ||A e_1||^2 == 1 every draw."""
    seeds = np.random.SeedSequence([master_seed, 0xA3]).generate_state(draws, dtype=np.uint64)
    basis = np.zeros(n)
    basis[0] = 1.0
    wins = 0
    for seed in seeds:
        energy = float(np.sum(make_rademacher(m, n, int(seed)).apply(basis) ** 2))
        wins += abs(energy - 1.0) <= 1e-12
    lo, _ = wilson_interval(wins, draws)
    return ConcentrationStudy(
        study="column_norm",
        ensemble="rademacher",
        m=m,
        n=n,
        r=1,
        epsilon=0.0,
        draws=draws,
        successes=wins,
        frequency=wins / draws,
        wilson_lo=lo,
        bound=1.0,
        dominated=wins == draws,
    )


def default_studies(draws: int, master_seed: int) -> list[ConcentrationStudy]:
    """The point set the acceptance suite checks, plus one nontrivial subspace bound."""
    return [
        scalar_study("gaussian", m=200, n=64, epsilon=0.5, draws=draws, master_seed=master_seed),
        column_norm_study(m=200, n=64, draws=min(draws, 1000), master_seed=master_seed),
        subspace_study(
            "gaussian", m=400, n=16, r=2, epsilon=0.5, draws=draws, master_seed=master_seed
        ),
        subspace_study(
            "gaussian", m=400, n=16, r=2, epsilon=0.75, draws=draws, master_seed=master_seed
        ),
    ]


def run_concentration(cfg: CampaignConfig, out_dir) -> list[ConcentrationStudy]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    studies = default_studies(cfg.draws, cfg.master_seed)
    lines = [STUDY_HEADER] + [s.csv_row() for s in studies]
    (out_dir / "concentration.csv").write_text("\n".join(lines) + "\n")
    write_manifest(out_dir / "manifest.txt", cfg)
    return studies
