"""Trial records, probability grids and the CSV formats campaigns emit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "TrialRecord",
    "CellSummary",
    "PhaseGrid",
    "wilson_interval",
    "psnr_db",
    "fmt",
    "TRIAL_HEADER",
    "SUMMARY_HEADER",
    "write_trials_csv",
    "write_summary_csv",
    "write_curves",
]

TRIAL_HEADER = "r,m,trial,seed,success,rel_err,psnr_db,residual,status,ms"
SUMMARY_HEADER = "r,m,trials,successes,prob,wilson_lo,wilson_hi,mean_rel_err,mean_residual"

WILSON_Z = 1.96  # two-sided 95%


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = p + z * z / (2 * trials)
    radius = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials))
    return (center - radius) / denom, (center + radius) / denom


def psnr_db(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Peak signal-to-noise ratio assuming unit peak ([0, 1]-scaled signals)."""
    mse = float(np.mean((np.asarray(estimate) - np.asarray(reference)) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def fmt(value) -> str:
    """Canonical CSV rendering: %.12g floats, bare ints, inf spelled out."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


@dataclass
class TrialRecord:
    """One Monte Carlo trial: cell, seed, outcome and solver diagnostics."""

    r: int
    m: int
    trial: int
    seed: int
    success: bool
    rel_err: float
    psnr_db: float
    residual: float
    status: str
    ms: float

    def csv_row(self) -> str:
        return ",".join(
            [
                fmt(self.r),
                fmt(self.m),
                fmt(self.trial),
                fmt(self.seed),
                fmt(self.success),
                fmt(self.rel_err),
                fmt(self.psnr_db),
                fmt(self.residual),
                self.status,
                fmt(self.ms),
            ]
        )


@dataclass
class CellSummary:
    r: int
    m: int
    trials: int
    successes: int
    prob: float
    wilson_lo: float
    wilson_hi: float
    mean_rel_err: float
    mean_residual: float

    def csv_row(self) -> str:
        return ",".join(
            fmt(v)
            for v in [
                self.r,
                self.m,
                self.trials,
                self.successes,
                self.prob,
                self.wilson_lo,
                self.wilson_hi,
                self.mean_rel_err,
                self.mean_residual,
            ]
        )


@dataclass
class PhaseGrid:
    """Empirical success probabilities over the (r, m) grid."""

    r_values: tuple[int, ...]
    m_values: tuple[int, ...]
    trials: int
    cells: list[CellSummary]

    def probability(self, r: int, m: int) -> float:
        for cell in self.cells:
            if cell.r == r and cell.m == m:
                return cell.prob
        raise KeyError(f"no cell ({r}, {m})")

    def curve(self, r: int) -> list[tuple[int, float]]:
        return [(c.m, c.prob) for c in self.cells if c.r == r]

    def wilson_edges(self, r: int) -> list[tuple[int, float, float]]:
        return [(c.m, c.wilson_lo, c.wilson_hi) for c in self.cells if c.r == r]


def summarize_cells(records: list[TrialRecord]) -> list[CellSummary]:
    cells: dict[tuple[int, int], list[TrialRecord]] = {}
    for rec in records:
        cells.setdefault((rec.r, rec.m), []).append(rec)
    out = []
    for (r, m) in sorted(cells):
        group = cells[(r, m)]
        wins = sum(rec.success for rec in group)
        lo, hi = wilson_interval(wins, len(group))
        out.append(
            CellSummary(
                r=r,
                m=m,
                trials=len(group),
                successes=wins,
                prob=wins / len(group),
                wilson_lo=lo,
                wilson_hi=hi,
                mean_rel_err=float(np.mean([rec.rel_err for rec in group])),
                mean_residual=float(np.mean([rec.residual for rec in group])),
            )
        )
    return out


def write_trials_csv(path: Path, records: list[TrialRecord]) -> None:
    ordered = sorted(records, key=lambda rec: (rec.r, rec.m, rec.trial))
    lines = [TRIAL_HEADER] + [rec.csv_row() for rec in ordered]
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_csv(path: Path, cells: list[CellSummary]) -> None:
    lines = [SUMMARY_HEADER] + [cell.csv_row() for cell in cells]
    Path(path).write_text("\n".join(lines) + "\n")


def write_curves(out_dir: Path, grid: PhaseGrid, stem: str = "curve") -> list[Path]:
    """One (m, probability) plot-data file per r, plus the full grid table."""
    out_dir = Path(out_dir)
    paths = []
    for r in grid.r_values:
        path = out_dir / f"{stem}_r{r}.csv"
        lines = ["m,probability"] + [f"{fmt(m)},{fmt(p)}" for m, p in grid.curve(r)]
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    grid_path = out_dir / "grid.csv"
    lines = ["r,m,probability"] + [
        f"{fmt(c.r)},{fmt(c.m)},{fmt(c.prob)}" for c in grid.cells
    ]
    grid_path.write_text("\n".join(lines) + "\n")
    paths.append(grid_path)
    return paths
