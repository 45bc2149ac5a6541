"""Campaign configuration: a flat key=value text format and its manifest twin.

The manifest written next to campaign outputs is itself a valid config file
(environment versions ride along as comments), so any run can be reproduced
with `campaign --config <manifest>`.
"""

from __future__ import annotations

import platform
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

__all__ = ["CampaignConfig", "parse_config_text", "read_config", "write_manifest"]

KINDS = ("phase_gaussian", "exact_rademacher", "robust", "structured", "concentration", "ecg")
ENSEMBLES = ("gaussian", "rademacher", "structured")
CRITERIA = ("rel_err", "psnr_db")


def _parse_int_list(text: str) -> tuple[int, ...]:
    """Comma-separated ints; `lo:hi` and `lo:hi:step` expand inclusively."""
    values: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if ":" in token:
            parts = [int(p) for p in token.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError(f"bad range token {token!r}")
            if step < 1 or hi < lo:
                raise ValueError(f"bad range token {token!r}")
            values.extend(range(lo, hi + 1, step))
        else:
            values.append(int(token))
    if not values:
        raise ValueError("empty integer list")
    return tuple(values)


@dataclass
class CampaignConfig:
    """Everything a Monte Carlo campaign needs, reproducibility included."""

    kind: str
    n: int = 128
    r_values: tuple[int, ...] = (20,)
    m_values: tuple[int, ...] = (10, 20, 30)
    trials: int = 100
    master_seed: int = 7
    ensemble: str = "gaussian"
    transform: str = "walsh_hadamard"
    criterion: str = "rel_err"
    threshold: float = 1e-6
    noise_std: float = 0.0
    delta_rule: float = 0.0
    epsilon: float = 0.8
    beta: float = 0.1
    guide: str = "scanline"
    solver: str = "direct"
    admm_iters: int = 400
    patch_radius: int = 2
    search_radius: int = -1  # -1 means a full search window
    bandwidth: float = 0.3
    sinkhorn_tol: float = 1e-10
    workers: int = 0  # 0 means one worker per core
    draws: int = 10000  # concentration campaigns
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.threshold <= 0:
            raise ValueError("threshold must be > 0")
        if self.criterion not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.ensemble not in ENSEMBLES:
            raise ValueError(f"ensemble must be one of {ENSEMBLES}")
        if self.solver not in ("direct", "admm"):
            raise ValueError("solver must be direct or admm")
        if any(m < 1 for m in self.m_values):
            raise ValueError("m values must be >= 1")
        if any(m > self.n for m in self.m_values):
            raise ValueError("m values must not exceed n")
        if any(r < 1 or r > self.n for r in self.r_values):
            raise ValueError("r values must lie in [1, n]")
        if self.master_seed < 0:
            raise ValueError("master_seed must be >= 0")
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 selects one per core)")

    @property
    def effective_search_radius(self) -> int:
        return self.n if self.search_radius < 0 else self.search_radius

    @property
    def effective_workers(self) -> int:
        import os

        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_items(self) -> list[tuple[str, str]]:
        """Canonical key=value pairs (sorted), used for manifests."""
        items = []
        for f in fields(self):
            if f.name == "extras":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                text = ",".join(str(v) for v in value)
            elif isinstance(value, float):
                text = f"{value:.12g}"
            else:
                text = str(value)
            items.append((f.name, text))
        items.extend(sorted((str(k), str(v)) for k, v in self.extras.items()))
        return sorted(items)


_FIELD_PARSERS = {
    "kind": str,
    "n": int,
    "r_values": _parse_int_list,
    "m_values": _parse_int_list,
    "trials": int,
    "master_seed": int,
    "ensemble": str,
    "transform": str,
    "criterion": str,
    "threshold": float,
    "noise_std": float,
    "delta_rule": float,
    "epsilon": float,
    "beta": float,
    "guide": str,
    "solver": str,
    "admm_iters": int,
    "patch_radius": int,
    "search_radius": int,
    "bandwidth": float,
    "sinkhorn_tol": float,
    "workers": int,
    "draws": int,
}


def parse_config_text(text: str, overrides: dict | None = None) -> CampaignConfig:
    """Parse `key=value` lines (# starts a comment) into a CampaignConfig."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        raw[key.strip()] = value.strip()
    if overrides:
        raw.update({str(k): str(v) for k, v in overrides.items()})
    if "kind" not in raw:
        raise ValueError("config must set kind")
    kwargs = {}
    extras = {}
    for key, value in raw.items():
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            extras[key] = value
        else:
            kwargs[key] = parser(value)
    return CampaignConfig(extras=extras, **kwargs)


def read_config(path, overrides: dict | None = None) -> CampaignConfig:
    return parse_config_text(Path(path).read_text(), overrides)


def write_manifest(path: Path, cfg: CampaignConfig, derived: dict | None = None) -> Path:
    """Write the effective configuration plus environment pins beside outputs."""
    from .. import __version__

    lines = ["# campaign manifest: pass this file back to --config to reproduce"]
    lines.append(f"# pnpcs_version={__version__}")
    lines.append(f"# numpy_version={np.__version__}")
    lines.append(f"# python_version={platform.python_version()}")
    for key, value in cfg.to_items():
        lines.append(f"{key}={value}")
    for key, value in sorted((derived or {}).items()):
        lines.append(f"# derived: {key}={value}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
