import hashlib
from pathlib import Path

import numpy as np
import pytest

from pnpcs.denoiser import LinearDenoiser


def random_denoiser(rng: np.random.Generator, n: int, rank: int, unit_eigs: int = 0):
    """Random condensed denoiser: orthonormal basis, eigenvalues in (0, 1].

    unit_eigs of the eigenvalues are pinned to exactly 1.
    """
    basis, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(0.05, 0.95, size=rank)
    lam[:unit_eigs] = 1.0
    order = np.argsort(lam)[::-1]
    return LinearDenoiser(
        n=n,
        rank=rank,
        eig_vectors=basis[:, :rank][:, order],
        eig_values=lam[order],
        provenance={"tag": "explicit"},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def _strip_timing_column(text: str) -> str:
    """Drop the trailing ms column of a trial CSV (wall time is not replayable)."""
    lines = text.rstrip("\n").split("\n")
    return "\n".join(line.rsplit(",", 1)[0] for line in lines)


def campaign_fingerprint(out_dir) -> dict[str, str]:
    """SHA-256 of every campaign output; trials.csv hashed without wall times."""
    out_dir = Path(out_dir)
    digest = {}
    for path in sorted(out_dir.glob("*")):
        if not path.is_file():
            continue
        data = path.read_bytes()
        if path.name == "trials.csv":
            data = _strip_timing_column(data.decode()).encode()
        digest[path.name] = hashlib.sha256(data).hexdigest()
    return digest
