"""Symmetric linear denoisers and the convex regularizer they induce.

A denoiser here is a symmetric matrix W with spectrum in [0, 1], stored in
condensed eigenform W = U diag(lam) U^T with only the strictly positive
eigenvalues kept.  Applying W is the proximal map of the convex penalty

    0.5 * x^T (I - W) W^+ x   on range(W),   +inf elsewhere,

which is what makes these denoisers usable as plug-in regularizers inside
proximal algorithms.  The module builds such matrices two ways: a
doubly-stochastic non-local-means kernel (symmetric Sinkhorn scaling of a
Gaussian patch kernel) and spectral truncation of an existing denoiser.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

RANGE_TOL = 1e-8
EIG_DROP_TOL = 1e-12

__all__ = [
    "GuideKernelConfig",
    "LinearDenoiser",
    "SinkhornError",
    "build_dsg_nlm",
    "truncate_rank",
    "load_denoiser",
]


class SinkhornError(RuntimeError):
    """Sinkhorn scaling did not reach the requested row-sum tolerance."""

    def __init__(self, iterations: int, deviation: float):
        super().__init__(
            f"sinkhorn scaling did not converge in {iterations} iterations "
            f"(max row-sum deviation {deviation:.3e})"
        )
        self.iterations = iterations
        self.deviation = deviation


@dataclass(frozen=True)
class GuideKernelConfig:
    """Parameters of the guide-driven non-local-means kernel.

    patch_radius and search_radius are in samples (pixels per axis for 2-D
    guides); bandwidth sets the Gaussian falloff of patch similarity in
    intensity units.
    """

    patch_radius: int = 2
    search_radius: int = 10
    bandwidth: float = 0.3
    sinkhorn_iters: int = 2000
    sinkhorn_tol: float = 1e-10

    def __post_init__(self):
        if self.patch_radius < 0 or self.search_radius < 0:
            raise ValueError("radii must be >= 0")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.sinkhorn_tol <= 0:
            raise ValueError("sinkhorn_tol must be > 0")


@dataclass(frozen=True)
class LinearDenoiser:
    """Condensed eigenform of a symmetric denoising matrix.

    Attributes
    ----------
    n : int
        Signal length (flattened length for 2-D guides).
    rank : int
        Number of strictly positive eigenvalues kept.
    eig_vectors : ndarray, shape (n, rank)
        Orthonormal basis of the range.
    eig_values : ndarray, shape (rank,)
        Eigenvalues in (0, 1], sorted descending.
    provenance : dict
        Construction tag and parameters (kernel config, truncation
        residual, pre-clamp spectrum excursions, guide hash).
    """

    n: int
    rank: int
    eig_vectors: np.ndarray
    eig_values: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        U = np.ascontiguousarray(np.atleast_2d(np.asarray(self.eig_vectors, dtype=float)))
        lam = np.ascontiguousarray(np.asarray(self.eig_values, dtype=float).ravel())
        if U.shape != (self.n, self.rank):
            raise ValueError(f"eig_vectors must be ({self.n}, {self.rank}), got {U.shape}")
        if lam.shape != (self.rank,):
            raise ValueError("eig_values length must equal rank")
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        gram_dev = np.max(np.abs(U.T @ U - np.eye(self.rank)))
        if gram_dev > 1e-10:
            raise ValueError(f"eigenvector columns not orthonormal (deviation {gram_dev:.3e})")
        if np.any(lam <= 0) or np.any(lam > 1 + 1e-12):
            raise ValueError("eigenvalues must lie in (0, 1]")
        lam = np.minimum(lam, 1.0)
        U.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "eig_vectors", U)
        object.__setattr__(self, "eig_values", lam)

    # -- linear algebra on the condensed form ------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Denoise x, i.e. compute W x = U diag(lam) U^T x."""
        x = np.asarray(x, dtype=float)
        return self.eig_vectors @ (self.eig_values * (self.eig_vectors.T @ x))

    def project_range(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection of x onto range(W)."""
        x = np.asarray(x, dtype=float)
        return self.eig_vectors @ (self.eig_vectors.T @ x)

    def dist_range(self, x: np.ndarray) -> float:
        """Euclidean distance from x to range(W)."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project_range(x)))

    def in_range(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return self.dist_range(x) <= RANGE_TOL * max(float(np.linalg.norm(x)), 1.0)

    def regularizer(self, x: np.ndarray) -> float:
        """Value of the induced convex penalty at x.

        Returns 0.5 * z^T (diag(1/lam) - I) z with z = U^T x when x lies in
        range(W) (membership decided at RANGE_TOL relative to max(|x|, 1)),
        and math.inf otherwise.  The denoiser is the exact proximal map of
        this function, which tests verify against a constrained-QP oracle.
        """
        x = np.asarray(x, dtype=float)
        if not self.in_range(x):
            return math.inf
        z = self.eig_vectors.T @ x
        return float(0.5 * z @ (self.penalty_weights * z))

    @property
    def penalty_weights(self) -> np.ndarray:
        """Diagonal of the reduced quadratic form: 1/lam - 1, entrywise >= 0."""
        return 1.0 / self.eig_values - 1.0

    def dense(self) -> np.ndarray:
        """Materialize the n-by-n matrix U diag(lam) U^T."""
        return (self.eig_vectors * self.eig_values) @ self.eig_vectors.T

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        """Write a versioned binary container with (n, rank, lam, U, provenance)."""
        np.savez(
            path,
            format_version=np.int64(1),
            n=np.int64(self.n),
            rank=np.int64(self.rank),
            eig_values=self.eig_values,
            eig_vectors=self.eig_vectors,
            provenance=np.frombuffer(
                json.dumps(self.provenance, sort_keys=True).encode(), dtype=np.uint8
            ),
        )

    def summary(self) -> str:
        """Human-readable digest: rank, spectrum histogram, residual."""
        counts, edges = np.histogram(self.eig_values, bins=10, range=(0.0, 1.0))
        lines = [
            f"linear denoiser: n={self.n} rank={self.rank}",
            f"provenance: {self.provenance.get('tag', 'unknown')}",
            f"spectrum: min={self.eig_values.min():.6g} max={self.eig_values.max():.6g}",
        ]
        resid = self.provenance.get("truncation_residual")
        if resid is not None:
            lines.append(f"truncation residual (frobenius): {resid:.6g}")
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            lines.append(f"  ({lo:.1f}, {hi:.1f}]: {c}")
        return "\n".join(lines)


def load_denoiser(path) -> LinearDenoiser:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != 1:
            raise ValueError(f"unsupported denoiser container version {version}")
        provenance = json.loads(bytes(data["provenance"].tobytes()).decode())
        return LinearDenoiser(
            n=int(data["n"]),
            rank=int(data["rank"]),
            eig_vectors=data["eig_vectors"],
            eig_values=data["eig_values"],
            provenance=provenance,
        )


# -- construction -----------------------------------------------------------


def _patch_matrix_1d(guide: np.ndarray, radius: int) -> np.ndarray:
    padded = np.pad(guide, radius)
    return np.stack([padded[i : i + 2 * radius + 1] for i in range(guide.size)])


def _patch_matrix_2d(guide: np.ndarray, radius: int) -> np.ndarray:
    h, w = guide.shape
    padded = np.pad(guide, radius)
    side = 2 * radius + 1
    patches = np.empty((h * w, side * side))
    for i in range(h):
        for j in range(w):
            patches[i * w + j] = padded[i : i + side, j : j + side].ravel()
    return patches


def _window_mask_1d(n: int, search_radius: int) -> np.ndarray:
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :]) <= search_radius


def _window_mask_2d(h: int, w: int, search_radius: int) -> np.ndarray:
    rows = np.repeat(np.arange(h), w)
    cols = np.tile(np.arange(w), h)
    drow = np.abs(rows[:, None] - rows[None, :])
    dcol = np.abs(cols[:, None] - cols[None, :])
    return np.maximum(drow, dcol) <= search_radius


def _condense(dense: np.ndarray, provenance: dict) -> LinearDenoiser:
    """Eigendecompose, clamp the spectrum into [0, 1], drop zeros, record residuals."""
    raw_vals, vecs = np.linalg.eigh(dense)
    vals = np.clip(raw_vals, 0.0, 1.0)
    keep = vals >= EIG_DROP_TOL
    if not np.any(keep):
        raise ValueError("matrix has no eigenvalue above the drop tolerance")
    order = np.argsort(vals[keep])[::-1]
    lam = vals[keep][order]
    U = vecs[:, keep][:, order]
    # max-norm deviation of the condensed form from the input matrix; bounded
    # by the Frobenius norm of the clamped/dropped spectrum deltas
    recon = (U * lam) @ U.T
    deltas = np.where(keep, raw_vals - vals, raw_vals)
    provenance = {
        **provenance,
        "min_eig_before_clamp": float(raw_vals.min()),
        "max_eig_before_clamp": float(raw_vals.max()),
        "reconstruction_dev_max": float(np.max(np.abs(dense - recon))),
        "truncation_residual": float(np.sqrt(np.sum(deltas**2))),
    }
    return LinearDenoiser(
        n=dense.shape[0],
        rank=int(lam.size),
        eig_vectors=U,
        eig_values=lam,
        provenance=provenance,
    )


def build_dsg_nlm(guide: np.ndarray, cfg: GuideKernelConfig = GuideKernelConfig()) -> LinearDenoiser:
    """Build a doubly-stochastic symmetric non-local-means denoiser from a guide.

    The kernel is K_ij = exp(-||P_i - P_j||^2 / h^2) restricted to a search
    window around each sample (patches are zero-padded at boundaries; 2-D
    guides use square neighborhoods and are flattened row-major).  Symmetric
    Sinkhorn scaling W = diag(s) K diag(s) drives every row sum to 1, so W is
    symmetric, entrywise nonnegative and doubly stochastic.  The spectrum is
    then clamped into [0, 1] and condensed.

    Raises
    ------
    ValueError
        Non-finite guide values.
    SinkhornError
        Row sums not within cfg.sinkhorn_tol of 1 after cfg.sinkhorn_iters.
    """
    guide = np.asarray(guide, dtype=float)
    if not np.all(np.isfinite(guide)):
        raise ValueError("guide contains non-finite values")
    if guide.ndim == 1:
        patches = _patch_matrix_1d(guide, cfg.patch_radius)
        mask = _window_mask_1d(guide.size, cfg.search_radius)
    elif guide.ndim == 2:
        patches = _patch_matrix_2d(guide, cfg.patch_radius)
        mask = _window_mask_2d(guide.shape[0], guide.shape[1], cfg.search_radius)
    else:
        raise ValueError("guide must be 1-D or 2-D")

    sq_norms = np.sum(patches**2, axis=1)
    dists = np.maximum(sq_norms[:, None] + sq_norms[None, :] - 2.0 * patches @ patches.T, 0.0)
    kernel = np.where(mask, np.exp(-dists / cfg.bandwidth**2), 0.0)
    kernel = 0.5 * (kernel + kernel.T)

    scale = np.ones(kernel.shape[0])
    deviation = np.inf
    for _ in range(cfg.sinkhorn_iters):
        row = kernel @ scale
        deviation = float(np.max(np.abs(scale * row - 1.0)))
        if deviation <= cfg.sinkhorn_tol:
            break
        scale = np.sqrt(scale / row)
    else:
        raise SinkhornError(cfg.sinkhorn_iters, deviation)

    dense = kernel * np.outer(scale, scale)
    provenance = {
        "tag": "dsg_nlm",
        "patch_radius": cfg.patch_radius,
        "search_radius": cfg.search_radius,
        "bandwidth": cfg.bandwidth,
        "row_sum_deviation": deviation,
        "guide_sha1": hashlib.sha1(np.ascontiguousarray(guide).tobytes()).hexdigest(),
        "guide_shape": list(guide.shape),
    }
    return _condense(dense, provenance)


def from_dense(matrix: np.ndarray, tag: str = "explicit") -> LinearDenoiser:
    """Condense an explicitly given symmetric matrix with spectrum near [0, 1]."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    sym_dev = float(np.max(np.abs(matrix - matrix.T)))
    if sym_dev > 1e-10:
        raise ValueError(f"matrix is not symmetric (deviation {sym_dev:.3e})")
    return _condense(0.5 * (matrix + matrix.T), {"tag": tag})


def truncate_rank(source: LinearDenoiser | np.ndarray, rank: int) -> LinearDenoiser:
    """Keep the eigenpairs with the largest eigenvalues, up to the requested rank.

    Accepts either a condensed denoiser or a dense symmetric matrix.  The
    spectrum is clamped into [0, 1] first; if fewer than `rank` eigenvalues
    survive the positivity cutoff the result has smaller effective rank and is
    flagged in provenance rather than raising.  The Frobenius norm of the
    dropped spectrum is recorded as the truncation residual.
    """
    if isinstance(source, np.ndarray):
        source = from_dense(source)
    if not 1 <= rank <= source.n:
        raise ValueError(f"rank must be in [1, {source.n}]")
    effective = min(rank, source.rank)
    lam = source.eig_values[:effective]
    U = source.eig_vectors[:, :effective]
    dropped = source.eig_values[effective:]
    residual = float(np.sqrt(np.sum(dropped**2)))
    provenance = {
        **source.provenance,
        "tag": "rank_truncated",
        "parent_tag": source.provenance.get("tag", "unknown"),
        "requested_rank": rank,
        "effective_rank_short": bool(effective < rank),
        "truncation_residual": residual,
    }
    return LinearDenoiser(
        n=source.n, rank=effective, eig_vectors=U, eig_values=lam, provenance=provenance
    )
