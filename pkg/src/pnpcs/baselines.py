"""Reference reconstruction algorithms: CoSaMP and an l1 (LASSO) solver.

These serve as surrogate generators and comparison baselines for the recovery
experiments; neither depends on the denoiser machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sensing import SensingOperator

__all__ = ["SparseEstimate", "cosamp", "lasso_ista", "soft_threshold"]


@dataclass
class SparseEstimate:
    """Sparse reconstruction with its support and residual trace."""

    x_hat: np.ndarray
    support: np.ndarray
    iterations: int
    residual_history: list = field(default_factory=list)
    ridge_flagged: bool = False


def _top_indices(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the `count` largest magnitudes; ties broken by lowest index."""
    order = np.argsort(-np.abs(values), kind="stable")
    return np.sort(order[: max(count, 0)])


def _restricted_lstsq(cols: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    solution, _, rank, _ = np.linalg.lstsq(cols, b, rcond=None)
    if rank < cols.shape[1]:
        # rank-deficient merged support: fall back to a tiny ridge
        gram = cols.T @ cols + 1e-10 * np.eye(cols.shape[1])
        return np.linalg.solve(gram, cols.T @ b), True
    return solution, False


def cosamp(op: SensingOperator, b: np.ndarray, sparsity: int, iters: int = 20) -> SparseEstimate:
    """Compressive sampling matching pursuit.

    Each iteration merges the current support with the 2s largest entries of
    the adjoint of the residual, solves least squares on the merged support,
    prunes to the s largest coefficients, and updates the residual.  Stops
    early once the residual falls below 1e-10 * ||b||.
    """
    if not 1 <= sparsity <= op.n // 3:
        raise ValueError("sparsity must satisfy 1 <= s <= n/3")
    b = np.asarray(b, dtype=float)
    x = np.zeros(op.n)
    residual = b.copy()
    b_norm = float(np.linalg.norm(b))
    history = [float(np.linalg.norm(residual))]
    ridge_flagged = False
    support = np.array([], dtype=int)
    done = 0

    for k in range(iters):
        if history[-1] <= 1e-10 * b_norm:
            break
        proxy = op.adjoint(residual)
        merged = np.union1d(support, _top_indices(proxy, 2 * sparsity))
        cols = op.columns(merged)
        coef, flagged = _restricted_lstsq(cols, b)
        ridge_flagged = ridge_flagged or flagged
        keep = _top_indices(coef, min(sparsity, merged.size))
        support = merged[keep]
        x = np.zeros(op.n)
        x[support] = coef[keep]
        residual = b - op.apply(x)
        history.append(float(np.linalg.norm(residual)))
        done = k + 1

    return SparseEstimate(
        x_hat=x,
        support=np.sort(support),
        iterations=done,
        residual_history=history,
        ridge_flagged=ridge_flagged,
    )


def soft_threshold(values: np.ndarray, level: float) -> np.ndarray:
    return np.sign(values) * np.maximum(np.abs(values) - level, 0.0)


def _operator_norm_sq(op: SensingOperator, iters: int = 200) -> float:
    rng = np.random.default_rng(872633)
    v = rng.standard_normal(op.n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = op.adjoint(op.apply(v))
        lam_new = float(v @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(lam_new - lam) <= 1e-14 * max(1.0, lam_new):
            return lam_new * 1.02
        lam = lam_new
    return lam * 1.02


def lasso_ista(
    op: SensingOperator,
    b: np.ndarray,
    lam: float,
    iters: int = 500,
    return_history: bool = False,
):
    """ISTA for 0.5||Ax - b||^2 + lam * ||x||_1 with step 1/L (power iteration).

    The objective is nonincreasing along the iterates; with `return_history`
    the tracked values are returned alongside the estimate.
    """
    b = np.asarray(b, dtype=float)
    if lam < 0:
        raise ValueError("lam must be >= 0")
    L = _operator_norm_sq(op)
    tau = 1.0 / L if L > 0 else 1.0
    x = np.zeros(op.n)

    def objective(vec: np.ndarray) -> float:
        return float(0.5 * np.sum((op.apply(vec) - b) ** 2) + lam * np.sum(np.abs(vec)))

    history = [objective(x)]
    for _ in range(iters):
        grad = op.adjoint(op.apply(x) - b)
        x = soft_threshold(x - tau * grad, tau * lam)
        history.append(objective(x))
    if return_history:
        return x, history
    return x


def lasso_fixed_point_gap(op: SensingOperator, b: np.ndarray, lam: float, x: np.ndarray) -> float:
    """||x - S_{tau*lam}(x - tau A^T(Ax - b))||, the ISTA fixed-point residual."""
    L = _operator_norm_sq(op)
    tau = 1.0 / L if L > 0 else 1.0
    grad = op.adjoint(op.apply(x) - b)
    return float(np.linalg.norm(x - soft_threshold(x - tau * grad, tau * lam)))
