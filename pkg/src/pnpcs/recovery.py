"""Solvers for subspace-constrained quadratic recovery programs.

Two programs are solved over the range of a linear denoiser W = U diag(lam) U^T:

  equality form:   min x^T (I - W) W^+ x   s.t.  A x = b,        x in range(W)
  ball form:       min x^T (I - W) W^+ x   s.t.  ||A x - b|| <= delta,  x in range(W)

Everything is computed in reduced coordinates x = U z, where the objective
becomes a diagonal quadratic z^T diag(1/lam - 1) z and the constraint matrix
is G = A U.  The ball form is solved by bisection on the Lagrange multiplier
of the active constraint (the scalar secular equation ||G z(mu) - b|| = delta),
and also by an ADMM splitting that touches the denoiser only through its
apply() method, as a plug-in proximal map.  A proximal-gradient iteration
(ISTA with the denoiser plugged in as the shrinkage step) covers the
unconstrained penalized form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoiser import LinearDenoiser
from .sensing import SensingOperator

__all__ = [
    "RecoverySolution",
    "KktReport",
    "solve_exact",
    "solve_robust_direct",
    "solve_robust_admm",
    "pnp_ista",
    "kkt_check",
    "reduced_matrix",
    "step_size_bound",
]

RANK_TOL = 1e-10
KKT_TOL = 1e-7
MU_CAP = 1e18
MAX_BISECT = 200
NULL_WEIGHT_TOL = 1e-12


@dataclass
class RecoverySolution:
    """Solver output: recovered signal plus diagnostics.

    objective is 0.5 * x^T (I - W) W^+ x at the solution; multiplier is the
    scalar for the ball constraint (None for the equality program);
    feasibility_gap is the constraint violation of the returned point.
    """

    x_star: np.ndarray
    objective: float
    residual: float
    multiplier: float | None
    iterations: int
    status: str
    feasibility_gap: float
    info: dict = field(default_factory=dict)

    def to_record(self, ground_truth: np.ndarray | None = None) -> dict:
        record = {
            "status": self.status,
            "residual": self.residual,
            "objective": self.objective,
            "multiplier": self.multiplier,
            "iterations": self.iterations,
            "feasibility_gap": self.feasibility_gap,
        }
        if ground_truth is not None:
            scale = float(np.linalg.norm(ground_truth))
            err = float(np.linalg.norm(self.x_star - np.asarray(ground_truth, dtype=float)))
            record["relative_error"] = err / scale if scale > 0 else err
        return record


def reduced_matrix(op: SensingOperator, d: LinearDenoiser) -> np.ndarray:
    """G = A U, formed column by column through the operator."""
    if op.dense_entries is not None:
        return op.dense_entries @ d.eig_vectors
    return np.column_stack([op.apply(col) for col in d.eig_vectors.T])


def _check_measurements(op: SensingOperator, b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape != (op.out_dim,):
        raise ValueError(f"measurement vector must have shape ({op.out_dim},)")
    return b


def solve_exact(op: SensingOperator, b: np.ndarray, d: LinearDenoiser) -> RecoverySolution:
    """Solve the equality-constrained program over range(W).

    When G = A U has full column rank the feasible set is a single point,
    returned directly from a least-squares solve.  Otherwise the
    equality-constrained QP is solved through its KKT system (minimum-norm
    KKT solution).  A solve whose constraint residual exceeds the feasibility
    tolerance is reported with status "infeasible"; this can only happen when
    b is not in the image of range(W) under A.
    """
    b = _check_measurements(op, b)
    G = reduced_matrix(op, d)
    feas_tol = 1e-8 * (1.0 + float(np.linalg.norm(b)))
    svals = np.linalg.svd(G, compute_uv=False)
    injective = G.shape[0] >= G.shape[1] and svals[-1] > RANK_TOL * svals[0]

    if injective:
        z = np.linalg.lstsq(G, b, rcond=None)[0]
    else:
        weights = d.penalty_weights
        r = G.shape[1]
        kkt = np.zeros((r + G.shape[0], r + G.shape[0]))
        kkt[:r, :r] = 2.0 * np.diag(weights)
        kkt[:r, r:] = G.T
        kkt[r:, :r] = G
        rhs = np.concatenate([np.zeros(r), b])
        z = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:r]

    gap = float(np.linalg.norm(G @ z - b))
    status = "optimal" if gap <= feas_tol else "infeasible"
    return RecoverySolution(
        x_star=d.eig_vectors @ z,
        objective=float(0.5 * z @ (d.penalty_weights * z)),
        residual=gap,
        multiplier=None,
        iterations=1,
        status=status,
        feasibility_gap=gap,
        info={"sigma_min": float(svals[-1]), "sigma_max": float(svals[0]), "injective": injective},
    )


def _secular_solve(
    G: np.ndarray, b: np.ndarray, weights: np.ndarray, delta: float, tol: float
) -> tuple[np.ndarray, float, int, bool]:
    """Bisection on mu for || G z(mu) - b || = delta, z(mu) = (M + mu G'G)^+ mu G'b.

    Assumes the constraint is active at the optimum:  residual(0+) > delta and
    residual(inf) <= delta.  The residual is nonincreasing in mu.  Returns
    (z, mu, evaluations, converged).
    """
    GtG = G.T @ G
    Gtb = G.T @ b
    M = np.diag(weights)

    def z_at(mu: float) -> np.ndarray:
        return np.linalg.lstsq(M + mu * GtG, mu * Gtb, rcond=None)[0]

    def resid(z: np.ndarray) -> float:
        return float(np.linalg.norm(G @ z - b))

    evals = 0
    mu_hi = 1.0
    while True:
        z_hi = z_at(mu_hi)
        evals += 1
        if resid(z_hi) <= delta:
            break
        if mu_hi >= MU_CAP:
            return z_hi, mu_hi, evals, False
        mu_hi = min(mu_hi * 2.0, MU_CAP)

    mu_lo = 0.0
    best = (mu_hi, z_hi)
    for _ in range(MAX_BISECT):
        mu = 0.5 * (mu_lo + mu_hi)
        z = z_at(mu)
        evals += 1
        r = resid(z)
        if abs(r - delta) <= tol:
            return z, mu, evals, True
        if r > delta:
            mu_lo = mu
        else:
            mu_hi = mu
            best = (mu, z)
    return best[1], best[0], evals, False


def solve_robust_direct(
    op: SensingOperator, b: np.ndarray, delta: float, d: LinearDenoiser
) -> RecoverySolution:
    """Solve the ball-constrained program by the scalar secular equation.

    Steps: (1) feasibility check against the least-squares residual of G;
    (2) if a zero-penalty point (supported on the unit-eigenvalue directions)
    is already feasible, return the minimum-norm such point with multiplier 0;
    (3) otherwise the ball constraint is active and mu is found by bisection,
    using that the residual is nonincreasing in mu.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    b = _check_measurements(op, b)
    if delta == 0:
        sol = solve_exact(op, b, d)
        sol.info["delta"] = 0.0
        return sol

    G = reduced_matrix(op, d)
    weights = d.penalty_weights
    b_norm = float(np.linalg.norm(b))
    feas_slack = delta * (1.0 + 1e-8)
    bisect_tol = 1e-10 * (1.0 + b_norm)

    z_ls = np.linalg.lstsq(G, b, rcond=None)[0]
    rho_min = float(np.linalg.norm(G @ z_ls - b))
    if rho_min > feas_slack:
        return RecoverySolution(
            x_star=np.full(d.n, np.nan),
            objective=np.nan,
            residual=rho_min,
            multiplier=None,
            iterations=1,
            status="infeasible",
            feasibility_gap=rho_min - delta,
            info={"rho_min": rho_min},
        )

    # zero-penalty directions: eigenvalue-one coordinates of the denoiser
    null_idx = np.flatnonzero(weights <= NULL_WEIGHT_TOL)
    if null_idx.size:
        G_null = G[:, null_idx]
        z_null_ls = np.linalg.lstsq(G_null, b, rcond=None)[0]
        rho_null = float(np.linalg.norm(G_null @ z_null_ls - b))
    else:
        rho_null = b_norm

    if rho_null <= feas_slack:
        z = np.zeros(G.shape[1])
        iterations = 1
        if b_norm > feas_slack:
            # minimum-norm point of the zero-penalty feasible set: the ball
            # constraint is active there, so reuse the secular machinery with
            # identity weights on the supported coordinates
            z_sub, _, iterations, _ = _secular_solve(
                G[:, null_idx], b, np.ones(null_idx.size), delta, bisect_tol
            )
            z[null_idx] = z_sub
        x = d.eig_vectors @ z
        resid = float(np.linalg.norm(G @ z - b))
        return RecoverySolution(
            x_star=x,
            objective=float(0.5 * z @ (weights * z)),
            residual=resid,
            multiplier=0.0,
            iterations=iterations,
            status="optimal",
            feasibility_gap=max(0.0, resid - delta),
            info={"rho_min": rho_min, "active": False},
        )

    z, mu, evals, converged = _secular_solve(G, b, weights, delta, bisect_tol)
    resid = float(np.linalg.norm(G @ z - b))
    return RecoverySolution(
        x_star=d.eig_vectors @ z,
        objective=float(0.5 * z @ (weights * z)),
        residual=resid,
        multiplier=float(mu),
        iterations=evals,
        status="optimal" if converged else "max_iters",
        feasibility_gap=max(0.0, resid - delta),
        info={"rho_min": rho_min, "active": True},
    )


def _ball_projection(point: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    offset = point - center
    norm = float(np.linalg.norm(offset))
    if norm <= radius:
        return point.copy()
    return center + offset * (radius / norm)


def solve_robust_admm(
    op: SensingOperator,
    b: np.ndarray,
    delta: float,
    d: LinearDenoiser,
    iters: int = 400,
    rho: float = 1.0,
    tol: float = 1e-12,
    warm_start: tuple[np.ndarray, float] | None = None,
) -> RecoverySolution:
    """Plug-in ADMM for the ball-constrained program.

    Splitting: min penalty(z1) + indicator_ball(z2) subject to [I; A] x =
    [z1; z2], with scaled duals (u1, u2).  One iteration:

        x  <- (I + A^T A)^{-1} ((z1 - u1) + A^T (z2 - u2))
        z1 <- W (x + u1)                    # black-box denoiser = prox of penalty
        z2 <- project_ball(A x + u2; b, delta)
        u1 <- u1 + x - z1
        u2 <- u2 + A x - z2

    The x-solve uses the Woodbury identity, factoring I + A A^T once.
    Because the denoiser is plugged in at unit proximal scale, the iterates
    are invariant to `rho`: plugging the unit-scale proximal map amounts to
    rescaling the penalty by rho, which moves no constrained minimizer.  The
    parameter is validated and recorded for diagnostics.

    Divergence (primal residual growing 10x over a 50-iteration window) stops
    the loop with status "max_iters" and diagnostics in `info`.

    warm_start, when given, is (x0, mu0) with x0 in range(W); the duals are
    initialized at the corresponding KKT point, which makes a solved instance
    an immediate fixed point.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if rho <= 0:
        raise ValueError("rho must be > 0")
    b = _check_measurements(op, b)
    A = op.materialize()
    rows = A.shape[0]
    gram_inv = np.linalg.inv(np.eye(rows) + A @ A.T)
    b_norm = float(np.linalg.norm(b))
    stop_tol = tol * (1.0 + b_norm)

    if warm_start is not None:
        x0, mu0 = warm_start
        z1 = np.asarray(x0, dtype=float).copy()
        z2 = A @ z1
        u2 = mu0 * (z2 - b)
        u1 = -(A.T @ u2)
    else:
        z1 = np.zeros(op.n)
        z2 = np.zeros(rows)
        u1 = np.zeros(op.n)
        u2 = np.zeros(rows)

    primal_hist: list[float] = []
    dual_hist: list[float] = []
    status = "max_iters"
    it_done = 0
    for k in range(iters):
        w = (z1 - u1) + A.T @ (z2 - u2)
        x = w - A.T @ (gram_inv @ (A @ w))
        Ax = A @ x
        z1_new = d.apply(x + u1)
        z2_new = _ball_projection(Ax + u2, b, delta)
        u1 = u1 + x - z1_new
        u2 = u2 + Ax - z2_new
        primal = max(float(np.linalg.norm(x - z1_new)), float(np.linalg.norm(Ax - z2_new)))
        dual = max(float(np.linalg.norm(z1_new - z1)), float(np.linalg.norm(z2_new - z2)))
        z1, z2 = z1_new, z2_new
        primal_hist.append(primal)
        dual_hist.append(dual)
        it_done = k + 1
        if primal <= stop_tol and dual <= stop_tol:
            status = "optimal"
            break
        if k >= 50 and primal > 10.0 * primal_hist[k - 50] and primal > stop_tol * 1e3:
            status = "max_iters"
            break

    z = d.eig_vectors.T @ z1
    resid = float(np.linalg.norm(op.apply(z1) - b))
    mu_est = float(np.linalg.norm(u2) / delta) if delta > 0 else None
    return RecoverySolution(
        x_star=z1,
        objective=float(0.5 * z @ (d.penalty_weights * z)),
        residual=resid,
        multiplier=mu_est,
        iterations=it_done,
        status=status,
        feasibility_gap=max(0.0, resid - delta),
        info={
            "rho": rho,
            "primal_residuals": primal_hist,
            "dual_residuals": dual_hist,
        },
    )


def step_size_bound(op: SensingOperator, d: LinearDenoiser, iters: int = 200) -> float:
    """Power-iteration estimate of the largest squared singular value of A U.

    A 2% safety margin is added so that 1/L is a valid proximal-gradient step
    even though power iteration approaches the true value from below.
    """
    G = reduced_matrix(op, d)
    gram = G.T @ G
    rng = np.random.default_rng(20230517)
    v = rng.standard_normal(G.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = gram @ v
        lam_new = float(v @ w)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(lam_new - lam) <= 1e-14 * max(1.0, lam_new):
            lam = lam_new
            break
        lam = lam_new
    return lam * 1.02


def pnp_ista(
    op: SensingOperator,
    b: np.ndarray,
    d: LinearDenoiser,
    lam: float | None = None,
    tau: float | None = None,
    iters: int = 500,
    x0: np.ndarray | None = None,
    return_history: bool = False,
):
    """Proximal-gradient iteration with the denoiser as the plug-in shrinkage.

    Iterates x <- W(x - tau * A^T(A x - b)).  Because the denoiser is the
    proximal map of the penalty at unit scale, a step size tau corresponds to
    minimizing 0.5||Ax - b||^2 + (1/tau) * penalty(x); equivalently, the
    penalty strength lam and the step are the same knob, lam = 1/tau.  Exactly
    one of (lam, tau) may be given; the default step is 1/L with L the
    power-iteration bound on ||A U||^2.  tau must lie in (0, 1/L]; values
    outside are rejected.  The composite objective is tracked and is
    nonincreasing (up to 1e-12 slack) for any valid step.
    """
    b = _check_measurements(op, b)
    L = step_size_bound(op, d)
    if lam is not None and tau is not None:
        if abs(lam * tau - 1.0) > 1e-9:
            raise ValueError("lam and tau are reciprocals; give one or consistent values")
    if tau is None:
        tau = (1.0 / lam) if lam is not None else (1.0 / L if L > 0 else 1.0)
    if not 0.0 < tau <= (1.0 / L if L > 0 else np.inf) * (1.0 + 1e-9):
        raise ValueError(f"tau must lie in (0, {1.0 / L if L > 0 else np.inf:.6g}]")

    x = np.zeros(op.n) if x0 is None else d.project_range(np.asarray(x0, dtype=float))
    strength = 1.0 / tau

    def objective(vec: np.ndarray) -> float:
        return float(
            0.5 * np.sum((op.apply(vec) - b) ** 2) + strength * d.regularizer(vec)
        )

    history = [objective(x)]
    for _ in range(iters):
        grad = op.adjoint(op.apply(x) - b)
        x = d.apply(x - tau * grad)
        history.append(objective(x))
    if return_history:
        return x, history
    return x


@dataclass
class KktReport:
    """First-order optimality audit of a ball-program solution."""

    stationarity_residual: float
    stationarity_ok: bool
    primal_residual: float
    primal_ok: bool
    multiplier: float | None
    multiplier_ok: bool
    complementary_slackness: float
    complementary_ok: bool
    range_distance: float
    range_ok: bool

    @property
    def passed(self) -> bool:
        return (
            self.stationarity_ok
            and self.primal_ok
            and self.multiplier_ok
            and self.complementary_ok
            and self.range_ok
        )


def kkt_check(
    op: SensingOperator,
    b: np.ndarray,
    delta: float,
    d: LinearDenoiser,
    sol: RecoverySolution,
    tol: float = KKT_TOL,
) -> KktReport:
    """Verify stationarity, feasibility, sign and complementary slackness.

    For delta > 0 the scalar-multiplier conditions are checked:
    ||M z + mu G^T (G z - b)|| small, ||G z - b|| <= delta, mu >= 0 and
    mu * (||G z - b|| - delta) ~ 0.  For delta = 0 stationarity is checked
    against the best vector multiplier, M z + G^T nu = 0.
    """
    b = _check_measurements(op, b)
    x = np.asarray(sol.x_star, dtype=float)
    range_dist = d.dist_range(x)
    range_ok = range_dist <= 1e-8 * max(float(np.linalg.norm(x)), 1.0)
    z = d.eig_vectors.T @ x
    G = reduced_matrix(op, d)
    weights = d.penalty_weights
    Mz = weights * z
    resid_vec = G @ z - b
    primal_residual = float(np.linalg.norm(resid_vec))

    if delta > 0:
        mu = sol.multiplier if sol.multiplier is not None else 0.0
        pull = G.T @ resid_vec
        scale = 1.0 + float(np.linalg.norm(Mz)) + abs(mu) * (float(np.linalg.norm(pull)) + delta)
        stat = float(np.linalg.norm(Mz + mu * pull))
        comp = abs(mu * (primal_residual - delta))
        return KktReport(
            stationarity_residual=stat,
            stationarity_ok=stat <= tol * scale,
            primal_residual=primal_residual,
            primal_ok=primal_residual <= delta * (1.0 + 1e-8),
            multiplier=mu,
            multiplier_ok=mu >= 0,
            complementary_slackness=comp,
            complementary_ok=comp <= tol * scale,
            range_distance=range_dist,
            range_ok=range_ok,
        )

    nu = np.linalg.lstsq(G.T, -Mz, rcond=None)[0]
    stat = float(np.linalg.norm(Mz + G.T @ nu))
    scale = 1.0 + float(np.linalg.norm(Mz))
    feas_tol = 1e-8 * (1.0 + float(np.linalg.norm(b)))
    return KktReport(
        stationarity_residual=stat,
        stationarity_ok=stat <= tol * scale,
        primal_residual=primal_residual,
        primal_ok=primal_residual <= feas_tol,
        multiplier=None,
        multiplier_ok=True,
        complementary_slackness=0.0,
        complementary_ok=True,
        range_distance=range_dist,
        range_ok=range_ok,
    )
