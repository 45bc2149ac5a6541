import numpy as np
import pytest

from pnpcs.baselines import cosamp, lasso_fixed_point_gap, lasso_ista, soft_threshold
from pnpcs.sensing import SensingOperator, make_gaussian


def identity_operator(n):
    return SensingOperator(kind="gaussian", m=n, n=n, seed=0, dense_entries=np.eye(n))


def test_cosamp_zero_measurements():
    op = make_gaussian(10, 30, 0)
    est = cosamp(op, np.zeros(10), sparsity=3)
    assert np.all(est.x_hat == 0)
    assert est.iterations == 0


def test_cosamp_recovers_two_sparse_signals():
    n, s, m = 64, 2, 20
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        support = rng.choice(n, size=s, replace=False)
        xi = np.zeros(n)
        xi[support] = rng.choice([-1.0, 1.0], size=s)
        op = make_gaussian(m, n, seed)
        est = cosamp(op, op.apply(xi), sparsity=s)
        # oracle: least squares on the true support
        oracle = np.zeros(n)
        cols = op.dense_entries[:, np.sort(support)]
        oracle[np.sort(support)] = np.linalg.lstsq(cols, op.apply(xi), rcond=None)[0]
        if set(est.support.tolist()) == set(support.tolist()):
            if np.linalg.norm(est.x_hat - oracle) <= 1e-8:
                hits += 1
    assert hits >= 95


def test_cosamp_identity_matrix_is_hard_thresholding(rng):
    n = 16
    op = identity_operator(n)
    b = rng.standard_normal(n)
    s = n // 4
    est = cosamp(op, b, sparsity=s)
    expected = np.zeros(n)
    order = np.argsort(-np.abs(b), kind="stable")[:s]
    expected[order] = b[order]
    assert np.allclose(est.x_hat, expected, atol=1e-10)


def test_cosamp_residual_never_worse_than_start():
    for seed in range(20):
        rng = np.random.default_rng(seed)
        op = make_gaussian(24, 60, seed)
        xi = np.zeros(60)
        xi[rng.choice(60, 5, replace=False)] = rng.standard_normal(5)
        b = op.apply(xi) + rng.normal(0, 0.01, 24)
        est = cosamp(op, b, sparsity=5)
        assert est.residual_history[-1] <= est.residual_history[0] + 1e-12
        assert est.support.size <= 5
        off = np.ones(60, dtype=bool)
        off[est.support] = False
        assert np.all(est.x_hat[off] == 0)


def test_cosamp_flags_rank_deficient_support():
    entries = np.random.default_rng(3).standard_normal((4, 9))
    entries[:, 1] = entries[:, 0]  # duplicated column
    op = SensingOperator(kind="gaussian", m=4, n=9, seed=0, dense_entries=entries)
    b = entries[:, 0] * 2.0
    est = cosamp(op, b, sparsity=3)
    assert est.ridge_flagged


def test_cosamp_validates_sparsity():
    op = make_gaussian(10, 30, 0)
    with pytest.raises(ValueError):
        cosamp(op, np.zeros(10), sparsity=0)
    with pytest.raises(ValueError):
        cosamp(op, np.zeros(10), sparsity=11)


def test_soft_threshold():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    assert np.allclose(soft_threshold(x, 1.0), [-1.0, 0.0, 0.0, 0.0, 1.0])


def test_lasso_large_lambda_gives_zero(rng):
    op = make_gaussian(12, 20, 1)
    b = rng.standard_normal(12)
    lam = float(np.max(np.abs(op.adjoint(b)))) * 1.01
    x = lasso_ista(op, b, lam, iters=50)
    assert np.all(x == 0)


def test_lasso_small_lambda_approaches_least_squares(rng):
    op = make_gaussian(30, 12, 2)
    xi = rng.standard_normal(12)
    b = op.apply(xi)
    x = lasso_ista(op, b, lam=1e-9, iters=4000)
    lstsq = np.linalg.lstsq(op.dense_entries, b, rcond=None)[0]
    assert np.linalg.norm(x - lstsq) < 1e-4


def test_lasso_objective_monotone():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        op = make_gaussian(15, 40, seed)
        b = rng.standard_normal(15)
        _, history = lasso_ista(op, b, lam=0.05, iters=150, return_history=True)
        assert np.all(np.diff(history) <= 1e-12)


def test_lasso_fixed_point_condition(rng):
    op = make_gaussian(20, 50, 4)
    xi = np.zeros(50)
    xi[[3, 17, 31]] = [1.0, -2.0, 0.5]
    b = op.apply(xi)
    x = lasso_ista(op, b, lam=0.01, iters=5000)
    assert lasso_fixed_point_gap(op, b, 0.01, x) <= 1e-6 * (1 + np.linalg.norm(x))


def test_lasso_rejects_negative_lambda():
    op = make_gaussian(5, 8, 0)
    with pytest.raises(ValueError):
        lasso_ista(op, np.zeros(5), lam=-1.0)
