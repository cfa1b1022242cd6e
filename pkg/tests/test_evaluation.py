import math

import numpy as np
import pytest
from scipy import stats

from splash.estimators import (ConstEstimator, CvChoice, CvGrid, Fitted, GmwyEstimator, PvarEstimator,
                               SplashEstimator)
from splash.evaluation import (ForecastRecord, dm_test, estimation_error, rmsfe, rolling_windows,
                               score_table, ts_cross_validate, window_length)
from splash.simulate import RngSpec, gen_design_b, simulate_var

from oracles import jacobi_singular_values


class SpyEstimator:
    """Records the data it is given; candidates forecast with fixed scalings."""

    tuned = True
    label = "spy"

    def __init__(self, scales=(0.0, 0.5)):
        self.scales = scales
        self.seen = []

    def candidates(self, y, grid):
        self.seen.append(y.copy())
        n = y.shape[0]
        return [Fitted(s * np.eye(n), lam=float(k), alpha=0.0, lam_index=k) for k, s in enumerate(self.scales)]

    def fit(self, y, choice, grid):
        self.seen.append(y.copy())
        return Fitted(self.scales[choice.lam_index] * np.eye(y.shape[0]))


def test_cv_grid_validation():
    with pytest.raises(ValueError):
        CvGrid(train_frac=1.0)
    with pytest.raises(ValueError):
        CvGrid(lambdas=[0.1, 0.2])
    with pytest.raises(ValueError):
        CvGrid(alphas=[1.5])
    assert CvGrid().alphas == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_cv_single_pair_grid():
    y = simulate_var(gen_design_b(3), 120, rng=RngSpec(1)).values
    grid = CvGrid(lambdas=[0.3], alphas=[0.5])
    choice = ts_cross_validate(y, grid, SplashEstimator(alpha=None, bandwidth=None))
    assert choice.lam == 0.3 and choice.alpha == 0.5


def test_cv_never_sees_validation_data_and_scores_one_step():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((3, 50))
    spy = SpyEstimator()
    choice = ts_cross_validate(y, CvGrid(), spy)
    assert len(spy.seen) == 1 and np.array_equal(spy.seen[0], y[:, :40])
    for k, s in enumerate(spy.scales):
        err = y[:, 40:] - s * y[:, 39:49]
        if k == choice.lam_index:
            assert choice.score == pytest.approx(np.mean(err ** 2))


def test_cv_tie_break_largest_lambda_then_smallest_alpha():
    class Tied(SpyEstimator):
        def candidates(self, y, grid):
            n = y.shape[0]
            z = np.zeros((n, n))
            return [Fitted(z, lam=1.0, alpha=0.5), Fitted(z, lam=2.0, alpha=0.75),
                    Fitted(z, lam=2.0, alpha=0.25), Fitted(z, lam=0.5, alpha=0.0)]
    c = ts_cross_validate(np.ones((2, 20)), CvGrid(), Tied())
    assert (c.lam, c.alpha) == (2.0, 0.25)


def test_cv_degenerate_segments():
    with pytest.raises(ValueError):
        ts_cross_validate(np.ones((2, 5)), CvGrid(train_frac=0.9), SpyEstimator())
    with pytest.raises(ValueError):
        ts_cross_validate(np.ones((2, 3)), CvGrid(train_frac=0.2), SpyEstimator())


def test_cv_untuned_estimator_and_determinism():
    y = simulate_var(gen_design_b(3), 150, rng=RngSpec(2)).values
    assert ts_cross_validate(y, CvGrid(), ConstEstimator()) == CvChoice()
    est = SplashEstimator(alpha=None, bandwidth="bootstrap", rng=RngSpec(5))
    grid = CvGrid(n_lambda=8)
    assert ts_cross_validate(y, grid, est) == ts_cross_validate(y, grid, est)


def test_cv_pure_noise_prefers_large_lambda():
    hits = 0
    runs = 20
    for seed in range(runs):
        y = np.random.default_rng(seed).standard_normal((9, 200))
        choice = ts_cross_validate(y, CvGrid(), SplashEstimator(alpha=0.0, bandwidth="bootstrap",
                                                                rng=RngSpec(seed)))
        hits += choice.lam_index < 10
    assert hits >= 0.8 * runs


def test_rmsfe_examples():
    rng = np.random.default_rng(3)
    c = rng.standard_normal((3, 3)) * 0.3
    truths = [(c, rng.standard_normal(3), rng.standard_normal(3)) for _ in range(4)]
    assert rmsfe([c] * 4, truths) == 1.0
    z = np.zeros((2, 2))
    assert rmsfe([z, z], [(z, np.ones(2), np.ones(2)), (z, -np.ones(2), np.zeros(2) + 3)]) == 1.0
    # hand computation: num = (1.5-0.8)^2 + (0+0.6)^2 = 0.85, den = 0.5^2 + 0.5^2 = 0.5
    half = np.array([[0.5]])
    val = rmsfe([np.array([[0.4]]), np.array([[0.6]])],
                [(half, np.array([2.0]), np.array([1.5])), (half, np.array([-1.0]), np.array([0.0]))])
    assert val == pytest.approx(1.7)
    with pytest.raises(ValueError):
        rmsfe([], [])


def test_estimation_error_examples():
    a = np.array([[0.0, 0.2], [0.1, 0.0]])
    assert estimation_error([a, a], a) == 0.0
    assert estimation_error([a + np.diag([0.3, 0.0])], a) == pytest.approx(0.3)
    rng = np.random.default_rng(4)
    est = [a + 0.1 * rng.standard_normal((2, 2)) for _ in range(5)]
    oracle = np.mean([jacobi_singular_values(e - a)[0] for e in est])
    assert estimation_error(est, a) == pytest.approx(oracle, abs=1e-9)


def test_dm_identical_and_antisymmetric():
    rng = np.random.default_rng(5)
    e1, e2 = rng.standard_normal(50), rng.standard_normal(50)
    r = dm_test(e1, e1)
    assert r.stat == 0 and r.p == 1
    for loss in ("squared", "absolute"):
        assert dm_test(e1, e2, loss).stat == pytest.approx(-dm_test(e2, e1, loss).stat)
        assert dm_test(e1, e2, loss).p == pytest.approx(dm_test(e2, e1, loss).p)


def test_dm_matches_direct_formula():
    rng = np.random.default_rng(6)
    e1, e2 = rng.standard_normal(64), 1.2 * rng.standard_normal(64)
    d = np.abs(e1) - np.abs(e2)
    n = 64
    lags = 3  # floor(64^(1/3)) = 4 - guard against float: 64**(1/3) = 3.9999...
    lags = int(math.floor(n ** (1 / 3)))
    u = d - d.mean()
    gam = [u[k:] @ u[:n - k] / n for k in range(lags + 1)]
    lrv = gam[0] + 2 * sum((1 - k / (lags + 1)) * gam[k] for k in range(1, lags + 1))
    stat = d.mean() / math.sqrt(lrv / n)
    r = dm_test(e1, e2, "absolute")
    assert r.stat == pytest.approx(stat)
    assert r.p == pytest.approx(2 * stats.norm.sf(abs(stat)))


def test_dm_degenerate_and_errors():
    e = np.ones(20)
    r = dm_test(2 * e, e)
    assert r.p == 0.0 and r.stat > 0
    with pytest.raises(ValueError):
        dm_test(np.ones(9), np.ones(9))
    with pytest.raises(ValueError):
        dm_test(np.ones(10), np.ones(11))
    with pytest.raises(ValueError):
        dm_test(np.ones(10), np.ones(10), loss="huber")


def test_dm_size_monte_carlo():
    rng = np.random.default_rng(7)
    rejections = sum(dm_test(rng.standard_normal(200), rng.standard_normal(200)).p < 0.05 for _ in range(1000))
    assert 0.02 <= rejections / 1000 <= 0.09


def test_rolling_windows_count_and_const():
    y = np.full((2, 801), 3.0)
    assert window_length(801, 0.8) == 641
    rec = rolling_windows(y, 0.8, ConstEstimator(), CvGrid())
    assert rec.errors.shape == (160, 2) and rec.n_windows == 160
    assert not rec.errors.any() and rec.failed == []


def test_rolling_windows_single_window_and_errors():
    y = np.random.default_rng(8).standard_normal((3, 10))
    rec = rolling_windows(y, 0.9, ConstEstimator(), CvGrid())
    assert rec.n_windows == 1
    assert np.allclose(rec.forecasts[0], y[:, :9].mean(axis=1))
    with pytest.raises(ValueError):
        rolling_windows(y, 0.99, ConstEstimator(), CvGrid())
    with pytest.raises(ValueError):
        rolling_windows(y, 0.2, ConstEstimator(), CvGrid())


def test_rolling_windows_demeans_and_adds_back():
    rng = np.random.default_rng(9)
    y = rng.standard_normal((2, 40)) + np.array([[10.0], [-5.0]])
    spy = SpyEstimator(scales=(0.5,))
    rec = rolling_windows(y, 0.9, spy, CvGrid(train_frac=0.8))
    assert all(abs(s.mean(axis=1)).max() < 1e-12 for s in spy.seen[1::2])
    w = y[:, 0:36]
    mu = w.mean(axis=1)
    assert np.allclose(rec.forecasts[0], 0.5 * (w[:, -1] - mu) + mu)


def test_rolling_windows_records_failures():
    class Flaky(SpyEstimator):
        calls = 0

        def fit(self, y, choice, grid):
            Flaky.calls += 1
            if Flaky.calls == 2:
                raise RuntimeError("boom")
            return super().fit(y, choice, grid)
    y = np.random.default_rng(10).standard_normal((2, 30))
    rec = rolling_windows(y, 0.9, Flaky(), CvGrid())
    assert rec.failed == [1]
    assert np.isnan(rec.errors[1]).all() and np.isfinite(rec.errors[[0, 2]]).all()


def test_rolling_windows_deterministic():
    y = simulate_var(gen_design_b(2), 60, rng=RngSpec(3)).values
    est = SplashEstimator(alpha=0.0, bandwidth="bootstrap", rng=RngSpec(1))
    grid = CvGrid(n_lambda=5)
    r1 = rolling_windows(y, 0.9, est, grid)
    r2 = rolling_windows(y, 0.9, est, grid)
    assert np.array_equal(r1.errors, r2.errors)


def _record(label, errors):
    errors = np.asarray(errors, dtype=float)
    return ForecastRecord(label, errors, np.zeros_like(errors), np.zeros(errors.shape[0]))


def test_score_table_identical_and_half():
    rng = np.random.default_rng(11)
    e = rng.standard_normal((40, 45))
    bench = _record("PVAR", e)
    row = score_table([_record("same", e)], bench)[0]
    assert (row.wins, row.significant_wins, row.ratio) == (0, 0, 1.0)
    row = score_table([_record("half", 0.5 * e)], bench, loss="absolute")[0]
    assert row.wins == 45 and row.ratio == pytest.approx(0.5)
    assert score_table([_record("half", 0.5 * e)], bench, loss="squared")[0].ratio == pytest.approx(0.25)


def test_score_table_hand_tabulated_toy():
    # unit 1: method |e| = 1 everywhere, benchmark |e| = 2 -> win, DM degenerate -> p = 0 -> significant
    # unit 2: method |e| alternates 1, 3 (mean 2), benchmark 2 everywhere -> tie, no win
    n = 12
    m = np.column_stack([np.ones(n), np.tile([1.0, 3.0], n // 2)])
    b = np.column_stack([2 * np.ones(n), 2 * np.ones(n)])
    row = score_table([_record("m", m)], _record("b", b), loss="absolute")[0]
    assert (row.wins, row.significant_wins) == (1, 1)
    assert row.ratio == pytest.approx((n * 1 + n * 2) / (n * 2 + n * 2))


def test_score_table_skips_missing_windows():
    e = np.ones((12, 2))
    m = 0.5 * e.copy()
    m[3] = np.nan
    row = score_table([_record("m", m)], _record("b", e))[0]
    assert row.wins == 2 and row.ratio == pytest.approx(0.5)


def test_estimator_handles_fit_and_predict():
    y = simulate_var(gen_design_b(3), 300, rng=RngSpec(12)).values
    grid = CvGrid(n_lambda=6)
    for est in (SplashEstimator(0.0, 1), PvarEstimator()):
        choice = ts_cross_validate(y, grid, est)
        f = est.fit(y, choice, grid)
        assert f.transition.shape == (9, 9) and f.predict(y[:, -1]).shape == (9,)
    g = GmwyEstimator(1).fit(y)
    assert g.a_hat is not None and np.isfinite(g.transition).all()
    assert np.allclose(ConstEstimator().fit(y).predict(y[:, -1]), y.mean(axis=1))
