import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustmv import (
    AmbiguitySet,
    FeedbackStrategy,
    HestonBoundedModel,
    RobustStrategy,
    StochCorrModel,
    estimate_sharpe,
    misspecified_strategy,
    replay_wealth,
    simulate_heston_paths,
    simulate_stochcorr_paths,
    simulate_terminal_wealth,
)
from robustmv.errors import InvalidGrid, NonFiniteWealth, TooFewSamples, ZeroVariance
from robustmv.simulation import (
    ConstantCovarianceModel,
    export_paths_csv,
    load_samples,
    path_normals,
    robust_feedback,
    save_samples,
    simulate_paths,
)

HESTON = dict(b=0.2, kappa=2.0, eta=1.0, sigma0=0.3, sigma_lo=0.15, sigma_hi=0.45, sigma_inf=0.3, rho=-0.7)
STOCH_CORR = dict(b=(1.5, 0.5), sigma=(1.0, 1.0), kappa=5.0, eta=0.2, rho0=0.7, rho_inf=0.7, rho_hi=0.95)


def constant_strategy(d, vec, label="const"):
    vec = np.asarray(vec, dtype=float)
    return FeedbackStrategy(label, lambda t, x: np.broadcast_to(vec, (x.size, d)), d)


class TestHeston:
    def test_frozen_dynamics(self):
        m = HestonBoundedModel(**{**HESTON, "kappa": 0.0, "eta": 0.0})
        paths = simulate_heston_paths(m, 1.0, 50, 20, seed=1)
        assert np.all(paths.state == 0.09)

    def test_exponential_relaxation(self):
        m = HestonBoundedModel(**{**HESTON, "kappa": 1.0, "eta": 0.0, "sigma_inf": 0.25})
        paths = simulate_heston_paths(m, 1.0, 10_000, 3, seed=0)
        exact = 0.0625 + (0.09 - 0.0625) * np.exp(-paths.times)
        assert np.max(np.abs(paths.state - exact)) <= 1e-6

    def test_projection_invariant(self):
        m = HestonBoundedModel(**HESTON)
        paths = simulate_heston_paths(m, 1.0, 252, 2000, seed=5)
        sig = np.sqrt(paths.state)
        assert sig.min() >= 0.15 - 1e-15 and sig.max() <= 0.45 + 1e-15
        # the bounds are actually reached with these parameters
        assert np.isclose(sig.min(), 0.15) or np.isclose(sig.max(), 0.45)

    def test_return_moments(self):
        m = HestonBoundedModel(**{**HESTON, "kappa": 0.0, "eta": 0.0})
        paths = simulate_heston_paths(m, 1.0, 10, 50_000, seed=2)
        total = paths.returns.sum(axis=1)[:, 0]
        assert abs(total.mean() - 0.2) < 3 * 0.3 / math.sqrt(50_000)
        assert total.var() == pytest.approx(0.09, rel=0.03)

    def test_invalid(self):
        with pytest.raises(ValueError):
            HestonBoundedModel(**{**HESTON, "sigma0": 0.5})
        with pytest.raises(InvalidGrid):
            simulate_heston_paths(HestonBoundedModel(**HESTON), 1.0, 0, 10, seed=0)
        with pytest.raises(InvalidGrid):
            simulate_heston_paths(HestonBoundedModel(**HESTON), -1.0, 10, 10, seed=0)


class TestStochCorr:
    def test_bounds(self):
        paths = simulate_stochcorr_paths(StochCorrModel(**STOCH_CORR), 1.0, 252, 2000, seed=3)
        assert paths.state.min() >= 0.0 and paths.state.max() <= 0.95

    def test_pinned_correlation(self):
        m = StochCorrModel(**{**STOCH_CORR, "kappa": 50.0, "eta": 1e-4, "rho0": 0.2, "rho_inf": 0.6})
        paths = simulate_stochcorr_paths(m, 1.0, 100, 1000, seed=4)
        r = paths.returns[:, 50:, :].reshape(-1, 2)
        assert np.corrcoef(r.T)[0, 1] == pytest.approx(0.6, abs=0.02)

    def test_independent_when_zero(self):
        m = StochCorrModel(**{**STOCH_CORR, "kappa": 0.0, "eta": 0.0, "rho0": 0.0, "rho_inf": 0.0})
        paths = simulate_stochcorr_paths(m, 1.0, 100, 1000, seed=4)
        r = paths.returns.reshape(-1, 2)
        assert abs(np.corrcoef(r.T)[0, 1]) <= 3 / math.sqrt(r.shape[0])

    def test_invalid(self):
        with pytest.raises(ValueError):
            StochCorrModel(**{**STOCH_CORR, "rho_hi": 1.0})


class TestDeterminism:
    def test_path_streams_independent_of_batching(self):
        full = path_normals(9, range(10), 5, 2)
        part = path_normals(9, range(4, 7), 5, 2)
        assert np.array_equal(full[4:7], part)
        assert not np.array_equal(path_normals(10, range(1), 5, 2), full[:1])

    def test_same_seed_same_paths(self):
        m = StochCorrModel(**STOCH_CORR)
        a = simulate_stochcorr_paths(m, 1.0, 20, 30, seed=7)
        b = simulate_stochcorr_paths(m, 1.0, 20, 30, seed=7)
        assert np.array_equal(a.returns, b.returns) and np.array_equal(a.state, b.state)

    def test_block_and_worker_invariance(self):
        m = HestonBoundedModel(**HESTON)
        s = robust_feedback(RobustStrategy.build(AmbiguitySet.uncertain_volatility([0.15], [0.45]), [0.2], 5.0, 0.0, 1.0))
        ref = simulate_terminal_wealth(m, [s], 0.0, 1.0, 30, 1000, seed=1, block_size=1000)["robust"]
        for block, workers in ((7, 1), (128, 4), (333, 3)):
            out = simulate_terminal_wealth(m, [s], 0.0, 1.0, 30, 1000, seed=1, block_size=block, workers=workers)
            assert np.array_equal(out["robust"], ref)

    def test_labels_unique(self):
        s = constant_strategy(1, [1.0])
        with pytest.raises(ValueError):
            simulate_terminal_wealth(HestonBoundedModel(**HESTON), [s, s], 0.0, 1.0, 5, 10, seed=0)


class TestWealth:
    def test_zero_strategy(self):
        paths = simulate_heston_paths(HestonBoundedModel(**HESTON), 1.0, 20, 100, seed=0)
        assert np.all(replay_wealth(paths, constant_strategy(1, [0.0]), 1.25) == 1.25)

    def test_constant_strategy_accumulates(self):
        m = HestonBoundedModel(**{**HESTON, "kappa": 0.0, "eta": 0.0})
        n_steps = 40
        paths = simulate_heston_paths(m, 1.0, n_steps, 100, seed=2)
        z = path_normals(2, range(100), n_steps, 2)[:, :, 0]
        w_T = z.sum(axis=1) * math.sqrt(1.0 / n_steps)
        x = replay_wealth(paths, constant_strategy(1, [1.0]), 0.5)
        assert np.allclose(x, 0.5 + 0.2 + 0.3 * w_T, atol=1e-12)

    def test_non_finite_reports_path(self):
        m = HestonBoundedModel(**HESTON)
        paths = simulate_paths(m, 1.0, 5, 10, seed=0, path_offset=100)

        def blow_up(t, x):
            out = np.zeros((x.size, 1))
            out[3] = np.inf
            return out

        with pytest.raises(NonFiniteWealth) as err:
            replay_wealth(paths, FeedbackStrategy("bad", blow_up, 1), 0.0)
        assert err.value.path_index == 103

    def test_dimension_mismatch(self):
        paths = simulate_heston_paths(HestonBoundedModel(**HESTON), 1.0, 5, 10, seed=0)
        with pytest.raises(ValueError):
            replay_wealth(paths, constant_strategy(2, [1.0, 0.0]), 0.0)

    def test_robust_moments_under_constant_worst_case(self):
        aset = AmbiguitySet.uncertain_volatility([0.15], [0.45])
        s = RobustStrategy.build(aset, [0.2], 5.0, 0.0, 1.0)
        m = ConstantCovarianceModel([0.2], [[0.2025]])
        x = simulate_terminal_wealth(m, [robust_feedback(s)], 0.0, 1.0, 500, 40_000, seed=3)["robust"]
        n = x.size
        assert abs(x.mean() - s.expected_terminal_wealth()) <= 3 * x.std() / math.sqrt(n)
        v = x.var(ddof=1)
        m4 = np.mean((x - x.mean()) ** 4)
        assert abs(v - s.robust_wealth_variance(1.0)) <= 3 * math.sqrt((m4 - v * v) / n)

    def test_mean_independent_of_true_covariance(self):
        aset = AmbiguitySet.uncertain_volatility([0.15], [0.45])
        s = RobustStrategy.build(aset, [0.2], 5.0, 0.0, 1.0)
        m = ConstantCovarianceModel([0.2], [[0.15**2]])
        x = simulate_terminal_wealth(m, [robust_feedback(s)], 0.0, 1.0, 500, 40_000, seed=4)["robust"]
        assert abs(x.mean() - s.expected_terminal_wealth()) <= 3 * x.std() / math.sqrt(x.size)


class TestMisspecified:
    def test_sigma_bar_is_robust(self):
        robust = RobustStrategy.build(AmbiguitySet.uncertain_volatility([0.15], [0.45]), [0.2], 5.0, 0.0, 1.0)
        mis = misspecified_strategy([0.2], 5.0, 0.0, 1.0, sigma_tilde=0.45)
        xs = np.linspace(-1, 1, 11)
        for t in (0.0, 0.5, 1.0):
            assert np.array_equal(mis(t, xs), robust.optimal_control(t, xs))

    def test_rho0_plus_is_robust(self):
        robust = RobustStrategy.build(AmbiguitySet.ambiguous_correlation(1.0, 1.0, 0.0, 0.95), [1.5, 0.5], 5.0, 0.0, 1.0)
        mis = misspecified_strategy([1.5, 0.5], 5.0, 0.0, 1.0, rho_tilde=1 / 3)
        xs = np.linspace(-1, 1, 11)
        assert np.allclose(mis(0.3, xs), robust.optimal_control(0.3, xs), rtol=1e-14, atol=1e-15)

    def test_initial_allocation(self):
        mis = misspecified_strategy([0.2], 5.0, 0.0, 1.0, sigma_tilde=0.3)
        r = (0.2 / 0.3) ** 2
        expected = math.exp(r) / 10 * 0.2 / 0.09
        assert mis(0.0, np.array([0.0]))[0, 0] == pytest.approx(expected, rel=1e-14)
        assert mis.label == "misspecified sigma=0.3"

    def test_invalid(self):
        with pytest.raises(ValueError):
            misspecified_strategy([0.2], 5.0, 0.0, 1.0, sigma_tilde=-0.1)
        with pytest.raises(ValueError):
            misspecified_strategy([1.5, 0.5], 5.0, 0.0, 1.0, rho_tilde=1.0)
        with pytest.raises(ValueError):
            misspecified_strategy([0.2], 5.0, 0.0, 1.0)


class TestSharpe:
    def test_zero_variance(self):
        with pytest.raises(ZeroVariance):
            estimate_sharpe(np.full(10, 1.3), 1.0)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            estimate_sharpe([1.0], 0.0)

    def test_symmetric(self):
        est = estimate_sharpe(np.array([-1.0, 1.0]) + 2.0, 2.0)
        assert est.mean_excess == 0.0 and est.sharpe == 0.0

    def test_gaussian_delta_ci(self):
        rng = np.random.default_rng(0)
        x = rng.normal(0.5, 2.0, size=200_000)
        est = estimate_sharpe(x, 0.0)
        # normal data: SE^2 = (1 + S^2 / 2) / N
        assert est.se == pytest.approx(math.sqrt((1 + 0.25**2 / 2) / x.size), rel=0.02)
        assert est.ci95[0] < 0.25 < est.ci95[1]

    def test_bootstrap_agrees_with_delta(self):
        rng = np.random.default_rng(1)
        x = rng.gamma(2.0, 1.0, size=5000)
        delta = estimate_sharpe(x, 0.0)
        boot = estimate_sharpe(x, 0.0, method="bootstrap", n_boot=400, seed=2)
        assert boot.sharpe == delta.sharpe
        assert boot.se == pytest.approx(delta.se, rel=0.15)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            estimate_sharpe([0.0, 1.0], 0.0, method="jackknife")

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=3, max_size=50), st.floats(0.1, 10), st.floats(-5, 5))
    def test_scale_invariance(self, xs, scale, x0):
        x = np.asarray(xs)
        if x.std() < 1e-3:
            return
        a = estimate_sharpe(x + x0, x0)
        b = estimate_sharpe(scale * x + x0, x0)
        assert b.sharpe == pytest.approx(a.sharpe, rel=1e-9, abs=1e-12)


class TestExport:
    @pytest.mark.parametrize("suffix", [".bin", ".csv"])
    def test_samples_round_trip(self, tmp_path, suffix):
        x = np.random.default_rng(0).normal(size=101)
        path = tmp_path / f"s{suffix}"
        save_samples(path, x)
        assert np.array_equal(load_samples(path), x)

    def test_paths_csv(self, tmp_path):
        paths = simulate_stochcorr_paths(StochCorrModel(**STOCH_CORR), 1.0, 3, 2, seed=0)
        out = tmp_path / "paths.csv"
        export_paths_csv(paths, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,path,state,ret_1,ret_2"
        assert len(lines) == 1 + 4 * 2
        first = lines[1].split(",")
        assert float(first[3]) == paths.returns[0, 0, 0]
