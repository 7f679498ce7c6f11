import numpy as np
import pytest

import alphamerton.simulate as sim
from alphamerton import (
    CirParams,
    ConstantVolMarket,
    CorrelationMatrix,
    HestonMarket,
    ParameterError,
    PathEnsemble,
    Policy,
    SimConfig,
    SimulationError,
    alpha_point_step,
    correlated_increments,
    euler_step,
    gbm_field,
    log_wealth_drift,
    simulate_cir,
    simulate_paths,
    simulate_wealth,
    solve_n_asset,
    solve_single_asset,
)
from conftest import make_factor_market, make_smooth_field


class TestSimConfig:
    def test_step_count_rounding(self):
        cfg = SimConfig(horizon=1.0, dt=0.1, n_paths=10, seed=1)
        assert cfg.n_steps == 10
        assert cfg.times()[-1] == pytest.approx(1.0)

    def test_incommensurate_grid_rounds_to_nearest(self):
        cfg = SimConfig(horizon=1.0, dt=0.3, n_paths=10, seed=1)
        assert cfg.n_steps == 3
        assert abs(cfg.times()[-1] - cfg.horizon) <= cfg.dt / 2

    def test_rejects_dt_larger_than_horizon(self):
        with pytest.raises(ParameterError):
            SimConfig(horizon=1.0, dt=1.5, n_paths=10, seed=1)

    @pytest.mark.parametrize("kwargs", [
        dict(horizon=-1.0), dict(dt=-0.1), dict(n_paths=0),
        dict(seed=-1), dict(scheme="heun"), dict(save_every=0),
    ])
    def test_rejects_bad_fields(self, kwargs):
        base = dict(horizon=1.0, dt=0.1, n_paths=10, seed=1)
        base.update(kwargs)
        with pytest.raises(ParameterError):
            SimConfig(**base)

    def test_saved_grid_always_ends_at_horizon(self):
        cfg = SimConfig(horizon=1.0, dt=0.1, n_paths=1, seed=0, save_every=3)
        assert cfg.saved_steps().tolist() == [0, 3, 6, 9, 10]


class TestPathEnsemble:
    def test_rejects_nonmonotone_times(self):
        with pytest.raises(ParameterError):
            PathEnsemble(times=[0.0, 0.2, 0.1], states=np.ones((2, 3, 1)))

    def test_rejects_nonfinite_states(self):
        states = np.ones((2, 3, 1))
        states[1, 2, 0] = np.nan
        with pytest.raises(SimulationError):
            PathEnsemble(times=[0.0, 0.1, 0.2], states=states)


class TestCorrelatedIncrements:
    def test_independent_components(self):
        rng = np.random.default_rng(5)
        n = 10**6
        inc = correlated_increments(CorrelationMatrix(np.eye(2)), 1.0, n, rng)
        rho_hat = np.corrcoef(inc.T)[0, 1]
        assert abs(rho_hat) <= 3.0 / np.sqrt(n)

    def test_recovers_target_correlation(self):
        rng = np.random.default_rng(6)
        n = 10**6
        rho = 0.8
        inc = correlated_increments(CorrelationMatrix.from_rho(rho), 1.0, n, rng)
        rho_hat = np.corrcoef(inc.T)[0, 1]
        assert abs(rho_hat - rho) <= 3.0 * (1.0 - rho**2) / np.sqrt(n)

    def test_variance_scales_with_dt(self):
        rng = np.random.default_rng(7)
        n, dt = 10**6, 0.01
        inc = correlated_increments(CorrelationMatrix(np.eye(2)), dt, n, rng)
        for k in range(2):
            var_hat = np.var(inc[:, k], ddof=1)
            assert abs(var_hat - dt) <= 3.0 * dt * np.sqrt(2.0 / n)


class TestSteps:
    def test_euler_gbm_hand_value(self):
        field = gbm_field(0.0, 0.2)
        out = euler_step(field, np.array([1.0]), np.array([0.1]), 0.01)
        np.testing.assert_allclose(out, [1.02], rtol=1e-15)

    def test_zero_diffusion_is_exact_linear_propagation(self):
        field = sim.CoefficientField(
            drift=lambda x: np.full_like(x, 0.7),
            diffusion=lambda x: np.zeros(x.shape[:-1] + (1, 1)),
        )
        out = euler_step(field, np.array([2.0]), np.array([5.0]), 0.5)
        np.testing.assert_allclose(out, [2.35], rtol=1e-15)

    def test_zero_increment_is_deterministic(self):
        field = gbm_field(0.05, 0.2)
        x = np.array([3.0])
        expected = x + 0.05 * 3.0 * 0.01
        np.testing.assert_allclose(euler_step(field, x, np.zeros(1), 0.01), expected, rtol=1e-15)
        np.testing.assert_allclose(alpha_point_step(field, 1.0, x, np.zeros(1), 0.01),
                                   expected, rtol=1e-15)

    def test_alpha_zero_matches_euler(self):
        rng = np.random.default_rng(8)
        field = make_smooth_field(rng, 3, 2)
        x = rng.normal(0.0, 1.0, (10, 3))
        dW = rng.normal(0.0, 0.1, (10, 2))
        np.testing.assert_array_equal(alpha_point_step(field, 0.0, x, dW, 0.01),
                                      euler_step(field, x, dW, 0.01))


class TestSimulatePaths:
    def test_gbm_log_drift_under_alpha_point(self):
        mu, sigma = 0.05, 0.2
        field = gbm_field(mu, sigma)
        cfg = SimConfig(horizon=1.0, dt=1e-3, n_paths=5000, seed=11,
                        scheme="alpha_point", save_every=1000)
        for a in (0.0, 0.5, 1.0):
            ens = simulate_paths(field, 1.0, cfg, alpha=a)
            log_s = np.log(ens.states[:, -1, 0])
            expected = (mu + a * sigma**2 - 0.5 * sigma**2) * 1.0
            se = log_s.std(ddof=1) / np.sqrt(log_s.shape[0])
            assert abs(log_s.mean() - expected) <= 3.0 * se

    def test_scheme_agreement(self):
        field = gbm_field(0.05, 0.2)
        for a in (0.0, 0.25, 0.5, 1.0):
            kwargs = dict(horizon=1.0, dt=2e-3, n_paths=20000, seed=13, save_every=500)
            direct = simulate_paths(field, 1.0, SimConfig(scheme="alpha_point", **kwargs), alpha=a)
            converted = simulate_paths(field, 1.0, SimConfig(scheme="ito_euler", **kwargs), alpha=a)
            x = np.log(direct.states[:, -1, 0])
            y = np.log(converted.states[:, -1, 0])
            pooled = np.sqrt(x.var(ddof=1) / x.size + y.var(ddof=1) / y.size)
            assert abs(x.mean() - y.mean()) <= 3.0 * pooled

    def test_weak_convergence_order_one(self):
        # Euler-for-price log-mean bias, isolated by per-path comparison with
        # the exact solution driven by the same Brownian increments, halves
        # when dt halves (within 30%).
        mu, sigma, T = 0.0, 1.0, 1.0
        n, k_fine = 40000, 64
        rng = np.random.default_rng(99)
        z = rng.standard_normal((n, k_fine))
        dt_fine = T / k_fine
        w_T = np.sqrt(dt_fine) * z.sum(axis=1)
        exact = (mu - 0.5 * sigma**2) * T + sigma * w_T

        def euler_log_mean_bias(dw, dt):
            s = np.ones(n)
            for j in range(dw.shape[1]):
                s = s * (1.0 + mu * dt + sigma * dw[:, j])
            return np.mean(np.log(s) - exact)

        dw_fine = np.sqrt(dt_fine) * z
        dw_coarse = dw_fine[:, 0::2] + dw_fine[:, 1::2]
        bias_fine = euler_log_mean_bias(dw_fine, dt_fine)
        bias_coarse = euler_log_mean_bias(dw_coarse, 2 * dt_fine)
        ratio = bias_coarse / bias_fine
        assert 1.4 <= ratio <= 2.6

    def test_nonfinite_state_aborts(self):
        field = sim.CoefficientField(
            drift=lambda x: np.full_like(x, np.inf),
            diffusion=lambda x: np.zeros(x.shape[:-1] + (1, 1)),
        )
        cfg = SimConfig(horizon=1.0, dt=0.5, n_paths=3, seed=1)
        with pytest.raises(SimulationError, match="non-finite"):
            simulate_paths(field, 1.0, cfg)


class TestSimulateWealth:
    def test_riskless_policy_is_exact(self):
        market = ConstantVolMarket(mu=[0.08], Gamma=[[0.2]], r=0.03)
        rho = 0.1
        policy = Policy(rho, np.array([0.0]))
        cfg = SimConfig(horizon=5.0, dt=0.05, n_paths=7, seed=3, save_every=10)
        ens = simulate_wealth(market, policy, 2.0, cfg)
        expected = 2.0 * np.exp((0.03 - rho) * ens.times)
        np.testing.assert_allclose(ens.states[:, :, 0],
                                   np.broadcast_to(expected, ens.states[:, :, 0].shape),
                                   rtol=1e-12)

    def test_optimal_policy_log_moments(self):
        market = ConstantVolMarket(mu=[0.08], Gamma=[[0.2]], r=0.03)
        rho = 0.1
        policy, _ = solve_single_asset(0.08, 0.2, 0.03, rho, 0.0)
        cfg = SimConfig(horizon=10.0, dt=0.01, n_paths=20000, seed=21, save_every=100)
        ens = simulate_wealth(market, policy, 1.0, cfg)
        ln_T = np.log(ens.states[:, -1, 0])
        g = 0.03 - rho + 0.5 * 0.05**2 / 0.04
        se = ln_T.std(ddof=1) / np.sqrt(ln_T.shape[0])
        assert abs(ln_T.mean() - g * 10.0) <= 3.0 * se

    def test_two_asset_diagonal_log_drift(self):
        Gamma = np.diag([0.2, 0.3])
        market = ConstantVolMarket(mu=[0.07, 0.06], Gamma=Gamma, r=0.03)
        rho = 0.1
        policy, _ = solve_n_asset(market, rho, 0.0)
        lam = market.mu - 0.03
        quad = lam @ np.linalg.solve(market.covariance, lam)
        g = 0.03 - rho + 0.5 * quad
        cfg = SimConfig(horizon=10.0, dt=0.01, n_paths=20000, seed=22, save_every=100)
        ens = simulate_wealth(market, policy, 1.0, cfg)
        ln_T = np.log(ens.states[:, -1, 0])
        se = ln_T.std(ddof=1) / np.sqrt(ln_T.shape[0])
        assert abs(ln_T.mean() - g * 10.0) <= 3.0 * se

    def test_heston_paths_positive_and_rarely_flagged(self):
        market = HestonMarket(mu=0.08, r=0.03, kappa=2.0, long_run_mean=0.04,
                              xi=0.3, rho_corr=-0.7, v0=0.04)
        from alphamerton import solve_heston

        policy = solve_heston(market, 0.1, 1.0)
        cfg = SimConfig(horizon=5.0, dt=0.005, n_paths=2000, seed=5, save_every=20)
        ens = simulate_wealth(market, policy, 1.0, cfg, alpha=1.0)
        # The 1/v rule is undefined on the rare truncated-to-zero proposals;
        # those paths are flagged and dropped, well inside the 1% budget.
        assert ens.meta["n_flagged"] <= 20
        assert ens.n_paths == cfg.n_paths - ens.meta["n_flagged"]
        assert np.all(ens.states[:, :, 0] > 0.0)
        assert np.all(ens.states[:, :, 1] >= 0.0)
        assert ens.dim == 2

    def test_factor_market_runs(self):
        market = make_factor_market()
        from alphamerton import solve_factor

        policy = solve_factor(market, 0.1, 0.5)
        cfg = SimConfig(horizon=2.0, dt=0.01, n_paths=500, seed=9, save_every=10)
        ens = simulate_wealth(market, policy, 1.0, cfg, alpha=0.5)
        assert ens.meta["n_flagged"] == 0
        assert np.all(ens.states[:, :, 0] > 0.0)

    def test_flag_budget_exceeded_raises(self):
        # Feller badly violated: variance hits zero fast and the 1/v rule fails.
        market = HestonMarket(mu=0.08, r=0.03, kappa=0.5, long_run_mean=0.005,
                              xi=0.6, rho_corr=-0.5, v0=0.005)
        from alphamerton import solve_heston

        policy = solve_heston(market, 0.1, 0.0)
        cfg = SimConfig(horizon=2.0, dt=0.01, n_paths=500, seed=17)
        with pytest.raises(SimulationError, match="flagged"):
            simulate_wealth(market, policy, 1.0, cfg)

    def test_policy_dimension_mismatch(self):
        market = ConstantVolMarket(mu=[0.08, 0.06], Gamma=np.diag([0.2, 0.3]), r=0.03)
        with pytest.raises(sim.DimensionError):
            simulate_wealth(market, Policy(0.1, np.array([1.0])), 1.0,
                            SimConfig(horizon=1.0, dt=0.1, n_paths=2, seed=1))


class TestSimulateCir:
    def test_deterministic_limit_matches_ode(self):
        cir = CirParams(kappa=2.0, theta_alpha=0.0625, xi=1e-12)
        cfg = SimConfig(horizon=2.0, dt=0.001, n_paths=3, seed=1, save_every=100)
        ens = simulate_cir(cir, 0.2, cfg)
        expected = 0.0625 + (0.2 - 0.0625) * np.exp(-2.0 * ens.times)
        np.testing.assert_allclose(ens.states[:, :, 0],
                                   np.broadcast_to(expected, ens.states[:, :, 0].shape),
                                   atol=2e-4)

    def test_long_run_mean(self):
        cir = CirParams(kappa=2.0, theta_alpha=0.0625, xi=0.3)
        cfg = SimConfig(horizon=20.0, dt=0.01, n_paths=2000, seed=12, save_every=10)
        ens = simulate_cir(cir, 0.04, cfg)
        second_half = ens.states[:, ens.times >= 10.0, 0]
        per_path = second_half.mean(axis=1)
        se = per_path.std(ddof=1) / np.sqrt(per_path.shape[0])
        assert abs(per_path.mean() - 0.0625) <= 3.0 * se

    def test_output_nonnegative_and_truncation_reported(self):
        cir = CirParams(kappa=1.0, theta_alpha=0.01, xi=0.4)  # Feller violated
        cfg = SimConfig(horizon=5.0, dt=0.01, n_paths=500, seed=23, save_every=5)
        ens = simulate_cir(cir, 0.01, cfg)
        assert np.all(ens.states >= 0.0)
        assert ens.meta["truncation_fraction"] > 0.0

    def test_feller_satisfied_truncation_rare(self):
        cir = CirParams(kappa=2.0, theta_alpha=0.0625, xi=0.3)
        cfg = SimConfig(horizon=10.0, dt=0.001, n_paths=200, seed=2, save_every=100)
        ens = simulate_cir(cir, 0.04, cfg)
        assert ens.meta["truncation_fraction"] < 1e-3


class TestReproducibility:
    def test_bit_identical_across_runs(self):
        market = ConstantVolMarket(mu=[0.08], Gamma=[[0.2]], r=0.03)
        policy, _ = solve_single_asset(0.08, 0.2, 0.03, 0.1, 0.5)
        cfg = SimConfig(horizon=1.0, dt=0.01, n_paths=512, seed=77)
        a = simulate_wealth(market, policy, 1.0, cfg, alpha=0.5)
        b = simulate_wealth(market, policy, 1.0, cfg, alpha=0.5)
        np.testing.assert_array_equal(a.states, b.states)

    def test_identical_across_thread_counts_and_blocks(self, monkeypatch):
        market = ConstantVolMarket(mu=[0.08], Gamma=[[0.2]], r=0.03)
        policy, _ = solve_single_asset(0.08, 0.2, 0.03, 0.1, 0.0)
        cfg = SimConfig(horizon=1.0, dt=0.01, n_paths=1000, seed=42)
        baseline = simulate_wealth(market, policy, 1.0, cfg)
        monkeypatch.setattr(sim, "_BLOCK_SIZE", 64)
        monkeypatch.setattr(sim, "_CHUNK_TARGET", 1000)
        for threads in (1, 4):
            again = simulate_wealth(market, policy, 1.0, cfg, n_threads=threads)
            np.testing.assert_array_equal(baseline.states, again.states)

    def test_cir_identical_across_threads(self, monkeypatch):
        cir = CirParams(kappa=2.0, theta_alpha=0.0625, xi=0.3)
        cfg = SimConfig(horizon=1.0, dt=0.01, n_paths=600, seed=5)
        baseline = simulate_cir(cir, 0.04, cfg)
        monkeypatch.setattr(sim, "_BLOCK_SIZE", 128)
        again = simulate_cir(cir, 0.04, cfg, n_threads=3)
        np.testing.assert_array_equal(baseline.states, again.states)

    def test_seed_changes_paths(self):
        market = ConstantVolMarket(mu=[0.08], Gamma=[[0.2]], r=0.03)
        policy, _ = solve_single_asset(0.08, 0.2, 0.03, 0.1, 0.0)
        a = simulate_wealth(market, policy, 1.0, SimConfig(horizon=1.0, dt=0.01, n_paths=64, seed=1))
        b = simulate_wealth(market, policy, 1.0, SimConfig(horizon=1.0, dt=0.01, n_paths=64, seed=2))
        assert not np.array_equal(a.states, b.states)
