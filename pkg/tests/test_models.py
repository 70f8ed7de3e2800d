import numpy as np
import pytest
from scipy.integrate import simpson

from ratespca.curves import CurveError, MaturityGrid
from ratespca.models import (
    Cir3Params,
    CurveShape,
    DEFAULT_CIR,
    G2PP_SET_1,
    G2PP_SET_2,
    G2ppParams,
    HjmVolSpec,
    OptionSpec,
    bond_option_price,
    cir_bond_prices,
    cir_forward_curves,
    default_hjm_spec,
    g2pp_discount,
    g2pp_factor_loadings,
    g2pp_forward_vol,
    g2pp_integrated_variance,
    g2pp_option_price,
    simulate_cir3,
    simulate_g2pp,
    simulate_gaussian_hjm,
)

GRID = MaturityGrid.standard()


class TestCurveShape:
    def test_parametric_shapes(self):
        x = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(CurveShape.constant(0.01)(x), 0.01)
        np.testing.assert_allclose(CurveShape.exponential(2.0, 0.5)(x),
                                   2.0 * np.exp(-0.5 * x))
        np.testing.assert_allclose(CurveShape.hump(3.0, 0.5)(x),
                                   3.0 * x * np.exp(-0.5 * x))

    def test_sampled_shape_interpolates_flat_beyond(self):
        shape = CurveShape.sampled([1.0, 2.0], [0.1, 0.2])
        np.testing.assert_allclose(shape(np.array([0.5, 1.5, 3.0])), [0.1, 0.15, 0.2])


class TestGaussianHjm:
    def test_zero_volatility_is_exact_transport(self):
        spec = HjmVolSpec(factors=(CurveShape.constant(0.0),),
                          initial_curve=(CurveShape.constant(0.03),
                                         CurveShape.exponential(0.02, 0.5)))
        panel = simulate_gaussian_hjm(spec, 253, 1 / 252, GRID, seed=3)
        x = GRID.array
        for t in range(0, 253, 36):
            expected = 0.03 + 0.02 * np.exp(-0.5 * (x + t / 252))
            assert np.max(np.abs(panel.values[t] - expected)) < 1e-12

    def test_constant_factor_variance_oracle(self):
        # one constant factor: Var[r_t(x)] = c^2 t for every maturity
        c = 0.01
        spec = HjmVolSpec(factors=(CurveShape.constant(c),),
                          initial_curve=(CurveShape.constant(0.05),))
        grid = MaturityGrid((1.0, 5.0))
        terminal = np.array([
            simulate_gaussian_hjm(spec, 22, 1 / 22, grid,
                                  np.random.default_rng(rep)).values[-1]
            for rep in range(10_000)
        ])
        np.testing.assert_allclose(terminal.var(axis=0), c**2 * (21 / 22), rtol=0.05)

    def test_drift_oracle(self):
        # with sigma_1(x) = c the no-arbitrage drift is alpha(x) = c^2 x
        c = 0.015
        spec = HjmVolSpec(factors=(CurveShape.constant(c),),
                          initial_curve=(CurveShape.constant(0.05),))
        grid = MaturityGrid((2.0, 6.0))
        dt, steps = 0.1, 11
        terminal = np.array([
            simulate_gaussian_hjm(spec, steps, dt, grid,
                                  np.random.default_rng(rep)).values[-1]
            for rep in range(10_000)
        ])
        drift = terminal.mean(axis=0) - 0.05
        expected = c**2 * grid.array * (steps - 1) * dt
        se = c * np.sqrt((steps - 1) * dt) / np.sqrt(len(terminal))
        assert np.all(np.abs(drift - expected) < 3 * se)

    def test_seed_reproducibility(self):
        spec = default_hjm_spec()
        a = simulate_gaussian_hjm(spec, 50, 1 / 252, GRID, seed=11)
        b = simulate_gaussian_hjm(spec, 50, 1 / 252, GRID, seed=11)
        assert np.array_equal(a.values, b.values)

    def test_rejects_bad_dt(self):
        with pytest.raises(CurveError):
            simulate_gaussian_hjm(default_hjm_spec(), 10, -0.1, GRID, 0)


class TestCir3:
    def test_near_zero_vol_matches_ode(self):
        params = Cir3Params(kappa=(0.8, 0.2, 1.2), theta=(0.02, 0.03, 0.01),
                            sigma=(1e-4, 1e-4, 1e-4), y0=(0.04, 0.01, 0.02))
        paths = simulate_cir3(params, 253, 1 / 252, GRID, seed=2)
        t = 1.0
        kappa = np.array(params.kappa)
        expected = (np.array(params.theta)
                    + (np.array(params.y0) - np.array(params.theta)) * np.exp(-kappa * t))
        assert np.max(np.abs(paths.factors[-1] - expected)) < 1 / 252

    def test_factors_stay_nonnegative_prices_in_unit_interval(self):
        paths = simulate_cir3(DEFAULT_CIR, 2000, 1 / 252, GRID, seed=5)
        assert paths.factors.min() >= 0.0
        assert np.all(paths.prices.values > 0.0)
        assert np.all(paths.prices.values <= 1.0)

    def test_short_maturity_yield_approaches_short_rate(self):
        # y(x1) averages the forward curve over [0, x1], so the gap to the
        # short rate is bounded by the forward move over that interval
        grid = MaturityGrid((0.01, 0.02, 1.0))
        paths = simulate_cir3(DEFAULT_CIR, 30, 1 / 252, grid, seed=7)
        gap = np.abs(paths.yields.values[:, 0] - paths.short_rate)
        forward_move = np.abs(paths.forwards.values[:, 0] - paths.short_rate)
        assert np.all(gap <= 1.05 * forward_move + 1e-9)
        # and the gap itself is first-order small in x1
        assert gap.max() < 0.02 * np.abs(paths.short_rate).max()

    def test_bond_price_against_discounting_monte_carlo(self):
        grid = MaturityGrid((4.9, 5.0))
        discounted = []
        rng = np.random.default_rng(123)
        for _ in range(3000):
            paths = simulate_cir3(DEFAULT_CIR, 5 * 252 + 1, 1 / 252, grid, rng)
            discounted.append(np.exp(-np.trapezoid(paths.short_rate, dx=1 / 252)))
        analytic = cir_bond_prices(DEFAULT_CIR, np.array([DEFAULT_CIR.y0]), grid)[0, 1]
        assert abs(np.mean(discounted) / analytic - 1.0) < 0.005

    def test_analytic_forward_matches_log_price_derivative(self):
        grid = MaturityGrid(tuple(np.linspace(0.5, 10, 25)))
        factors = np.array([[0.02, 0.03, 0.01], [0.05, 0.01, 0.03]])
        fwd = cir_forward_curves(DEFAULT_CIR, factors, grid)
        h = 1e-5
        hi = MaturityGrid(tuple(grid.array + h))
        lo = MaturityGrid(tuple(grid.array - h))
        fd = -(np.log(cir_bond_prices(DEFAULT_CIR, factors, hi))
               - np.log(cir_bond_prices(DEFAULT_CIR, factors, lo))) / (2 * h)
        np.testing.assert_allclose(fwd, fd, atol=1e-8)

    def test_feller_violation_warns(self):
        with pytest.warns(UserWarning):
            Cir3Params(kappa=(0.1, 0.2, 0.3), theta=(0.01, 0.02, 0.01),
                       sigma=(0.3, 0.05, 0.06))

    def test_parameter_validation(self):
        with pytest.raises(CurveError):
            Cir3Params(kappa=(0.0, 0.2, 1.2), theta=(0.02, 0.03, 0.01),
                       sigma=(0.1, 0.05, 0.12))


class TestG2ppForwardVol:
    def test_paper_form_single_factor(self):
        params = G2ppParams(kappa1=0.8, kappa2=0.7, upsilon1=0.1, upsilon2=0.0, rho=-0.3)
        tau = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(g2pp_forward_vol(params, tau, form="paper"),
                                   0.1 * np.exp(-0.8 * tau / 2.0))

    def test_decays_to_zero(self):
        assert g2pp_forward_vol(G2PP_SET_1, 80.0) < 1e-10

    def test_value_at_zero_parameter_set_1(self):
        got = float(g2pp_forward_vol(G2PP_SET_1, 0.0))
        assert got == pytest.approx(np.sqrt(0.014), rel=1e-12)
        assert got == pytest.approx(0.11832, abs=5e-6)

    def test_forms_agree_at_zero_only(self):
        assert g2pp_forward_vol(G2PP_SET_1, 0.0) == g2pp_forward_vol(
            G2PP_SET_1, 0.0, form="paper")
        assert g2pp_forward_vol(G2PP_SET_1, 1.0) != g2pp_forward_vol(
            G2PP_SET_1, 1.0, form="paper")


class TestG2ppSimulation:
    def test_zero_vol_yields_flat(self):
        params = G2ppParams(kappa1=0.8, kappa2=0.7, upsilon1=0.0, upsilon2=0.0,
                            rho=-0.3, flat_rate=0.05)
        paths = simulate_g2pp(params, 30, 1 / 252, GRID, seed=1)
        np.testing.assert_allclose(paths.yields.values, 0.05, atol=1e-14)
        np.testing.assert_allclose(paths.forwards.values, 0.05, atol=1e-14)

    def test_initial_discount_curve(self):
        assert float(g2pp_discount(G2PP_SET_1, 10.0)) == pytest.approx(np.exp(-0.5))
        paths = simulate_g2pp(G2PP_SET_1, 2, 1 / 252, GRID, seed=0)
        np.testing.assert_allclose(paths.prices.values[0],
                                   np.exp(-0.05 * GRID.array), atol=1e-14)

    def test_martingale_property(self):
        # discounted bond prices are martingales under the pricing measure
        grid = MaturityGrid((9.5, 10.0))
        n_obs = int(0.5 * 252) + 1
        ratios = []
        for rep in range(4000):
            paths = simulate_g2pp(G2PP_SET_1, n_obs, 1 / 252, grid,
                                  np.random.default_rng(rep))
            bank = np.exp(np.trapezoid(paths.short_rate, dx=1 / 252))
            ratios.append(paths.prices.values[-1, 0] / bank)
        ratios = np.array(ratios)
        target = float(g2pp_discount(G2PP_SET_1, 10.0))
        se = ratios.std(ddof=1) / np.sqrt(len(ratios))
        assert abs(ratios.mean() - target) < 3 * se + 1e-4

    def test_forward_curve_consistent_with_price_derivative(self):
        dense = MaturityGrid(tuple(np.linspace(0.5, 10.0, 200)))
        paths = simulate_g2pp(G2PP_SET_1, 40, 1 / 252, dense, seed=9)
        logp = np.log(paths.prices.values[-1])
        fd = -np.gradient(logp, dense.array)
        np.testing.assert_allclose(paths.forwards.values[-1][2:-2], fd[2:-2], atol=2e-4)

    def test_reproducible(self):
        a = simulate_g2pp(G2PP_SET_1, 60, 1 / 252, GRID, seed=4)
        b = simulate_g2pp(G2PP_SET_1, 60, 1 / 252, GRID, seed=4)
        assert np.array_equal(a.factors, b.factors)


class TestIntegratedVariance:
    def test_zero_vol_gives_zero(self):
        params = G2ppParams(kappa1=0.8, kappa2=0.7, upsilon1=0.0, upsilon2=0.0, rho=0.0)
        assert g2pp_integrated_variance(params, 0.25, 10.0) == 0.0

    def test_vanishing_horizon(self):
        assert g2pp_integrated_variance(G2PP_SET_1, 0.25, 0.2500001) < 1e-10

    def test_quadrature_oracle(self):
        def b(k, tau):
            return (1.0 - np.exp(-k * tau)) / k

        for params in (G2PP_SET_1, G2PP_SET_2):
            for expiry, maturity in ((0.25, 10.0), (1.0, 10.0)):
                s = np.linspace(0.0, expiry, 10_001)
                d1 = b(params.kappa1, maturity - s) - b(params.kappa1, expiry - s)
                d2 = b(params.kappa2, maturity - s) - b(params.kappa2, expiry - s)
                integrand = (params.upsilon1**2 * d1**2 + params.upsilon2**2 * d2**2
                             + 2 * params.rho * params.upsilon1 * params.upsilon2 * d1 * d2)
                oracle = simpson(integrand, x=s)
                got = g2pp_integrated_variance(params, expiry, maturity)
                assert abs(got / oracle - 1.0) < 1e-6

    def test_invalid_horizon(self):
        with pytest.raises(CurveError):
            g2pp_integrated_variance(G2PP_SET_1, 10.0, 0.25)


class TestOptionPrice:
    def test_intrinsic_limit(self):
        price = bond_option_price(0.98, 0.60, 0.5, 0.0)
        assert price == pytest.approx(0.60 - 0.5 * 0.98)

    def test_deep_out_of_the_money(self):
        assert g2pp_option_price(
            G2PP_SET_1, OptionSpec(expiry=0.25, maturity=10.0, strike=50.0)) < 1e-12

    def test_monotone_in_strike_and_vol(self):
        strikes = (0.45, 0.5, 0.55, 0.6)
        prices = [g2pp_option_price(G2PP_SET_1,
                                    OptionSpec(expiry=0.25, maturity=10.0, strike=k))
                  for k in strikes]
        assert all(a > b for a, b in zip(prices, prices[1:]))
        bumped = G2ppParams(kappa1=0.8, kappa2=0.7, upsilon1=0.12, upsilon2=0.1, rho=-0.3)
        for k in strikes:
            opt = OptionSpec(expiry=0.25, maturity=10.0, strike=k)
            assert g2pp_option_price(bumped, opt) >= g2pp_option_price(G2PP_SET_1, opt)

    def test_monte_carlo_pricing_oracle(self):
        # independent implementation: exact OU steps, trapezoid bank account,
        # terminal bond from the affine exponent
        params = G2PP_SET_1
        opt = OptionSpec(expiry=0.25, maturity=10.0, strike=0.5)
        n_paths, n_steps = 200_000, 126
        dt = opt.expiry / n_steps
        k1, k2, u1, u2, rho = (params.kappa1, params.kappa2, params.upsilon1,
                               params.upsilon2, params.rho)
        var1 = u1**2 * (1 - np.exp(-2 * k1 * dt)) / (2 * k1)
        var2 = u2**2 * (1 - np.exp(-2 * k2 * dt)) / (2 * k2)
        cov12 = rho * u1 * u2 * (1 - np.exp(-(k1 + k2) * dt)) / (k1 + k2)
        chol = np.linalg.cholesky(np.array([[var1, cov12], [cov12, var2]]))
        rng = np.random.default_rng(99)

        def b(k, tau):
            return (1 - np.exp(-k * tau)) / k

        def v_slope(t):
            b1, b2 = b(k1, t), b(k2, t)
            return u1**2 * b1**2 + u2**2 * b2**2 + 2 * rho * u1 * u2 * b1 * b2

        def v_total(t):
            t1 = (u1**2 / k1**2) * (t + 2 / k1 * np.exp(-k1 * t)
                                    - 0.5 / k1 * np.exp(-2 * k1 * t) - 1.5 / k1)
            t2 = (u2**2 / k2**2) * (t + 2 / k2 * np.exp(-k2 * t)
                                    - 0.5 / k2 * np.exp(-2 * k2 * t) - 1.5 / k2)
            t12 = (2 * rho * u1 * u2 / (k1 * k2)) * (
                t + (np.exp(-k1 * t) - 1) / k1 + (np.exp(-k2 * t) - 1) / k2
                - (np.exp(-(k1 + k2) * t) - 1) / (k1 + k2))
            return t1 + t2 + t12

        x = np.zeros(n_paths)
        y = np.zeros(n_paths)
        integral = np.zeros(n_paths)
        short_prev = np.full(n_paths, params.flat_rate)
        d1, d2 = np.exp(-k1 * dt), np.exp(-k2 * dt)
        for step in range(1, n_steps + 1):
            z = rng.standard_normal((2, n_paths))
            shock = chol @ z
            x = x * d1 + shock[0]
            y = y * d2 + shock[1]
            t = step * dt
            short = params.flat_rate + 0.5 * v_slope(t) + x + y
            integral += 0.5 * (short + short_prev) * dt
            short_prev = short

        tau = opt.maturity - opt.expiry
        log_p = (-params.flat_rate * tau
                 + 0.5 * (v_total(tau) - v_total(opt.maturity) + v_total(opt.expiry))
                 - b(k1, tau) * x - b(k2, tau) * y)
        payoff = np.maximum(np.exp(log_p) - opt.strike, 0.0) * np.exp(-integral)
        mc_price = payoff.mean()
        analytic = g2pp_option_price(params, opt)
        assert abs(mc_price / analytic - 1.0) < 0.005


class TestOptionSpec:
    def test_validation(self):
        with pytest.raises(CurveError):
            OptionSpec(expiry=1.0, maturity=0.5, strike=0.5)
        with pytest.raises(CurveError):
            OptionSpec(expiry=0.5, maturity=10.0, strike=0.0)
