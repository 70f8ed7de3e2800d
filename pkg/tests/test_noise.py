import numpy as np
import pytest

from ratespca.curves import (
    CurvePanel,
    MaturityGrid,
    averaging_operator,
    first_difference,
    forward_to_yield,
    yield_to_forward,
    yield_to_price,
)
from ratespca.models import DEFAULT_CIR, simulate_cir3
from ratespca.noise import (
    NoiseError,
    NoiseSpec,
    add_iid_gaussian,
    apply_noise,
    draw_omission,
    mme_forward,
    mme_yield,
    spline_ies,
)

GRID = MaturityGrid.standard()


def flat_panel(value=0.05, kind="forward", rows=10):
    return CurvePanel(grid=GRID, values=np.full((rows, 16), value), kind=kind, dt=1 / 252)


class TestNoiseSpec:
    def test_defaults(self):
        spec = NoiseSpec()
        assert spec.kind == "none"
        assert spec.variance == 0.0035

    def test_rejects_unknown_kind_and_negative_variance(self):
        with pytest.raises(NoiseError):
            NoiseSpec(kind="jitter")
        with pytest.raises(NoiseError):
            NoiseSpec(variance=-1.0)


class TestIidGaussian:
    def test_zero_variance_is_identity(self):
        panel = flat_panel()
        out = add_iid_gaussian(panel, 0.0, seed=1)
        assert np.array_equal(out.values, panel.values)

    def test_sample_variance_matches(self):
        panel = CurvePanel(grid=GRID, values=np.zeros((10_000, 16)), kind="yield",
                           dt=1 / 252)
        out = add_iid_gaussian(panel, 0.0035, seed=5)
        sample_var = out.values.var()
        assert abs(sample_var / 0.0035 - 1.0) < 0.02

    def test_seed_determinism(self):
        panel = flat_panel()
        a = add_iid_gaussian(panel, 0.001, seed=7)
        b = add_iid_gaussian(panel, 0.001, seed=7)
        c = add_iid_gaussian(panel, 0.001, seed=8)
        assert np.array_equal(a.values, b.values)
        assert not np.allclose(a.values, c.values)


class TestMmeForward:
    def test_zero_variance_reproduces_clean_pipeline(self):
        panel = flat_panel()
        x_panel, z_panel = mme_forward(panel, 0.0, seed=1)
        assert np.array_equal(x_panel.values, panel.values)
        np.testing.assert_allclose(z_panel.values, forward_to_yield(panel).values)

    def test_constant_error_passes_through_averaging(self):
        panel = flat_panel(rows=3)
        shifted = panel.with_values(panel.values + 0.002)
        z_clean = forward_to_yield(panel).values
        z_shift = forward_to_yield(shifted).values
        np.testing.assert_allclose(z_shift - z_clean, 0.002, atol=1e-15)

    def test_yield_noise_variance_matches_weight_norm(self):
        # eta = J eps, so Var(eta_k) = variance * ||row_k(J)||^2
        variance = 0.0035
        panel = CurvePanel(grid=GRID, values=np.zeros((40_000, 16)), kind="forward",
                           dt=1 / 252)
        _, z_panel = mme_forward(panel, variance, seed=3)
        J = averaging_operator(GRID).matrix
        expected = variance * (J**2).sum(axis=1)
        observed = z_panel.values.var(axis=0)
        np.testing.assert_allclose(observed, expected, rtol=0.05)

    def test_grid_and_shape_preserved(self):
        panel = flat_panel(rows=7)
        x_panel, z_panel = mme_forward(panel, 0.001, seed=2)
        for out in (x_panel, z_panel):
            assert out.values.shape == panel.values.shape
            assert out.grid == panel.grid
            assert out.dt == panel.dt


class TestMmeYield:
    def test_zero_variance_reproduces_clean_pipeline(self):
        panel = flat_panel(kind="yield")
        z_panel, x_panel = mme_yield(panel, 0.0, seed=1)
        assert np.array_equal(z_panel.values, panel.values)
        np.testing.assert_allclose(x_panel.values, yield_to_forward(panel).values)

    def test_constant_error_has_no_derivative_term(self):
        panel = flat_panel(kind="yield", rows=3)
        shifted = panel.with_values(panel.values + 0.004)
        np.testing.assert_allclose(
            yield_to_forward(shifted).values - yield_to_forward(panel).values,
            0.004, atol=1e-13)

    def test_differenced_noise_has_negative_ma_structure(self):
        # the derivative term turns IID-in-time noise into a first-difference
        # moving average: per column the lag-1 time autocorrelation of the
        # differenced contamination is about -1/2
        panel = CurvePanel(grid=GRID, values=np.zeros((2000, 16)), kind="yield",
                           dt=1 / 252)
        _, x_panel = mme_yield(panel, 0.0035, seed=9)
        diffs = np.diff(x_panel.values, axis=0)
        for k in range(16):
            col = diffs[:, k]
            rho = (col[1:] @ col[:-1]) / (col @ col)
            assert rho < -0.3

    def test_adjacent_maturity_noise_correlation_mostly_negative(self):
        panel = CurvePanel(grid=GRID, values=np.zeros((30_000, 16)), kind="yield",
                           dt=1 / 252)
        _, x_panel = mme_yield(panel, 0.0035, seed=4)
        eps = x_panel.values
        corr = [np.corrcoef(eps[:, k], eps[:, k + 1])[0, 1] for k in range(1, 14)]
        assert np.median(corr) < 0


class TestSplineIes:
    @staticmethod
    def cir_price_panel(rows=40, seed=0):
        paths = simulate_cir3(DEFAULT_CIR, rows, 1 / 12, GRID, seed)
        return paths.prices

    def test_zero_omissions_is_clean_pipeline(self):
        panel = self.cir_price_panel()
        z_panel, x_panel = spline_ies(panel, 0, seed=1)
        from ratespca.curves import price_to_yield

        np.testing.assert_allclose(z_panel.values, price_to_yield(panel).values)

    def test_exact_on_affine_price_curves(self):
        # the exactness class of a natural spline is curves with zero second
        # derivative at the end knots; among cubics that means affine ones
        x = GRID.array
        affine = 0.95 - 0.03 * x
        panel = CurvePanel(grid=GRID, values=np.tile(affine, (5, 1)), kind="price",
                           dt=1 / 12)
        z_panel, _ = spline_ies(panel, 4, seed=3)
        prices = yield_to_price(z_panel).values
        assert np.max(np.abs(prices - affine)) < 1e-10

    def test_generic_cubic_reproduced_up_to_boundary_effect(self):
        x = GRID.array
        cubic = 0.9 - 0.02 * x + 0.004 * x**2 - 0.0002 * x**3
        panel = CurvePanel(grid=GRID, values=np.tile(cubic, (5, 1)), kind="price",
                           dt=1 / 12)
        z_panel, _ = spline_ies(panel, 4, seed=3)
        prices = yield_to_price(z_panel).values
        # the natural end conditions disagree with the cubic's curvature at
        # the boundary knots; the refit error stays at that localized scale
        assert np.max(np.abs(prices - cubic)) < 5e-3

    def test_matches_independent_spline_implementation(self):
        panel = self.cir_price_panel(rows=12, seed=5)
        rng_a = np.random.default_rng(77)
        z_panel, _ = spline_ies(panel, 4, rng_a)

        # replay the same omission draws against a hand-rolled natural spline
        rng_b = np.random.default_rng(77)
        x = GRID.array
        rebuilt = panel.values.copy()
        for t in range(panel.n_obs):
            omitted = draw_omission(16, 4, rng_b)
            keep = np.setdiff1d(np.arange(16), omitted)
            rebuilt[t, omitted] = natural_spline_eval(x[keep], rebuilt[t][keep],
                                                      x[omitted])
        yields = -np.log(rebuilt) / x
        np.testing.assert_allclose(z_panel.values, yields, atol=1e-9)

    def test_interpolation_error_is_nonzero_on_cir_prices(self):
        panel = self.cir_price_panel(rows=30, seed=8)
        z_panel, _ = spline_ies(panel, 4, seed=11)
        from ratespca.curves import price_to_yield

        clean = price_to_yield(panel).values
        rms = np.sqrt(np.mean((z_panel.values - clean) ** 2))
        assert rms > 0

    def test_endpoints_never_omitted(self):
        rng = np.random.default_rng(123)
        for _ in range(500):
            omitted = draw_omission(16, 4, rng)
            assert 0 not in omitted
            assert 15 not in omitted
            assert len(set(omitted.tolist())) == 4

    def test_same_seed_same_omissions(self):
        panel = self.cir_price_panel(rows=15, seed=2)
        a, _ = spline_ies(panel, 4, seed=42)
        b, _ = spline_ies(panel, 4, seed=42)
        assert np.array_equal(a.values, b.values)

    def test_omit_count_bounds(self):
        panel = self.cir_price_panel(rows=3)
        with pytest.raises(NoiseError):
            spline_ies(panel, 14, seed=0)


def natural_spline_eval(xk, yk, xq):
    """Textbook natural cubic spline: tridiagonal solve for second derivatives."""
    n = len(xk)
    h = np.diff(xk)
    a = np.zeros((n, n))
    rhs = np.zeros(n)
    a[0, 0] = a[-1, -1] = 1.0
    for i in range(1, n - 1):
        a[i, i - 1] = h[i - 1] / 6
        a[i, i] = (h[i - 1] + h[i]) / 3
        a[i, i + 1] = h[i] / 6
        rhs[i] = (yk[i + 1] - yk[i]) / h[i] - (yk[i] - yk[i - 1]) / h[i - 1]
    m = np.linalg.solve(a, rhs)
    out = np.empty(len(xq))
    for j, xv in enumerate(xq):
        i = int(np.clip(np.searchsorted(xk, xv) - 1, 0, n - 2))
        t1 = xk[i + 1] - xv
        t2 = xv - xk[i]
        out[j] = (m[i] * t1**3 + m[i + 1] * t2**3) / (6 * h[i]) \
            + (yk[i] - m[i] * h[i]**2 / 6) * t1 / h[i] \
            + (yk[i + 1] - m[i + 1] * h[i]**2 / 6) * t2 / h[i]
    return out


class TestApplyNoise:
    def test_dimensions_always_preserved(self):
        fwd = flat_panel(rows=9)
        yld = flat_panel(kind="yield", rows=9)
        prices = TestSplineIes.cir_price_panel(rows=9)
        cases = [
            (NoiseSpec(kind="none"), dict(forwards=fwd)),
            (NoiseSpec(kind="iid_gaussian", variance=1e-6), dict(forwards=fwd)),
            (NoiseSpec(kind="mme_on_forward", variance=1e-6), dict(forwards=fwd)),
            (NoiseSpec(kind="mme_on_yield", variance=1e-6), dict(yields=yld)),
            (NoiseSpec(kind="spline_ies", omit_count=4), dict(prices=prices)),
        ]
        for spec, kwargs in cases:
            x_panel, z_panel = apply_noise(spec, seed=3, **kwargs)
            assert x_panel.values.shape == (9, 16)
            assert z_panel.values.shape == (9, 16)
            assert x_panel.kind == "forward"
            assert z_panel.kind == "yield"

    def test_missing_input_raises(self):
        with pytest.raises(NoiseError):
            apply_noise(NoiseSpec(kind="mme_on_yield"), seed=0, forwards=flat_panel())
