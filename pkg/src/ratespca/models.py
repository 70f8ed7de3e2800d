"""Data-generating processes: Gaussian HJM, 3-factor CIR, and G2++.

The HJM simulator runs an Euler scheme in the time-to-maturity
parameterization on an internal fine grid whose spacing equals the time
step, so the roll-down transport is an exact index shift.  CIR and G2++
produce curves from their affine bond-price formulas; no curve in this
module is ever built by numerical differentiation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .curves import CurvePanel, CurveError, MaturityGrid


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# Gaussian HJM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurveShape:
    """A curve x -> f(x): a named parametric shape or a sampled vector.

    kinds: constant (c), exponential (c * exp(-a x)), hump (c * x * exp(-a x)),
    sampled (piecewise linear through (knots, values), flat beyond).
    """

    kind: str
    scale: float = 1.0
    decay: float = 0.0
    knots: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    @classmethod
    def constant(cls, c: float) -> "CurveShape":
        return cls(kind="constant", scale=c)

    @classmethod
    def exponential(cls, c: float, a: float) -> "CurveShape":
        return cls(kind="exponential", scale=c, decay=a)

    @classmethod
    def hump(cls, c: float, a: float) -> "CurveShape":
        return cls(kind="hump", scale=c, decay=a)

    @classmethod
    def sampled(cls, knots, values) -> "CurveShape":
        return cls(kind="sampled", knots=tuple(map(float, knots)),
                   values=tuple(map(float, values)))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.scale)
        if self.kind == "exponential":
            return self.scale * np.exp(-self.decay * x)
        if self.kind == "hump":
            return self.scale * x * np.exp(-self.decay * x)
        if self.kind == "sampled":
            return np.interp(x, self.knots, self.values)
        raise CurveError(f"unknown shape kind {self.kind!r}")


@dataclass(frozen=True)
class HjmVolSpec:
    """Deterministic volatility factors plus the initial forward curve."""

    factors: tuple[CurveShape, ...]
    initial_curve: tuple[CurveShape, ...]

    def __post_init__(self):
        if len(self.factors) < 1:
            raise CurveError("need at least one volatility factor")

    def initial(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(shape(x) for shape in self.initial_curve)

    @classmethod
    def from_loadings(cls, grid: MaturityGrid, sigmas: np.ndarray,
                      initial_curve: tuple[CurveShape, ...]) -> "HjmVolSpec":
        """Build a spec from loading vectors fitted on a panel (one column each)."""
        sigmas = np.atleast_2d(np.asarray(sigmas, dtype=float))
        factors = tuple(
            CurveShape.sampled(grid.points, sigmas[:, j]) for j in range(sigmas.shape[1])
        )
        return cls(factors=factors, initial_curve=initial_curve)


def default_hjm_spec() -> HjmVolSpec:
    """Three-factor level/slope/curvature volatility over an upward curve.

    Slope and curvature share the 0.5 decay so that the factor span is
    closed under maturity roll-down; the initial curve lives in the same
    span, keeping the simulated panels exactly three-dimensional.
    """
    return HjmVolSpec(
        factors=(
            CurveShape.constant(0.010),
            CurveShape.exponential(0.008, 0.5),
            CurveShape.hump(0.006, 0.5),
        ),
        initial_curve=(
            CurveShape.constant(0.06),
            CurveShape.exponential(-0.02, 0.5),
        ),
    )


def hjm_drift(spec: HjmVolSpec, x: np.ndarray) -> np.ndarray:
    """Risk-neutral drift alpha(x) = sum_j sigma_j(x) * int_0^x sigma_j(u) du.

    The inner integral is trapezoidal on the supplied grid, which must
    start at 0 for the quadrature to cover the full range.
    """
    x = np.asarray(x, dtype=float)
    alpha = np.zeros_like(x)
    for shape in spec.factors:
        sig = shape(x)
        integral = np.concatenate(([0.0], np.cumsum(0.5 * (sig[1:] + sig[:-1]) * np.diff(x))))
        if x[0] > 0:
            integral += sig[0] * x[0]
        alpha += sig * integral
    return alpha


def simulate_gaussian_hjm(spec: HjmVolSpec, n_obs: int, dt: float,
                          grid: MaturityGrid, seed) -> CurvePanel:
    """Simulate a forward-curve panel under the Gaussian HJM dynamics.

    Forward curves evolve on a uniform internal grid with spacing dt, so
    r_{t+dt}(x) = r_t(x + dt) + alpha(x) dt + sum_j sigma_j(x) sqrt(dt) Z_j
    uses an exact one-index shift for the transport term.  The grid carries
    (n_obs - 1) steps of maturity headroom beyond the largest requested
    maturity; the returned panel holds n_obs rows starting at the initial
    curve, restricted to the requested maturities.
    """
    if dt <= 0:
        raise CurveError("dt must be positive")
    if n_obs < 1:
        raise CurveError("need at least one observation")
    rng = _as_rng(seed)
    x_req = grid.array
    n_steps = n_obs - 1
    n_inner = int(np.ceil(x_req[-1] / dt - 1e-9))
    n_fine = n_inner + n_steps + 1
    x_fine = np.arange(n_fine + 1) * dt

    sigma = np.stack([shape(x_fine) for shape in spec.factors])  # d x (n_fine+1)
    if not np.all(np.isfinite(sigma)):
        raise CurveError("volatility factors must be finite on the grid")
    alpha = hjm_drift(spec, x_fine)
    r = spec.initial(x_fine)
    if not np.all(np.isfinite(r)):
        raise CurveError("initial curve must be finite on the grid")

    x_usable = x_fine[: n_inner + 1]
    out = np.empty((n_obs, len(x_req)))
    out[0] = np.interp(x_req, x_usable, r[: n_inner + 1])
    sqrt_dt = np.sqrt(dt)
    for t in range(1, n_obs):
        z = rng.standard_normal(len(spec.factors))
        shock = sigma.T @ z
        r[:-1] = r[1:] + alpha[:-1] * dt + sqrt_dt * shock[:-1]
        r[-1] += alpha[-1] * dt + sqrt_dt * shock[-1]
        out[t] = np.interp(x_req, x_usable, r[: n_inner + 1])
    return CurvePanel(grid=grid, values=out, kind="forward", dt=dt)


# ---------------------------------------------------------------------------
# Three-factor CIR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cir3Params:
    """Parameters of three independent square-root factors."""

    kappa: tuple[float, float, float]
    theta: tuple[float, float, float]
    sigma: tuple[float, float, float]
    y0: tuple[float, float, float] | None = None

    def __post_init__(self):
        for name in ("kappa", "theta", "sigma"):
            vals = getattr(self, name)
            if len(vals) != 3 or any(v <= 0 for v in vals):
                raise CurveError(f"{name} must be three positive values")
        y0 = self.theta if self.y0 is None else self.y0
        if any(v < 0 for v in y0):
            raise CurveError("initial factor values must be nonnegative")
        object.__setattr__(self, "y0", tuple(float(v) for v in y0))
        for k, th, s in zip(self.kappa, self.theta, self.sigma):
            if 2.0 * k * th <= s**2:
                warnings.warn(
                    f"Feller condition violated (2*{k}*{th} <= {s}^2); "
                    "factor paths may stick at zero", stacklevel=2)


# Stationary, Feller-compliant baseline set.
DEFAULT_CIR = Cir3Params(
    kappa=(0.8, 0.2, 1.2),
    theta=(0.02, 0.03, 0.01),
    sigma=(0.10, 0.05, 0.12),
)


def _cir_coefficients(params: Cir3Params, x: np.ndarray):
    """Per-factor A_i(x), B_i(x) plus the derivatives of their logs.

    Standard single-factor bond-price coefficients with h = sqrt(k^2 + 2 s^2):
    B = 2(e^{hx}-1)/D, A = [2h e^{(k+h)x/2}/D]^{2 k th / s^2},
    D = 2h + (k+h)(e^{hx}-1).
    """
    x = np.asarray(x, dtype=float)
    log_a = np.zeros((3,) + x.shape)
    b = np.zeros_like(log_a)
    dlog_a = np.zeros_like(log_a)
    db = np.zeros_like(log_a)
    for i, (k, th, s) in enumerate(zip(params.kappa, params.theta, params.sigma)):
        h = np.sqrt(k**2 + 2.0 * s**2)
        e = np.expm1(h * x)  # e^{hx} - 1
        d = 2.0 * h + (k + h) * e
        b[i] = 2.0 * e / d
        power = 2.0 * k * th / s**2
        log_a[i] = power * (np.log(2.0 * h) + 0.5 * (k + h) * x - np.log(d))
        d_prime = (k + h) * h * (e + 1.0)
        dlog_a[i] = power * (0.5 * (k + h) - d_prime / d)
        db[i] = 4.0 * h**2 * (e + 1.0) / d**2
    return log_a, b, dlog_a, db


def cir_bond_prices(params: Cir3Params, factors: np.ndarray, grid: MaturityGrid) -> np.ndarray:
    """P_t(x) = prod_i A_i(x) exp(-B_i(x) Y_t^i) for each row of factors."""
    log_a, b, _, _ = _cir_coefficients(params, grid.array)
    log_p = log_a.sum(axis=0)[None, :] - factors @ b
    return np.exp(log_p)


def cir_forward_curves(params: Cir3Params, factors: np.ndarray, grid: MaturityGrid) -> np.ndarray:
    """Analytic instantaneous forwards f_t(x) = -d log P_t / dx."""
    _, _, dlog_a, db = _cir_coefficients(params, grid.array)
    return -dlog_a.sum(axis=0)[None, :] + factors @ db


@dataclass(frozen=True)
class Cir3Paths:
    factors: np.ndarray
    yields: CurvePanel
    prices: CurvePanel
    forwards: CurvePanel

    @property
    def short_rate(self) -> np.ndarray:
        return self.factors.sum(axis=1)


def simulate_cir3(params: Cir3Params, n_obs: int, dt: float,
                  grid: MaturityGrid, seed) -> Cir3Paths:
    """Full-truncation Euler paths of the three factors plus affine curves.

    The short rate is the factor sum; prices come from the per-factor affine
    coefficients, yields from -log P / x, forwards from the analytic maturity
    derivative of the affine exponents.
    """
    if dt <= 0:
        raise CurveError("dt must be positive")
    if n_obs < 1:
        raise CurveError("need at least one observation")
    rng = _as_rng(seed)
    kappa = np.asarray(params.kappa)
    theta = np.asarray(params.theta)
    sigma = np.asarray(params.sigma)
    y = np.asarray(params.y0, dtype=float)
    factors = np.empty((n_obs, 3))
    factors[0] = y
    sqrt_dt = np.sqrt(dt)
    for t in range(1, n_obs):
        z = rng.standard_normal(3)
        y = y + kappa * (theta - y) * dt + sigma * np.sqrt(np.maximum(y, 0.0)) * sqrt_dt * z
        y = np.maximum(y, 0.0)
        factors[t] = y

    prices = cir_bond_prices(params, factors, grid)
    x = grid.array
    yields = -np.log(prices) / x
    forwards = cir_forward_curves(params, factors, grid)
    return Cir3Paths(
        factors=factors,
        yields=CurvePanel(grid=grid, values=yields, kind="yield", dt=dt),
        prices=CurvePanel(grid=grid, values=prices, kind="price", dt=dt),
        forwards=CurvePanel(grid=grid, values=forwards, kind="forward", dt=dt),
    )


# ---------------------------------------------------------------------------
# G2++ (two-factor additive Gaussian model, flat initial curve)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class G2ppParams:
    """Two correlated mean-reverting Gaussian factors over a flat initial curve."""

    kappa1: float
    kappa2: float
    upsilon1: float
    upsilon2: float
    rho: float
    flat_rate: float = 0.05

    def __post_init__(self):
        if self.kappa1 <= 0 or self.kappa2 <= 0:
            raise CurveError("mean reversions must be positive")
        if self.upsilon1 < 0 or self.upsilon2 < 0:
            raise CurveError("volatilities must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise CurveError("correlation must lie in [-1, 1]")


# The two parameter sets used in the pricing study.
G2PP_SET_1 = G2ppParams(kappa1=0.8, kappa2=0.7, upsilon1=0.1, upsilon2=0.1, rho=-0.3)
G2PP_SET_2 = G2ppParams(kappa1=0.9, kappa2=0.85, upsilon1=0.1, upsilon2=0.2, rho=-0.3)


@dataclass(frozen=True)
class OptionSpec:
    """European call on a zero-coupon bond: pays max(P(T0, T) - K, 0) at T0."""

    expiry: float
    maturity: float
    strike: float

    def __post_init__(self):
        if not 0.0 < self.expiry < self.maturity:
            raise CurveError("need 0 < expiry < maturity")
        if self.strike <= 0:
            raise CurveError("strike must be positive")


def _b_factor(kappa: float, tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    return (1.0 - np.exp(-kappa * tau)) / kappa


def g2pp_forward_vol(params: G2ppParams, tau, form: str = "standard") -> np.ndarray:
    """Instantaneous forward-rate volatility at time-to-maturity tau.

    form="standard" squares the per-factor loadings upsilon_i e^{-kappa_i tau};
    form="paper" keeps single (not doubled) decay rates under the squared
    terms.  Both agree at tau = 0 and the drivers carry correlation rho.
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise CurveError("tau must be nonnegative")
    k1, k2 = params.kappa1, params.kappa2
    u1, u2 = params.upsilon1, params.upsilon2
    if form == "standard":
        rad = (u1**2 * np.exp(-2 * k1 * tau) + u2**2 * np.exp(-2 * k2 * tau)
               + 2 * params.rho * u1 * u2 * np.exp(-(k1 + k2) * tau))
    elif form == "paper":
        rad = (u1**2 * np.exp(-k1 * tau) + u2**2 * np.exp(-k2 * tau)
               + 2 * params.rho * u1 * u2 * np.exp(-(k1 + k2) * tau))
    else:
        raise CurveError(f"unknown vol form {form!r}")
    return np.sqrt(rad)


def g2pp_factor_loadings(params: G2ppParams, x) -> np.ndarray:
    """Per-factor instantaneous forward loadings sigma_i(x) = upsilon_i e^{-kappa_i x}."""
    x = np.asarray(x, dtype=float)
    return np.stack([params.upsilon1 * np.exp(-params.kappa1 * x),
                     params.upsilon2 * np.exp(-params.kappa2 * x)], axis=-1)


def _v_total(params: G2ppParams, tau) -> np.ndarray:
    """Accumulated bond-return variance function V(tau) of the affine exponent."""
    tau = np.asarray(tau, dtype=float)
    k1, k2 = params.kappa1, params.kappa2
    u1, u2 = params.upsilon1, params.upsilon2
    t1 = (u1**2 / k1**2) * (tau + (2.0 / k1) * np.exp(-k1 * tau)
                            - (0.5 / k1) * np.exp(-2 * k1 * tau) - 1.5 / k1)
    t2 = (u2**2 / k2**2) * (tau + (2.0 / k2) * np.exp(-k2 * tau)
                            - (0.5 / k2) * np.exp(-2 * k2 * tau) - 1.5 / k2)
    t12 = (2.0 * params.rho * u1 * u2 / (k1 * k2)) * (
        tau + (np.exp(-k1 * tau) - 1.0) / k1 + (np.exp(-k2 * tau) - 1.0) / k2
        - (np.exp(-(k1 + k2) * tau) - 1.0) / (k1 + k2))
    return t1 + t2 + t12


def _v_slope(params: G2ppParams, tau) -> np.ndarray:
    """dV/dtau = sum_{ij} rho_ij upsilon_i upsilon_j B_i(tau) B_j(tau)."""
    b1 = _b_factor(params.kappa1, tau)
    b2 = _b_factor(params.kappa2, tau)
    u1, u2 = params.upsilon1, params.upsilon2
    return u1**2 * b1**2 + u2**2 * b2**2 + 2.0 * params.rho * u1 * u2 * b1 * b2


def g2pp_discount(params: G2ppParams, tau) -> np.ndarray:
    """Time-0 zero-coupon prices off the flat initial curve."""
    tau = np.asarray(tau, dtype=float)
    return np.exp(-params.flat_rate * tau)


@dataclass(frozen=True)
class G2ppPaths:
    factors: np.ndarray
    yields: CurvePanel
    forwards: CurvePanel
    prices: CurvePanel
    short_rate: np.ndarray


def simulate_g2pp(params: G2ppParams, n_obs: int, dt: float,
                  grid: MaturityGrid, seed) -> G2ppPaths:
    """Exact-discretization factor paths plus analytic curves.

    Factors follow correlated Ornstein-Uhlenbeck updates with the exact
    one-step covariance; yields and forwards come from the affine exponent
    (with the deterministic shift that pins the time-0 curve flat), never
    from numerical differentiation.
    """
    if dt <= 0:
        raise CurveError("dt must be positive")
    if n_obs < 1:
        raise CurveError("need at least one observation")
    rng = _as_rng(seed)
    k1, k2 = params.kappa1, params.kappa2
    u1, u2 = params.upsilon1, params.upsilon2

    var1 = u1**2 * (1.0 - np.exp(-2 * k1 * dt)) / (2 * k1)
    var2 = u2**2 * (1.0 - np.exp(-2 * k2 * dt)) / (2 * k2)
    cov12 = params.rho * u1 * u2 * (1.0 - np.exp(-(k1 + k2) * dt)) / (k1 + k2)
    cov = np.array([[var1, cov12], [cov12, var2]])
    # Cholesky with a graceful degenerate branch for zero-vol factors.
    if var1 > 0 and var2 > 0:
        chol = np.linalg.cholesky(cov + 1e-300 * np.eye(2))
    else:
        chol = np.diag(np.sqrt(np.maximum(np.diag(cov), 0.0)))

    decay = np.array([np.exp(-k1 * dt), np.exp(-k2 * dt)])
    factors = np.zeros((n_obs, 2))
    state = np.zeros(2)
    for t in range(1, n_obs):
        state = state * decay + chol @ rng.standard_normal(2)
        factors[t] = state

    x = grid.array
    times = np.arange(n_obs) * dt
    b1 = _b_factor(k1, x)
    b2 = _b_factor(k2, x)
    v_x = _v_total(params, x)
    v_t = _v_total(params, times)
    v_tx = _v_total(params, times[:, None] + x[None, :])
    affine = (0.5 * (v_x[None, :] - v_tx + v_t[:, None])
              - np.outer(factors[:, 0], b1) - np.outer(factors[:, 1], b2))
    log_p = -params.flat_rate * x[None, :] + affine
    yields = -log_p / x[None, :]

    vs_x = _v_slope(params, x)
    vs_tx = _v_slope(params, times[:, None] + x[None, :])
    forwards = (params.flat_rate - 0.5 * (vs_x[None, :] - vs_tx)
                + np.outer(factors[:, 0], np.exp(-k1 * x))
                + np.outer(factors[:, 1], np.exp(-k2 * x)))

    short = params.flat_rate + 0.5 * _v_slope(params, times) + factors.sum(axis=1)
    return G2ppPaths(
        factors=factors,
        yields=CurvePanel(grid=grid, values=yields, kind="yield", dt=dt),
        forwards=CurvePanel(grid=grid, values=forwards, kind="forward", dt=dt),
        prices=CurvePanel(grid=grid, values=np.exp(log_p), kind="price", dt=dt),
        short_rate=short,
    )


def g2pp_integrated_variance(params: G2ppParams, expiry: float, maturity: float) -> float:
    """Variance of log P(T0, T) accumulated over [0, T0].

    v = sum_{ij} rho_ij (u_i u_j / (k_i k_j)) (1 - e^{-k_i (T-T0)})
        (1 - e^{-k_j (T-T0)}) (1 - e^{-(k_i + k_j) T0}) / (k_i + k_j).
    """
    if not 0.0 < expiry < maturity:
        raise CurveError("need 0 < expiry < maturity")
    k = (params.kappa1, params.kappa2)
    u = (params.upsilon1, params.upsilon2)
    rho = ((1.0, params.rho), (params.rho, 1.0))
    span = maturity - expiry
    total = 0.0
    for i in range(2):
        for j in range(2):
            total += (rho[i][j] * u[i] * u[j] / (k[i] * k[j])
                      * (1.0 - np.exp(-k[i] * span)) * (1.0 - np.exp(-k[j] * span))
                      * (1.0 - np.exp(-(k[i] + k[j]) * expiry)) / (k[i] + k[j]))
    return float(total)


def bond_option_price(discount_expiry: float, discount_maturity: float,
                      strike: float, variance: float) -> float:
    """Black-type call on a zero-coupon bond given the integrated variance.

    C = P(0,T) Phi(d+) - K P(0,T0) Phi(d-).  Degenerate variance returns
    the discounted intrinsic value.
    """
    if variance <= 1e-16:
        return max(discount_maturity - strike * discount_expiry, 0.0)
    sqrt_v = np.sqrt(variance)
    d_plus = np.log(discount_maturity / (strike * discount_expiry)) / sqrt_v + 0.5 * sqrt_v
    d_minus = d_plus - sqrt_v
    return float(discount_maturity * norm.cdf(d_plus)
                 - strike * discount_expiry * norm.cdf(d_minus))


def g2pp_option_price(params: G2ppParams, opt: OptionSpec) -> float:
    """Analytic call price on a zero-coupon bond under the model."""
    v = g2pp_integrated_variance(params, opt.expiry, opt.maturity)
    p_expiry = float(g2pp_discount(params, opt.expiry))
    p_maturity = float(g2pp_discount(params, opt.maturity))
    return bond_option_price(p_expiry, p_maturity, opt.strike, v)
