"""Covariance estimators for multivariate curve series.

Four estimators of the covariance structure of a T x n panel:

* static       -- the lag-0 sample covariance,
* andrews_qs   -- quadratic-spectral kernel long-run covariance with the
                  AR(1) plug-in optimal bandwidth,
* vk_bartlett  -- Bartlett kernel with bandwidth equal to the sample size
                  (fixed-b, inconsistent but contamination-robust),
* mueller_ua   -- average of outer products of the first p weighted-cosine
                  transforms of the demeaned series.

All return symmetric matrices; vk and mueller are PSD by construction, the
kernel-weighted forms are symmetrized and eigenvalue-clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CurvePanel

# Plug-in ridge: AR(1) coefficients are capped to keep the optimal bandwidth
# finite near unit roots, and near-constant columns are dropped.
AR1_CAP = 0.97
VARIANCE_FLOOR = 1e-14


class EstimatorError(ValueError):
    """Raised for invalid estimator inputs."""


@dataclass(frozen=True)
class CovarianceEstimate:
    """Symmetric PSD covariance matrix plus estimator metadata."""

    matrix: np.ndarray
    estimator: str
    n_obs: int
    dt: float
    bandwidth: float | None = None
    p: int | None = None
    clipped_mass: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise EstimatorError("covariance matrix must be square")
        asym = float(np.max(np.abs(m - m.T), initial=0.0))
        scale = max(float(np.max(np.abs(m), initial=0.0)), 1.0)
        if asym > 1e-10 * scale:
            raise EstimatorError("covariance matrix is not symmetric")
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def _demeaned(values: np.ndarray) -> np.ndarray:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    return values - values.mean(axis=0, keepdims=True)


def _panel_values(panel: CurvePanel | np.ndarray) -> tuple[np.ndarray, float]:
    if isinstance(panel, CurvePanel):
        return panel.values, panel.dt
    return np.atleast_2d(np.asarray(panel, dtype=float)), 1.0


def autocovariance(panel: CurvePanel | np.ndarray, lag: int) -> np.ndarray:
    """Sample cross-covariance at the given lag, divisor T at every lag.

    gamma_hat(j) = T^{-1} sum_{t=j+1}^{T} (w_t - wbar)(w_{t-j} - wbar)'.
    The uniform divisor T keeps the Bartlett-weighted sum PSD.
    """
    values, _ = _panel_values(panel)
    n_obs = values.shape[0]
    if lag < 0 or lag > n_obs - 1:
        raise EstimatorError(f"lag {lag} out of range for T={n_obs}")
    u = _demeaned(values)
    return u[lag:].T @ u[: n_obs - lag] / n_obs


def psd_clip(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """Symmetrize and clip negative eigenvalues to zero.

    Returns the projected matrix and the total clipped eigenvalue mass.
    """
    sym = 0.5 * (matrix + matrix.T)
    w, v = np.linalg.eigh(sym)
    clipped = float(-np.sum(w[w < 0.0], initial=0.0))
    if clipped == 0.0:
        return sym, 0.0
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T), clipped


def static_cov(panel: CurvePanel | np.ndarray) -> CovarianceEstimate:
    """Lag-0 sample covariance (divisor T)."""
    values, dt = _panel_values(panel)
    if values.shape[0] < 2:
        raise EstimatorError("static covariance needs at least 2 rows")
    return CovarianceEstimate(
        matrix=autocovariance(values, 0), estimator="static",
        n_obs=values.shape[0], dt=dt,
    )


def quadratic_spectral_kernel(x: np.ndarray) -> np.ndarray:
    """Quadratic-spectral kernel, K(0) = 1."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0.0
    z = 6.0 * np.pi * x[nz] / 5.0
    out[nz] = 25.0 / (12.0 * np.pi**2 * x[nz] ** 2) * (np.sin(z) / z - np.cos(z))
    return out


def ar1_plugin_bandwidth(values: np.ndarray) -> float:
    """QS optimal bandwidth 1.3221 * (alpha_hat(2) * T)^{1/5}.

    alpha_hat(2) aggregates per-column least-squares AR(1) fits with unit
    weights; columns with negligible variance are excluded.
    """
    u = _demeaned(values)
    n_obs = u.shape[0]
    num = 0.0
    den = 0.0
    for k in range(u.shape[1]):
        col = u[:, k]
        denom = float(col[:-1] @ col[:-1])
        if denom < VARIANCE_FLOOR:
            continue
        rho = float(col[1:] @ col[:-1]) / denom
        rho = float(np.clip(rho, -AR1_CAP, AR1_CAP))
        resid = col[1:] - rho * col[:-1]
        sig2 = float(resid @ resid) / max(n_obs - 1, 1)
        num += 4.0 * rho**2 * sig2**2 / (1.0 - rho) ** 8
        den += sig2**2 / (1.0 - rho) ** 4
    if den <= 0.0:
        return 1.0
    alpha2 = num / den
    return 1.3221 * (alpha2 * n_obs) ** 0.2


def _weighted_lag_sum(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """gamma(0) + sum_j w_j (gamma(j) + gamma(j)'), weights indexed from lag 1."""
    n_obs = u.shape[0]
    acc = u.T @ u / n_obs
    for j, w in enumerate(weights, start=1):
        if w == 0.0:
            continue
        g = u[j:].T @ u[: n_obs - j] / n_obs
        acc += w * (g + g.T)
    return acc


def andrews_lrcm(panel: CurvePanel | np.ndarray) -> CovarianceEstimate:
    """QS-kernel long-run covariance with the AR(1) plug-in bandwidth."""
    values, dt = _panel_values(panel)
    n_obs = values.shape[0]
    if n_obs < 8:
        raise EstimatorError("andrews estimator needs at least 8 rows")
    u = _demeaned(values)
    bw = ar1_plugin_bandwidth(values)
    lags = np.arange(1, n_obs) / bw
    raw = _weighted_lag_sum(u, quadratic_spectral_kernel(lags))
    cleaned, clipped = psd_clip(raw)
    return CovarianceEstimate(
        matrix=cleaned, estimator="andrews_qs", n_obs=n_obs, dt=dt,
        bandwidth=bw, clipped_mass=clipped,
    )


def vk_lrcm(panel: CurvePanel | np.ndarray) -> CovarianceEstimate:
    """Bartlett kernel with bandwidth equal to the sample size.

    Computed via the O(T n^2) lag sum, which is algebraically identical to
    the T^{-1} double sum over (1 - |i-j|/T) outer products.
    """
    values, dt = _panel_values(panel)
    n_obs = values.shape[0]
    if n_obs < 2:
        raise EstimatorError("vk estimator needs at least 2 rows")
    u = _demeaned(values)
    weights = 1.0 - np.arange(1, n_obs) / n_obs
    raw = _weighted_lag_sum(u, weights)
    cleaned, clipped = psd_clip(raw)
    return CovarianceEstimate(
        matrix=cleaned, estimator="vk_bartlett", n_obs=n_obs, dt=dt,
        bandwidth=float(n_obs), clipped_mass=clipped,
    )


def cosine_basis(n_obs: int, p: int) -> np.ndarray:
    """p x T matrix with rows v_l(t) = sqrt(2/T) cos(l pi (t - 1/2) / T)."""
    t = np.arange(1, n_obs + 1)
    l = np.arange(1, p + 1)
    return np.sqrt(2.0 / n_obs) * np.cos(np.outer(l, np.pi * (t - 0.5) / n_obs))


def mueller_ua(panel: CurvePanel | np.ndarray, p: int = 4,
               literal_residual: bool = False) -> CovarianceEstimate:
    """Fixed-portion cosine-transform long-run covariance with p components.

    The default averages the outer products of the p cosine-projection
    coefficients, which is PSD with chi^2_p/p small-sample behavior.  The
    literal_residual variant instead forms the outer product of the summed
    regression residuals divided by p; it is rank one and kept only for
    comparison.
    """
    values, dt = _panel_values(panel)
    n_obs = values.shape[0]
    if not 1 <= p < n_obs:
        raise EstimatorError(f"p={p} out of range for T={n_obs}")
    u = _demeaned(values)
    basis = cosine_basis(n_obs, p)
    coef = basis @ u  # p x n projection coefficients
    if literal_residual:
        resid = u - basis.T @ coef
        s = resid.sum(axis=0, keepdims=True)
        mat = s.T @ s / p
    else:
        mat = coef.T @ coef / p
    return CovarianceEstimate(
        matrix=0.5 * (mat + mat.T), estimator="mueller_ua", n_obs=n_obs, dt=dt, p=p,
    )


ESTIMATORS = {
    "static": static_cov,
    "andrews_qs": andrews_lrcm,
    "vk_bartlett": vk_lrcm,
    "mueller_ua": mueller_ua,
}


def estimate(panel: CurvePanel | np.ndarray, estimator: str, p: int = 4) -> CovarianceEstimate:
    """Dispatch by estimator name."""
    if estimator not in ESTIMATORS:
        raise EstimatorError(f"unknown estimator {estimator!r}")
    if estimator == "mueller_ua":
        return mueller_ua(panel, p=p)
    return ESTIMATORS[estimator](panel)
