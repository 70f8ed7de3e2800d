"""Spectral decomposition of covariance estimates and derived quantities.

Covers eigendecomposition with deterministic ordering and signs, cumulative
explained variance, factor counting, extraction of annualized volatility
loadings from first-difference covariances, and the bond-option integrated
variance implied by a set of loadings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import MaturityGrid
from .lrcov import CovarianceEstimate


class PcaError(ValueError):
    """Raised for invalid spectral inputs."""


@dataclass(frozen=True)
class PcaDecomposition:
    """Descending eigenvalues with sign-normalized orthonormal loadings."""

    eigenvalues: np.ndarray
    loadings: np.ndarray
    estimator: str
    n_obs: int
    dt: float

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.loadings, dtype=float)
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "loadings", v)

    @property
    def cum_r2(self) -> np.ndarray:
        return cumulative_r2(self)


def eigen_decompose(cov: CovarianceEstimate) -> PcaDecomposition:
    """Full symmetric eigendecomposition with deterministic ordering.

    Eigenvalues are sorted descending with a stable sort (ties keep the
    solver's original order); each loading column is sign-normalized so its
    largest-magnitude entry is positive.
    """
    mat = cov.matrix
    asym = float(np.max(np.abs(mat - mat.T), initial=0.0))
    if asym > 1e-10 * max(float(np.max(np.abs(mat), initial=0.0)), 1.0):
        raise PcaError("matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    for k in range(v.shape[1]):
        col = v[:, k]
        dominant = int(np.argmax(np.abs(col)))
        if col[dominant] < 0:
            v[:, k] = -col
    return PcaDecomposition(
        eigenvalues=w, loadings=v, estimator=cov.estimator, n_obs=cov.n_obs, dt=cov.dt,
    )


def cumulative_r2(decomp: PcaDecomposition) -> np.ndarray:
    """Running fraction of total variance explained by the leading components."""
    w = np.clip(decomp.eigenvalues, 0.0, None)
    total = float(w.sum())
    if total <= 0.0:
        raise PcaError("zero-trace spectrum has no explained-variance profile")
    return np.cumsum(w) / total


def count_factors(cum_r2: np.ndarray, threshold: float = 0.99) -> int:
    """Smallest k whose cumulative explained variance reaches the threshold."""
    if not 0.0 < threshold <= 1.0:
        raise PcaError("threshold must lie in (0, 1]")
    c = np.asarray(cum_r2, dtype=float)
    hits = np.nonzero(c >= threshold - 1e-15)[0]
    if hits.size == 0:
        return len(c)
    return int(hits[0]) + 1


@dataclass(frozen=True)
class VolLoadings:
    """Annualized volatility loading vectors on a maturity grid."""

    grid: MaturityGrid
    sigmas: np.ndarray  # n x m, column i = sigma_i(x_k)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sigmas, dtype=float))
        if s.shape[0] != len(self.grid):
            raise PcaError("loading rows must match the maturity grid")
        if s.shape[1] < 1:
            raise PcaError("need at least one loading vector")
        if not np.all(np.isfinite(s)):
            raise PcaError("loadings must be finite")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "sigmas", s)

    @property
    def m(self) -> int:
        return self.sigmas.shape[1]


def extract_volatility(decomp: PcaDecomposition, grid: MaturityGrid,
                       dt: float, m: int) -> VolLoadings:
    """Volatility loadings sigma_i = phi_i sqrt(lambda_i / dt).

    The 1/sqrt(dt) annualization treats the source first-difference panel as
    diffusion increments over dt years.
    """
    if dt <= 0:
        raise PcaError("dt must be positive")
    n = decomp.loadings.shape[0]
    if not 1 <= m <= n:
        raise PcaError(f"m={m} out of range for n={n}")
    lam = decomp.eigenvalues[:m]
    if np.any(lam < -1e-12 * max(abs(decomp.eigenvalues[0]), 1e-300)):
        raise PcaError("negative eigenvalue among retained factors")
    lam = np.clip(lam, 0.0, None)
    sig = decomp.loadings[:, :m] * np.sqrt(lam / dt)
    return VolLoadings(grid=grid, sigmas=sig)


def _piecewise_linear_antiderivative(x: np.ndarray, y: np.ndarray):
    """Antiderivative of the piecewise-linear interpolant of (x, y).

    Flat extrapolation on both sides.  Returns F with F(0) = 0, evaluable at
    arbitrary points.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # Prepend the flat short-end segment [0, x_1].
    knots = np.concatenate(([0.0], x))
    vals = np.concatenate(([y[0]], y))
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(knots))))

    def F(t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        inside = np.clip(t, 0.0, knots[-1])
        base = np.interp(inside, knots, cum)
        # np.interp on cum is exact only at knots; correct within segments.
        idx = np.clip(np.searchsorted(knots, inside, side="right") - 1, 0, len(knots) - 2)
        x0 = knots[idx]
        y0 = vals[idx]
        slope = (vals[idx + 1] - y0) / (knots[idx + 1] - x0)
        seg = inside - x0
        base = cum[idx] + y0 * seg + 0.5 * slope * seg**2
        tail = np.where(t > knots[-1], (t - knots[-1]) * vals[-1], 0.0)
        return base + tail

    return F


def pca_integrated_variance(vol: VolLoadings, expiry: float, maturity: float,
                            simpson_nodes: int = 256) -> float:
    """Integrated bond-return variance implied by time-homogeneous loadings.

    v_hat = sum_i int_0^{T0} ( int_{T0-s}^{T-s} sigma_i(x) dx )^2 ds with
    sigma_i piecewise-linear on the grid and flat beyond it; the inner
    integral is exact for the interpolant, the outer uses composite Simpson.
    """
    if not 0.0 < expiry < maturity:
        raise PcaError("need 0 < expiry < maturity")
    if vol.m < 1:
        raise PcaError("empty loadings")
    n_nodes = max(int(simpson_nodes), 8)
    if n_nodes % 2 == 1:
        n_nodes += 1
    s = np.linspace(0.0, expiry, n_nodes + 1)
    lower = expiry - s
    upper = maturity - s
    total = 0.0
    x = vol.grid.array
    for i in range(vol.m):
        F = _piecewise_linear_antiderivative(x, vol.sigmas[:, i])
        inner = F(upper) - F(lower)
        total += _simpson(inner**2, s)
    return float(total)


def _simpson(y: np.ndarray, x: np.ndarray) -> float:
    h = x[1] - x[0]
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))
