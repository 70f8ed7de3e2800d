"""Contamination generators for the observed-curve model X = r + eps, Z = y + eta.

Two mechanisms: additive market-microstructure noise (IID Gaussian per cell,
propagated through the maturity-average or maturity-derivative map), and the
interpolation error induced by refitting price curves with a natural cubic
spline after dropping interior maturities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curves import (
    CurveError,
    CurvePanel,
    first_difference,  # noqa: F401  (re-exported for pipeline convenience)
    forward_to_yield,
    price_to_yield,
    yield_to_forward,
)

NOISE_KINDS = ("none", "iid_gaussian", "mme_on_forward", "mme_on_yield", "spline_ies")

# The contamination scale the observational-error study uses, in the units of
# the panels it is applied to (percent rates in the experiment pipelines).
DEFAULT_NOISE_VARIANCE = 0.0035
DEFAULT_OMIT_COUNT = 4


class NoiseError(ValueError):
    """Raised for invalid contamination requests."""


@dataclass(frozen=True)
class NoiseSpec:
    """Which contamination to apply, and with what scale."""

    kind: str = "none"
    variance: float = DEFAULT_NOISE_VARIANCE
    omit_count: int = DEFAULT_OMIT_COUNT

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise NoiseError(f"unknown noise kind {self.kind!r}")
        if self.variance < 0:
            raise NoiseError("variance must be nonnegative")
        if self.omit_count < 0:
            raise NoiseError("omit_count must be nonnegative")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def add_iid_gaussian(panel: CurvePanel, variance: float, seed) -> CurvePanel:
    """Add independent N(0, variance) draws to every (date, maturity) cell."""
    if variance < 0:
        raise NoiseError("variance must be nonnegative")
    if panel.transform != "level":
        raise NoiseError("contamination applies to level panels")
    if variance == 0:
        return panel
    rng = _as_rng(seed)
    eps = rng.normal(0.0, np.sqrt(variance), size=panel.values.shape)
    return panel.with_values(panel.values + eps)


def mme_forward(panel: CurvePanel, variance: float, seed) -> tuple[CurvePanel, CurvePanel]:
    """Microstructure noise on the forward curve.

    X = r + eps with IID Gaussian eps; Z is the maturity average of X, so the
    yield-curve error is the trapezoidal average of eps.  Returns (X, Z).
    """
    if panel.kind != "forward":
        raise NoiseError("mme_forward expects a forward panel")
    x_panel = add_iid_gaussian(panel, variance, seed)
    return x_panel, forward_to_yield(x_panel)


def mme_yield(panel: CurvePanel, variance: float, seed) -> tuple[CurvePanel, CurvePanel]:
    """Microstructure noise on the yield curve.

    Z = y + eta with IID Gaussian eta; X is rebuilt through r = y + x dy/dx,
    so the forward-curve error inherits the maturity derivative of eta and
    its negatively persistent moving-average structure.  Returns (Z, X).
    """
    if panel.kind != "yield":
        raise NoiseError("mme_yield expects a yield panel")
    z_panel = add_iid_gaussian(panel, variance, seed)
    return z_panel, yield_to_forward(z_panel)


def draw_omission(n_maturities: int, omit_count: int, rng: np.random.Generator) -> np.ndarray:
    """Distinct interior maturity indices to drop; endpoints are never omitted."""
    interior = n_maturities - 2
    if omit_count > interior:
        raise NoiseError(
            f"cannot omit {omit_count} of {interior} interior maturities")
    return np.sort(rng.choice(np.arange(1, n_maturities - 1), size=omit_count,
                              replace=False))


def spline_ies(panel: CurvePanel, omit_count: int, seed,
               per_date: bool = True) -> tuple[CurvePanel, CurvePanel]:
    """Interpolation-error contamination from natural cubic spline refits.

    Drops omit_count interior maturities from each date's price curve, refits
    a natural cubic spline through the remaining knots, and reads the dropped
    prices off the spline.  The rebuilt prices give Z via -log P / x and X via
    r = y + x dy/dx.  Returns (Z, X).

    With per_date=True the omission pattern is redrawn for every date, which
    makes the interpolation error fluctuate observation-to-observation the way
    a daily curve-construction pipeline does; per_date=False freezes a single
    pattern for the whole panel.
    """
    if panel.kind != "price":
        raise NoiseError("spline_ies expects a price panel")
    n = panel.n_maturities
    if n < omit_count + 3:
        raise NoiseError("too few maturities for the requested omission count")
    rng = _as_rng(seed)
    x = panel.grid.array
    prices = panel.values.copy()
    if omit_count > 0:
        if per_date:
            for t in range(prices.shape[0]):
                omitted = draw_omission(n, omit_count, rng)
                prices[t] = _respline_row(x, prices[t], omitted)
        else:
            omitted = draw_omission(n, omit_count, rng)
            for t in range(prices.shape[0]):
                prices[t] = _respline_row(x, prices[t], omitted)
    rebuilt = panel.with_values(prices)
    z_panel = price_to_yield(rebuilt)
    return z_panel, yield_to_forward(z_panel)


def _respline_row(x: np.ndarray, row: np.ndarray, omitted: np.ndarray) -> np.ndarray:
    keep = np.setdiff1d(np.arange(len(x)), omitted)
    spline = CubicSpline(x[keep], row[keep], bc_type="natural")
    out = row.copy()
    out[omitted] = spline(x[omitted])
    return out


def apply_noise(spec: NoiseSpec, seed, *, forwards: CurvePanel | None = None,
                yields: CurvePanel | None = None,
                prices: CurvePanel | None = None) -> tuple[CurvePanel, CurvePanel]:
    """Run one contamination pipeline; returns the observed (X, Z) pair.

    kind "none" and "mme_on_yield" start from the yield panel, building the
    forward curve through the maturity derivative; "iid_gaussian" and
    "mme_on_forward" start from the forward panel; "spline_ies" starts from
    prices.  Exactly the panels a pipeline needs must be supplied.
    """
    if spec.kind in ("iid_gaussian", "mme_on_forward"):
        if forwards is None:
            raise NoiseError(f"{spec.kind} needs a forward panel")
        return mme_forward(forwards, spec.variance, seed)
    if spec.kind == "mme_on_yield":
        if yields is None:
            raise NoiseError("mme_on_yield needs a yield panel")
        z_panel, x_panel = mme_yield(yields, spec.variance, seed)
        return x_panel, z_panel
    if spec.kind == "spline_ies":
        if prices is None:
            raise NoiseError("spline_ies needs a price panel")
        z_panel, x_panel = spline_ies(prices, spec.omit_count, seed)
        return x_panel, z_panel
    # kind == "none": prefer the native panel of the generating model.
    if forwards is not None:
        return forwards, forward_to_yield(forwards)
    if yields is not None:
        return yield_to_forward(yields), yields
    raise NoiseError("clean pipeline needs a forward or yield panel")
