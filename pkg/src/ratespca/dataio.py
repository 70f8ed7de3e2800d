"""Panel CSV round-trips, dataset manifests, and the empirical factor pipeline.

Panel CSV layout: header row is the maturity grid in years, first column is
a date or index label, remaining cells are rates.  Panel metadata (kind,
transform, dt) lives in a JSON sidecar next to the CSV.  Ingestion of
external datasets is manifest-driven; units are always declared, never
inferred.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import lrcov, pca
from .curves import (
    CurveError,
    CurvePanel,
    MaturityGrid,
    first_difference,
    forward_to_yield,
    yield_to_forward,
)
from .experiments import ExperimentConfig, ExperimentReport, FactorCell

FREQUENCY_DT = {
    "daily": 1.0 / 252.0,
    "weekly": 1.0 / 52.0,
    "monthly": 1.0 / 12.0,
    "quarterly": 0.25,
    "annual": 1.0,
}


class DataError(ValueError):
    """Raised for malformed files or manifests."""


def _sidecar_path(path: str) -> str:
    return str(path) + ".meta.json"


def write_panel_csv(panel: CurvePanel, path: str, labels=None) -> None:
    """Write a panel plus its metadata sidecar."""
    if labels is None:
        labels = [str(i) for i in range(panel.n_obs)]
    if len(labels) != panel.n_obs:
        raise DataError("one label per row required")
    with open(path, "w") as fh:
        fh.write("label," + ",".join(repr(float(x)) for x in panel.grid.points) + "\n")
        for label, row in zip(labels, panel.values):
            fh.write(str(label) + "," + ",".join(repr(float(v)) for v in row) + "\n")
    with open(_sidecar_path(path), "w") as fh:
        json.dump({"kind": panel.kind, "transform": panel.transform, "dt": panel.dt},
                  fh, indent=2)


def read_panel_csv(path: str, kind: str | None = None, transform: str | None = None,
                   dt: float | None = None) -> CurvePanel:
    """Read a panel CSV; metadata comes from the sidecar unless overridden."""
    meta = {}
    sidecar = _sidecar_path(path)
    if os.path.exists(sidecar):
        with open(sidecar) as fh:
            meta = json.load(fh)
    kind = kind or meta.get("kind")
    transform = transform or meta.get("transform", "level")
    dt = dt if dt is not None else meta.get("dt")
    if kind is None or dt is None:
        raise DataError(f"panel metadata (kind, dt) missing for {path}; "
                        "provide a sidecar or explicit overrides")
    maturities, values, _ = _parse_csv(path)
    try:
        return CurvePanel(grid=MaturityGrid(tuple(maturities)), values=values,
                          kind=kind, transform=transform, dt=float(dt))
    except CurveError as exc:
        raise DataError(str(exc)) from exc


def _parse_csv(path: str):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if len(lines) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = lines[0].split(",")
    try:
        maturities = [float(tok) for tok in header[1:]]
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric maturity in header") from exc
    n = len(maturities)
    labels = []
    rows = []
    for i, line in enumerate(lines[1:], start=1):
        toks = line.split(",")
        if len(toks) != n + 1:
            raise DataError(f"{path}: row {i} has {len(toks) - 1} cells, expected {n}")
        labels.append(toks[0])
        try:
            rows.append([float(tok) for tok in toks[1:]])
        except ValueError as exc:
            raise DataError(f"{path}: non-numeric or missing cell in row {i}") from exc
    return maturities, np.asarray(rows), labels


@dataclass(frozen=True)
class DatasetManifest:
    """Declared layout and units of an external curve panel."""

    path: str
    kind: str  # yield | forward | price
    maturity_unit: str = "years"  # months | years
    rate_unit: str = "decimal"  # percent | decimal
    frequency: str | float = "monthly"
    dates_in_rows: bool = True

    def __post_init__(self):
        if self.kind not in ("yield", "forward", "price"):
            raise DataError(f"unknown panel kind {self.kind!r}")
        if self.maturity_unit not in ("months", "years"):
            raise DataError("maturity_unit must be months or years")
        if self.rate_unit not in ("percent", "decimal"):
            raise DataError("rate_unit must be percent or decimal")

    @property
    def dt(self) -> float:
        if isinstance(self.frequency, (int, float)):
            if self.frequency <= 0:
                raise DataError("frequency dt must be positive")
            return float(self.frequency)
        try:
            return FREQUENCY_DT[self.frequency]
        except KeyError as exc:
            raise DataError(f"unknown frequency {self.frequency!r}") from exc

    @classmethod
    def from_json(cls, path: str) -> "DatasetManifest":
        with open(path) as fh:
            blob = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        data_path = blob.get("path")
        if data_path is None:
            raise DataError(f"{path}: manifest missing 'path'")
        if not os.path.isabs(data_path):
            data_path = os.path.join(base, data_path)
        known = {"path", "kind", "maturity_unit", "rate_unit", "frequency", "dates_in_rows"}
        extra = set(blob) - known
        if extra:
            raise DataError(f"{path}: unknown manifest fields {sorted(extra)}")
        blob["path"] = data_path
        return cls(**blob)


def ingest_panel(manifest: DatasetManifest) -> CurvePanel:
    """Load and normalize an external panel to years and decimal rates."""
    if not os.path.exists(manifest.path):
        raise DataError(f"dataset file not found: {manifest.path}")
    maturities, values, _ = _parse_csv(manifest.path)
    if not manifest.dates_in_rows:
        values = values.T
    if manifest.maturity_unit == "months":
        maturities = [m / 12.0 for m in maturities]
    if manifest.rate_unit == "percent":
        values = values / 100.0
    if any(b <= a for a, b in zip(maturities, maturities[1:])):
        raise DataError(f"{manifest.path}: maturities not strictly increasing "
                        "after unit conversion")
    try:
        return CurvePanel(grid=MaturityGrid(tuple(maturities)), values=values,
                          kind=manifest.kind, transform="level", dt=manifest.dt)
    except CurveError as exc:
        raise DataError(str(exc)) from exc


def empirical_factor_analysis(panel: CurvePanel, estimators=None,
                              threshold: float = 0.99,
                              mueller_p: int = 4) -> ExperimentReport:
    """Single-shot factor analysis of an observed panel.

    Builds the counterpart curve (forward from yields or yields from
    forwards), first-differences both, and runs the requested estimators
    plus PCA on all four series.
    """
    if panel.transform != "level":
        raise DataError("empirical analysis expects a level panel")
    if panel.kind == "yield":
        z_panel, x_panel = panel, yield_to_forward(panel)
    elif panel.kind == "forward":
        x_panel, z_panel = panel, forward_to_yield(panel)
    else:
        raise DataError("empirical analysis expects a yield or forward panel")
    estimators = tuple(estimators or ("static", "andrews_qs", "vk_bartlett", "mueller_ua"))
    config = ExperimentConfig(
        kind="factor", dgp="cir3", reps=1, n_obs=max(panel.n_obs, 16),
        dt=panel.dt, estimators=estimators, threshold=threshold,
        grid_months=tuple(x * 12.0 for x in panel.grid.points),
        rate_units="decimal", mueller_p=mueller_p,
    )
    report = ExperimentReport(config=config, kind="factor")
    panels = {"X": x_panel, "Z": z_panel,
              "dX": first_difference(x_panel), "dZ": first_difference(z_panel)}
    for sname, pan in panels.items():
        for ename in estimators:
            cov = lrcov.estimate(pan, ename, p=mueller_p)
            decomp = pca.eigen_decompose(cov)
            trace = float(np.clip(decomp.eigenvalues, 0.0, None).sum())
            if trace <= 0.0:
                cell = FactorCell(series=sname, estimator=ename,
                                  mean_cum_r2=np.zeros(len(pan.grid)),
                                  counts=np.array([], dtype=int), degenerate_reps=1)
            else:
                cum = pca.cumulative_r2(decomp)
                cell = FactorCell(series=sname, estimator=ename, mean_cum_r2=cum,
                                  counts=np.array([pca.count_factors(cum, threshold)]),
                                  degenerate_reps=0)
            report.factor_cells[(sname, ename)] = cell
    return report


def write_covariance_csv(estimate: lrcov.CovarianceEstimate, path: str) -> None:
    """Matrix CSV with a comment-style metadata header."""
    with open(path, "w") as fh:
        fh.write(f"# estimator: {estimate.estimator}\n")
        fh.write(f"# n_obs: {estimate.n_obs}\n")
        fh.write(f"# dt: {estimate.dt!r}\n")
        if estimate.bandwidth is not None:
            fh.write(f"# bandwidth: {estimate.bandwidth!r}\n")
        if estimate.p is not None:
            fh.write(f"# p: {estimate.p}\n")
        for row in estimate.matrix:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_covariance_csv(path: str) -> lrcov.CovarianceEstimate:
    meta = {"estimator": "static", "n_obs": 2, "dt": 1.0}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            rows.append([float(tok) for tok in line.split(",")])
    mat = np.asarray(rows)
    return lrcov.CovarianceEstimate(
        matrix=mat, estimator=str(meta["estimator"]), n_obs=int(meta["n_obs"]),
        dt=float(meta["dt"]),
        bandwidth=float(meta["bandwidth"]) if "bandwidth" in meta else None,
        p=int(meta["p"]) if "p" in meta else None,
    )


def write_decomposition_csv(decomp: pca.PcaDecomposition, path: str) -> None:
    """Eigenvalues row, loading matrix, cumulative R^2 row."""
    with open(path, "w") as fh:
        fh.write("eigenvalues," + ",".join(repr(float(v)) for v in decomp.eigenvalues) + "\n")
        for i, row in enumerate(decomp.loadings):
            fh.write(f"loading_{i}," + ",".join(repr(float(v)) for v in row) + "\n")
        fh.write("cum_r2," + ",".join(repr(float(v)) for v in decomp.cum_r2) + "\n")
