"""Long-run covariance PCA toolkit for noisy forward-rate curves.

Submodules: curves (grids, panels, forward/yield transforms), models
(Gaussian HJM, 3-factor CIR, G2++ with analytic bond-option prices), noise
(microstructure and spline-interpolation contamination), lrcov (static and
long-run covariance estimators), pca (spectral analysis, factor counts,
loading extraction, implied option variance), experiments (Monte Carlo
harness), dataio (panel CSV and dataset ingestion), cli.
"""

__version__ = "0.1.0"
