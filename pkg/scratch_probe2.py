"""Scratch: search CIR/HJM experiment parameters satisfying the factor-count targets."""
import numpy as np
from ratespca.curves import MaturityGrid, first_difference, forward_to_yield, yield_to_forward
from ratespca.models import (Cir3Params, simulate_cir3, simulate_gaussian_hjm,
                             HjmVolSpec, CurveShape)
from ratespca.noise import mme_yield, mme_forward
from ratespca.lrcov import static_cov, vk_lrcm, mueller_ua, andrews_lrcm
from ratespca.pca import eigen_decompose, cumulative_r2, count_factors

grid = MaturityGrid.standard()
EST = [("static", static_cov), ("andrews", andrews_lrcm), ("vk", vk_lrcm), ("mueller", mueller_ua)]


def all_counts(panels: dict, threshold=0.99):
    out = {}
    for sname, p in panels.items():
        for ename, fn in EST:
            d = eigen_decompose(fn(p))
            out[(sname, ename)] = count_factors(cumulative_r2(d), threshold)
    return out


def run_cir(params, dt, var, reps, T=500, seed0=0):
    """Return dict of count arrays for clean+noisy CIR pipeline (percent units)."""
    counters = {}
    for rep in range(reps):
        paths = simulate_cir3(params, T, dt, grid, np.random.default_rng(seed0 + rep))
        y = paths.yields.scaled(100.0)
        if var > 0:
            z, x = mme_yield(y, var, np.random.default_rng(777_000 + rep))
        else:
            z, x = y, yield_to_forward(y)
        panels = {"X": x, "Z": z, "dX": first_difference(x), "dZ": first_difference(z)}
        for key, cnt in all_counts(panels).items():
            counters.setdefault(key, []).append(cnt)
    return {k: np.array(v) for k, v in counters.items()}


def summarize(counters, label, keys=None):
    print(f"=== {label}")
    for k in (keys or sorted(counters)):
        v = counters[k]
        print(f"  {k[0]:3s}/{k[1]:8s} mean={v.mean():5.2f} share3={np.mean(v == 3):.2f}")


def cir_candidate(kappa, theta, feller_frac):
    sigma = tuple(np.sqrt(feller_frac * 2 * k * t) for k, t in zip(kappa, theta))
    return Cir3Params(kappa=kappa, theta=theta, sigma=sigma)


# --- candidate search: separated kappas, balanced level+diff contributions
cands = {
    "A  k(.2,.9,3) th(.03,.04,.06) f.9 m": (cir_candidate((0.2, 0.9, 3.0), (0.03, 0.04, 0.06), 0.9), 1 / 12),
    "B  k(.2,.9,3) th(.03,.04,.06) f.9 w": (cir_candidate((0.2, 0.9, 3.0), (0.03, 0.04, 0.06), 0.9), 1 / 52),
    "C  k(.15,.8,2.5) th(.03,.045,.07) f.85 m": (cir_candidate((0.15, 0.8, 2.5), (0.03, 0.045, 0.07), 0.85), 1 / 12),
}
for label, (params, dt) in cands.items():
    clean = run_cir(params, dt, 0.0, reps=16)
    keys = [("X", "static"), ("Z", "static"), ("dX", "static"), ("dX", "vk"), ("dX", "mueller"),
            ("Z", "vk"), ("Z", "mueller"), ("dZ", "mueller"), ("X", "mueller"), ("X", "vk")]
    summarize(clean, label + " CLEAN", keys)
    noisy = run_cir(params, dt, 0.0035, reps=16)
    keys = [("Z", "static"), ("dX", "static"), ("dX", "vk"), ("dX", "mueller")]
    summarize(noisy, label + " NOISY", keys)
