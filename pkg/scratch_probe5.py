"""Scratch: lock-in probe for HJM shape coefficients and CIR defaults."""
import numpy as np
from ratespca.curves import MaturityGrid, first_difference, forward_to_yield, yield_to_forward
from ratespca.models import (Cir3Params, simulate_cir3, simulate_gaussian_hjm,
                             HjmVolSpec, CurveShape)
from ratespca.noise import mme_yield
from ratespca.lrcov import static_cov, vk_lrcm, mueller_ua, andrews_lrcm
from ratespca.pca import eigen_decompose, cumulative_r2, count_factors

grid = MaturityGrid.standard()
EST = [("static", static_cov), ("andrews", andrews_lrcm), ("vk", vk_lrcm), ("mueller", mueller_ua)]


def cells(panels):
    out = {}
    for sname, pan in panels.items():
        for ename, fn in EST:
            out[(sname, ename)] = count_factors(cumulative_r2(eigen_decompose(fn(pan))), 0.99)
    return out


def mc(build_panels, reps):
    counters = {}
    for rep in range(reps):
        for key, cnt in cells(build_panels(rep)).items():
            counters.setdefault(key, []).append(cnt)
    return {k: np.array(v) for k, v in counters.items()}


def report(counters, label, series=("X", "Z", "dX", "dZ")):
    print(f"=== {label}")
    for s in series:
        parts = []
        for ename, _ in EST:
            v = counters[(s, ename)]
            parts.append(f"{ename}: m={v.mean():4.2f} s3={np.mean(v == 3):4.2f}")
        print(f"  {s:3s} " + " | ".join(parts))


def hjm_panels(spec_obj, dt, rep):
    fwd = simulate_gaussian_hjm(spec_obj, 500, dt, grid, np.random.default_rng(40_000 + rep))
    x = fwd.scaled(100.0)
    z = forward_to_yield(x)
    return {"X": x, "Z": z, "dX": first_difference(x), "dZ": first_difference(z)}


for c1, c2, c3, a in [(0.006, 0.015, 0.040, 1.0), (0.005, 0.013, 0.045, 1.2),
                      (0.007, 0.018, 0.050, 1.2)]:
    spec_obj = HjmVolSpec(
        factors=(CurveShape.constant(c1), CurveShape.exponential(c2, a), CurveShape.hump(c3, a)),
        initial_curve=(CurveShape.constant(0.06), CurveShape.exponential(-0.02, a)),
    )
    report(mc(lambda rep: hjm_panels(spec_obj, 1 / 252, rep), reps=32),
           f"HJM c=({c1},{c2},{c3}) a={a}")


def cir_panels(params, dt, var, rep):
    paths = simulate_cir3(params, 500, dt, grid, np.random.default_rng(rep))
    y = paths.yields.scaled(100.0)
    if var > 0:
        z, xx = mme_yield(y, var, np.random.default_rng(555_000 + rep))
    else:
        z, xx = y, yield_to_forward(y)
    return {"X": xx, "Z": z, "dX": first_difference(xx), "dZ": first_difference(z)}


candidates = {
    "D k(.15,1,5) th(.033,.033,.03)": Cir3Params(
        kappa=(0.15, 1.0, 5.0), theta=(0.033, 0.033, 0.030),
        sigma=(0.094, 0.244, 0.520)),
    "E k(.1,.9,6) th(.04,.035,.03)": Cir3Params(
        kappa=(0.10, 0.9, 6.0), theta=(0.040, 0.035, 0.030),
        sigma=(np.sqrt(0.9 * 2 * 0.1 * 0.04), np.sqrt(0.9 * 2 * 0.9 * 0.035),
               np.sqrt(0.9 * 2 * 6.0 * 0.030))),
}
for label, params in candidates.items():
    report(mc(lambda rep: cir_panels(params, 1 / 12, 0.0, rep), reps=32), label + " CLEAN m")
    noisy = mc(lambda rep: cir_panels(params, 1 / 12, 0.0035, rep), reps=24)
    report(noisy, label + " NOISY m", series=("Z", "dX"))
