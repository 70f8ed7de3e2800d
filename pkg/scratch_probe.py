"""Scratch: empirical feasibility probe for the factor-count experiments."""
import numpy as np
from ratespca.curves import MaturityGrid, first_difference, yield_to_forward
from ratespca.models import Cir3Params, simulate_cir3, default_hjm_spec, simulate_gaussian_hjm, HjmVolSpec, CurveShape
from ratespca.noise import mme_yield, mme_forward
from ratespca.lrcov import static_cov, vk_lrcm, mueller_ua, andrews_lrcm
from ratespca.pca import eigen_decompose, cumulative_r2, count_factors

grid = MaturityGrid.standard()

def counts_for(panel, label, reps_done=[0]):
    out = {}
    for name, fn in [("static", static_cov), ("andrews", andrews_lrcm),
                     ("vk", vk_lrcm), ("mueller", mueller_ua)]:
        cov = fn(panel)
        d = eigen_decompose(cov)
        c = cumulative_r2(d)
        out[name] = count_factors(c, 0.99)
    return out

def probe_cir(params, dt, var, units, reps=20, T=500, label=""):
    scale = 100.0 if units == "percent" else 1.0
    res = {k: [] for k in ["static_Z", "static_dX", "vk_dX", "mueller_dX", "andrews_dX"]}
    for rep in range(reps):
        rng = np.random.default_rng(1234 + rep)
        paths = simulate_cir3(params, T, dt, grid, rng)
        y = paths.yields.scaled(scale)
        z, x = mme_yield(y, var, np.random.default_rng(99_000 + rep))
        dx = first_difference(x)
        dz = first_difference(z)
        res["static_Z"].append(counts_for(z, "z")["static"])
        cx = counts_for(dx, "dx")
        res["static_dX"].append(cx["static"])
        res["vk_dX"].append(cx["vk"])
        res["mueller_dX"].append(cx["mueller"])
        res["andrews_dX"].append(cx["andrews"])
    print(f"--- CIR {label} dt=1/{round(1/dt)} var={var} units={units}")
    for k, v in res.items():
        v = np.array(v)
        print(f"  {k:12s} mean={v.mean():5.2f} share3={np.mean(v==3):.2f}  counts={np.bincount(v, minlength=9)[:9]}")

# clean CIR (spec defaults), daily
spec_cir = Cir3Params(kappa=(0.8, 0.2, 1.2), theta=(0.02, 0.03, 0.01), sigma=(0.10, 0.05, 0.12))
probe_cir(spec_cir, 1/252, 0.0, "percent", reps=8, label="spec-default CLEAN")

# spec-default CIR with percent-units noise .0035
probe_cir(spec_cir, 1/252, 0.0035, "percent", reps=12, label="spec-default")
probe_cir(spec_cir, 1/52, 0.0035, "percent", reps=12, label="spec-default weekly")

# hotter CIR aimed at the feasibility window
hot = Cir3Params(kappa=(0.6, 0.15, 1.1), theta=(0.05, 0.06, 0.04),
                 sigma=(np.sqrt(2*0.6*0.05*0.9), np.sqrt(2*0.15*0.06*0.9), np.sqrt(2*1.1*0.04*0.9)))
probe_cir(hot, 1/52, 0.0035, "percent", reps=12, label="hot 0.9-Feller weekly")
probe_cir(hot, 1/52, 0.0, "percent", reps=8, label="hot CLEAN weekly")
