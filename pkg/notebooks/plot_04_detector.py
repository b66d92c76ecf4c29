"""
Inefficient photon counting
===========================

An efficiency-``eta`` counter reports ``n`` when ``n + k`` photons arrived and
``k`` were lost, so the heralded state is a mixture. High transmittance keeps
the damage small at the cost of a tiny success probability.
"""

# %%
from heraldcat import Ancilla, CatTarget, DetectorModel, SchemeConfig
from heraldcat import imperfect_fidelity_closed, imperfect_fidelity_direct, lower_bound, series_coefficients
from heraldcat.optimizer import best_squeezing

# %%
# Degradation against transmittance
# ---------------------------------
target = CatTarget(2.0)
for t in (0.7, 0.9, 0.99):
    opt = best_squeezing(Ancilla.VACUUM, 10, target, t)
    cfg = SchemeConfig(opt.s, t, Ancilla.VACUUM)
    row = []
    for eta in (0.9, 0.95, 0.98):
        f, p = imperfect_fidelity_direct(cfg, 10, DetectorModel(eta), target)
        row.append(f"eta={eta}: F={f:.4f}")
    print(f"t={t}: F(1)={opt.fidelity:.4f} P={opt.probability:.1e} | " + "  ".join(row))

# %%
# Two routes to the same number, and the first-order picture
# ----------------------------------------------------------
cfg = SchemeConfig(0.8, 0.85, Ancilla.VACUUM)
det = DetectorModel(0.95)
closed = imperfect_fidelity_closed(cfg, 5, det, target)
direct, _ = imperfect_fidelity_direct(cfg, 10, det, target)
coef = series_coefficients(cfg, 5, target)
f1 = imperfect_fidelity_closed(cfg, 5, DetectorModel(1.0), target)
print(f"closed {closed:.12f}  direct {direct:.12f}")
print(f"first order {f1 * (1 - 0.05 * coef.g1):.6f}  second order {f1 * (1 - 0.05 * coef.g1 + 0.05**2 * coef.g2_taylor):.6f}")
print(f"lower bound {lower_bound(cfg, 10, det, target):.6f}")
