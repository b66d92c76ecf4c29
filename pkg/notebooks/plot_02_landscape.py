"""
Fidelity landscape over squeezing and transmittance
===================================================

For the vacuum ancilla the heralded state depends on ``(s, t)`` only through
``x = tanh(s) t^2``, so equal-fidelity curves run along a ridge. With a photon
ancilla the landscape has an isolated peak instead.
"""

# %%
import numpy as np

from heraldcat import Ancilla, CatTarget, SearchPolicy, fidelity_isolines
from heraldcat import maximize_fidelity, maximize_probability_with_floor
from heraldcat.conditioning import branch_fidelity_probability

policy = SearchPolicy(grid_s=40, grid_t=40)
target = CatTarget(1.5)

# %%
# The ridge
# ---------
x = np.tanh(0.8) * 0.7**2
for t in (0.7, 0.8, 0.9, 0.99):
    s = np.arctanh(x / t**2)
    f, p = branch_fidelity_probability(Ancilla.VACUUM, 6, target, s, t)
    print(f"t={t:.2f} s={s:.4f}: F={float(f):.12f}  P={float(p):.3e}")

# %%
# Two optimization regimes
# ------------------------
fid_opt = maximize_fidelity(Ancilla.VACUUM, 6, target, policy)
prob_opt = maximize_probability_with_floor(Ancilla.VACUUM, 6, target, 0.97, policy)
for res in (fid_opt, prob_opt):
    print(f"{res.regime.value:>12}: s={res.s:.3f} t={res.t:.3f} F={res.fidelity:.5f} P={res.probability:.3e}")

# %%
# Isolines
# --------
for anc, n, beta, level in ((Ancilla.VACUUM, 6, 1.5, 0.95), (Ancilla.SINGLE_PHOTON, 5, 1.8, 0.97)):
    iso = fidelity_isolines(anc, n, CatTarget(beta), level, policy)
    for line in iso.polylines:
        closed = np.allclose(line[0], line[-1])
        print(f"{anc.value:>13}: {len(line)} vertices, closed={closed}, "
              f"s in [{line[:, 0].min():.2f}, {line[:, 0].max():.2f}], t in [{line[:, 1].min():.3f}, {line[:, 1].max():.3f}]")
