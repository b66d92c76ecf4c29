"""
Largest cat reachable at a fidelity floor
=========================================

For each herald count the best fidelity falls as the cat grows. The
threshold ``beta`` is where the maximized fidelity crosses the floor.
Small counts keep this quick; ``heraldcat figure fig2`` and ``fig4`` cover
the large-``n`` curves.
"""

# %%
from heraldcat import Ancilla, SearchPolicy, beta_threshold
from heraldcat.optimizer import max_fidelity_curve

policy = SearchPolicy(grid_s=30, grid_t=30, refine_evals=150)

for anc, ns in ((Ancilla.VACUUM, (4, 6, 8)), (Ancilla.SINGLE_PHOTON, (3, 5, 7))):
    for n in ns:
        res = beta_threshold(anc, n, floor=0.97, resolution=0.05, search=policy)
        print(f"{anc.value:>13} n={n}: beta_0.97 = {res.beta_threshold:.3f} "
              f"(F just below {res.fidelity_below:.4f}, just above {res.fidelity_above:.4f})")

# %%
# Maximizers can jump as beta grows
# ---------------------------------
for res, beta in zip(max_fidelity_curve(Ancilla.SINGLE_PHOTON, 5, [1.0, 1.5, 2.0, 2.5], policy), [1.0, 1.5, 2.0, 2.5]):
    print(f"beta={beta}: s={res.s:.3f} t={res.t:.3f} F={res.fidelity:.4f}")
