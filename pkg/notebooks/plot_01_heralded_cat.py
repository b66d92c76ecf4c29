"""
Heralding a cat state from squeezed vacuum
==========================================

A squeezed vacuum meets an ancilla on a beam splitter and the reflected arm
is counted. Each count ``n`` leaves a different state in the transmitted arm;
for large ``n`` it resembles an even or odd cat.
"""

# %%
# One operating point, all outcomes
# ---------------------------------
import numpy as np

from heraldcat import Ancilla, CatTarget, SchemeConfig, condition, herald_fidelity
from heraldcat.conditioning import branch_probabilities, output_parity
from heraldcat.oracle import oracle_condition

cfg = SchemeConfig(s=0.9, t=0.8, ancilla=Ancilla.VACUUM)
probs = branch_probabilities(cfg.ancilla, range(40), cfg.s, cfg.t)
print("sum of the first 40 click probabilities:", probs.sum())
for n in range(0, 9, 2):
    res = condition(cfg, n)
    best = max(
        (herald_fidelity(res, CatTarget(b, output_parity(cfg.ancilla, n))).fidelity, b)
        for b in np.linspace(0.2, 3.0, 57)
    )
    print(f"n={n}: P={res.probability:.3e}  best cat fidelity {best[0]:.4f} at beta={best[1]:.2f}")

# %%
# The closed form against the brute-force beam splitter
# -----------------------------------------------------
# The oracle builds the two-mode state with a matrix exponential per
# photon-number block and projects mode 2 onto ``|n>``.
for anc in Ancilla:
    cfg = SchemeConfig(0.7, 0.85, anc)
    for n in (1, 4, 7):
        a = condition(cfg, n, 120)
        b = oracle_condition(cfg, n, 120)
        err = np.max(np.abs(a.state.amplitudes - b.state.amplitudes))
        print(f"{anc.value:>13} n={n}: |dP|={abs(a.probability - b.probability):.1e}  max|d psi|={err:.1e}")

# %%
# The single-photon ancilla flips the parity
# ------------------------------------------
for n in range(4):
    print(n, output_parity(Ancilla.VACUUM, n).value, output_parity(Ancilla.SINGLE_PHOTON, n).value)
