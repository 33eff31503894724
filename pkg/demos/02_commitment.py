"""Turning a pair of far-apart states into a canonical quantum bit commitment.

Run with ``python3 demos/02_commitment.py``.
"""

import numpy as np

from efilab.bundled import single_qubit_generator
from efilab.commitment import (
    binding_parameter,
    commit,
    from_efi,
    hiding_advantage,
    optimal_binding_attack,
    honest_binding_norm,
    sampled_binding_attacks,
    verify_opening,
)
from efilab.efi import EfiPair, farness

zero, one, plus = (single_qubit_generator(*g) for g in ((), ("X",), ("H",)))

for label, pair in [("|0> vs |1>", EfiPair(zero, one)),
                    ("|0> vs |+>", EfiPair(zero, plus)),
                    ("|0> vs |0>", EfiPair(zero, zero))]:
    s = from_efi(pair)
    hide, bind = hiding_advantage(s), binding_parameter(s)
    print(f"{label}: farness {farness(pair):.4f}  hiding adv {hide:.4f}  binding {bind:.4f}"
          f"  hide^2 + bind^2 = {hide**2 + bind**2:.4f}")

# Honest openings always verify.
s = from_efi(EfiPair(zero, plus))
print("\nverify(commit(b)) =", [round(verify_opening(s, b, commit(s, b)), 12) for b in (0, 1)])

# The Uhlmann unitary on the opening register attains the binding parameter.
u = optimal_binding_attack(s)
print(f"Uhlmann attack     = {honest_binding_norm(s, u):.6f}")
samples = sampled_binding_attacks(s, np.random.default_rng(1), n=200)
print(f"best of 200 random = {samples.max():.6f}")
