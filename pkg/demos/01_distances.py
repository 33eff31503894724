"""Trace distance, fidelity and the Helstrom measurement on small states.

Run with ``python3 demos/01_distances.py``.
"""

import math

import numpy as np

from efilab.bundled import single_qubit_generator
from efilab.circuits import run_generator
from efilab.efi import EfiPair, amplification_check
from efilab.qstate import RegisterLayout, fidelity, helstrom, random_density_matrix, trace_distance

zero = run_generator(single_qubit_generator())
plus = run_generator(single_qubit_generator("H"))

# |0> and |+> overlap with probability 1/2, so TD = sqrt(1 - 1/2).
td, f = trace_distance(zero, plus), fidelity(zero, plus)
print(f"TD(|0>, |+>)       = {td:.12f}  (1/sqrt 2 = {1 / math.sqrt(2):.12f})")
print(f"F(|0>, |+>)        = {f:.12f}")
# fidelity here is the squared overlap, so pure states saturate TD^2 + F = 1
print(f"TD^2 + F           = {td**2 + f:.12f}")

m, p = helstrom(zero, plus)
print(f"Helstrom success   = {p:.12f}")
print(f"  measured on |0>  = {m.probability(zero, 'rho'):.6f}")
print(f"  measured on |+>  = {m.probability(plus, 'sigma'):.6f}")

# Repetition drives the states apart. The majority-vote bound is loose here.
print("\ncopies  actual TD  majority bound")
for row in amplification_check(EfiPair(single_qubit_generator(), single_qubit_generator("H")), 5):
    print(f"{row.n:>6}  {row.actual:.6f}   {row.bound:.6f}")

# For tiny distances the bound overshoots: here TD = 0.05.
c, s = math.sqrt(1 - 0.05**2), 0.05
print(f"\nfive copies at TD=0.05: actual {math.sqrt(1 - c**10):.4f}, bound {1 - math.exp(-5 * s / 2):.4f}")

# Random mixed states for good measure.
rng = np.random.default_rng(0)
layout = RegisterLayout((("q", 2),))
rho, sigma = random_density_matrix(layout, rng), random_density_matrix(layout, rng)
print(f"random 2-qubit pair: TD {trace_distance(rho, sigma):.6f}, F {fidelity(rho, sigma):.6f}")
