"""Oblivious transfer protocols and the sender/receiver attack tradeoff.

Every semi-honest OT protocol satisfies 2 P_B + P_A >= 2, where P_A is the
best guess of the receiver at the unreceived bit and P_B the best guess
of the sender at the choice bit. Run with ``python3 demos/03_oblivious_transfer.py``.
"""

from efilab.bundled import single_qubit_generator
from efilab.commitment import from_efi
from efilab.efi import EfiPair, farness
from efilab.ot import broken_ck88, build_ot_from_commitment, cgs_check, naive_ck88, ot_correctness, ot_to_efi

zero, one = single_qubit_generator(), single_qubit_generator("X")
zoo = {
    "CK88, no commitment": naive_ck88(),
    "CK88, wrong basis": broken_ck88(),
    "committed, binding": build_ot_from_commitment(from_efi(EfiPair(zero, one))),
    "committed, hiding": build_ot_from_commitment(from_efi(EfiPair(zero, zero))),
}

print(f"{'protocol':<22} {'correct':>8} {'P_A':>8} {'P_B':>8} {'2P_B+P_A':>9} {'EFI far':>8}")
for name, p in zoo.items():
    r = cgs_check(p)
    print(f"{name:<22} {ot_correctness(p):>8.4f} {r.p_a_star:>8.4f} {r.p_b_star:>8.4f}"
          f" {r.cgs_lhs:>9.4f} {farness(ot_to_efi(p)):>8.4f}")

# The binding instantiation leaves the sender a coherent record, so it
# guesses the choice bit with (2 + sqrt 3) / 4 rather than 3/4.
