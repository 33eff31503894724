"""Per-round verifier snapshots of a purified interactive proof.

Run with ``python3 demos/05_zk_states.py``.
"""

from efilab.zkstates import (
    extract_instance_states,
    instance_farness,
    silent_verifier_toy,
    stored_response_toy,
    two_round_toy,
)

for name, rp in [("stored response", stored_response_toy()),
                 ("silent verifier", silent_verifier_toy()),
                 ("two rounds", two_round_toy())]:
    pair = extract_instance_states(rp)
    exact = instance_farness(pair)
    bound = instance_farness(pair, mode="lower_bound")
    print(f"{name:<16} k={rp.k}  TD(gamma0, gamma1) = {exact.value:.6f} ({exact.mode}),"
          f" per-round max {bound.value:.6f}")
