"""Which two-party functions can be computed privately without assumptions?

Run with ``python3 demos/04_dichotomy.py``.
"""

import itertools

from efilab.ot import ot_correctness
from efilab.twopc import FunctionTable, classify, insecure_protocol, ot_from_f

counts = {"MinorFree": 0, "HasMinor": 0}
for cells in itertools.product("01", repeat=4):
    f = FunctionTable((cells[:2], cells[2:]))
    v = classify(f)
    counts[v.kind] += 1
    print(f"{''.join(cells[:2])}/{''.join(cells[2:])}  {v}")
print(counts)

# AND has an insecure minor, so two runs of any AND protocol give OT.
and_ = FunctionTable.from_function(lambda x, y: x & y, 2, 2)
witness = classify(and_).witness
ot = ot_from_f(and_, witness, insecure_protocol(and_))
print(f"\nOT from AND on minor {witness}: correctness {ot_correctness(ot):.6f}")
