"""Finite two-party functionalities: insecure minors, one-message protocols and OT from f.

Bob receives the output. Inputs ``x < s1`` and ``y < s2`` are row and column
indices of the table and live in registers as big-endian integers; output
labels are encoded by their index in :attr:`FunctionTable.alphabet`.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .circuits import Gate, GateCircuit
from .ot import OtProtocol
from .protocol import LocalStep, ProtocolError, ProtocolSpec, SendStep, run_protocol
from .qstate import RegisterLayout

__all__ = [
    "DichotomyVerdict",
    "FProtocol",
    "FunctionTable",
    "TrivialProtocol",
    "classify",
    "find_insecure_minor",
    "insecure_protocol",
    "ot_from_f",
    "parse_table",
    "trivial_protocol",
]


@dataclass(frozen=True)
class FunctionTable:
    """``f: S1 x S2 -> S3`` as a grid of labels; rows are Alice's inputs."""

    cells: tuple[tuple[str, ...], ...]
    alice_labels: tuple[str, ...] = ()
    bob_labels: tuple[str, ...] = ()

    def __post_init__(self):
        cells = tuple(tuple(str(c) for c in row) for row in self.cells)
        if not cells or not cells[0]:
            raise ValueError("function table is empty")
        if any(len(row) != len(cells[0]) for row in cells):
            raise ValueError("function table rows have different lengths")
        alice = tuple(self.alice_labels) or tuple(str(i) for i in range(len(cells)))
        bob = tuple(self.bob_labels) or tuple(str(j) for j in range(len(cells[0])))
        if len(alice) != len(cells) or len(bob) != len(cells[0]):
            raise ValueError("label count does not match the grid")
        for labels in (alice, bob):
            if len(set(labels)) != len(labels):
                raise ValueError(f"duplicate input labels {labels}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "alice_labels", alice)
        object.__setattr__(self, "bob_labels", bob)

    @classmethod
    def from_function(cls, fn, s1: int, s2: int) -> "FunctionTable":
        return cls(tuple(tuple(str(fn(x, y)) for y in range(s2)) for x in range(s1)))

    @property
    def s1(self) -> int:
        return len(self.cells)

    @property
    def s2(self) -> int:
        return len(self.cells[0])

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted({c for row in self.cells for c in row}))

    def __call__(self, x: int, y: int) -> str:
        return self.cells[x][y]

    def code(self, x: int, y: int) -> int:
        return self.alphabet.index(self.cells[x][y])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["f", *self.bob_labels])
        for label, row in zip(self.alice_labels, self.cells):
            w.writerow([label, *row])
        return buf.getvalue()


def parse_table(text: str) -> FunctionTable:
    """Read a CSV table: header row of Bob's labels, first column Alice's labels."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) < 2:
        raise ValueError("function table needs a header row and at least one data row")
    header = [c.strip() for c in rows[0]]
    bob = header[1:]
    alice, cells = [], []
    for i, row in enumerate(rows[1:], start=2):
        row = [c.strip() for c in row]
        if len(row) != len(header):
            raise ValueError(f"line {i}: expected {len(header)} fields, got {len(row)}")
        alice.append(row[0])
        cells.append(tuple(row[1:]))
    for label in itertools.chain(bob, alice, *cells):
        if not label.isalnum():
            raise ValueError(f"label {label!r} is not alphanumeric")
    return FunctionTable(tuple(cells), tuple(alice), tuple(bob))


def find_insecure_minor(f: FunctionTable) -> tuple[int, int, int, int] | None:
    """Lexicographically smallest ``(x0, x1, y0, y1)`` with

    ``f(x0, y0) = f(x1, y0)`` and ``f(x0, y1) != f(x1, y1)``, or ``None``.
    """
    for x0, x1 in itertools.product(range(f.s1), repeat=2):
        same = [f(x0, y) == f(x1, y) for y in range(f.s2)]
        if any(same) and not all(same):
            return x0, x1, same.index(True), same.index(False)
    return None


def _bits(n_values: int) -> int:
    return max(1, math.ceil(math.log2(n_values))) if n_values > 1 else 1


def _match_flip(pattern: Mapping[str, int], target: str) -> list[Gate]:
    """Flip ``target`` iff every qubit in ``pattern`` holds its bit."""
    flips = [Gate("X", (a,)) for a, bit in pattern.items() if bit == 0]
    return flips + [Gate("X", (target,), controls=tuple(pattern))] + flips


def _pattern(reg: str, width: int, value: int) -> dict[str, int]:
    return {f"{reg}.{j}": (value >> (width - 1 - j)) & 1 for j in range(width)}


def _write_if(pattern: Mapping[str, int], reg: str, width: int, value: int) -> list[Gate]:
    """XOR ``value`` into ``reg`` when ``pattern`` matches."""
    gates: list[Gate] = []
    for j in range(width):
        if (value >> (width - 1 - j)) & 1:
            gates += _match_flip(pattern, f"{reg}.{j}")
    return gates


@dataclass(frozen=True, eq=False)
class FProtocol:
    """A protocol computing ``table`` with the output delivered to Bob."""

    spec: ProtocolSpec
    table: FunctionTable
    alice_slot: str
    bob_slot: str
    out: str

    @property
    def alice(self) -> str:
        return self.spec.slot_owner(self.alice_slot)

    @property
    def bob(self) -> str:
        return self.spec.slot_owner(self.bob_slot)

    def inputs(self, x: int, y: int) -> dict:
        return {self.alice: {self.alice_slot: x}, self.bob: {self.bob_slot: y}}

    def correctness(self, pairs: Sequence[tuple[int, int]] | None = None) -> float:
        """Worst ``Pr[Bob's output = f(x, y)]`` over ``pairs`` (default: all inputs)."""
        pairs = pairs if pairs is not None else list(itertools.product(range(self.table.s1), range(self.table.s2)))
        worst = 1.0
        for x, y in pairs:
            probs = run_protocol(self.spec, self.inputs(x, y)).state.probabilities([self.out])
            worst = min(worst, float(probs[self.table.code(x, y)]))
        return worst


def _lookup_spec(f: FunctionTable, message_of: Sequence[int] | None, n_messages: int) -> ProtocolSpec:
    """Alice sends ``M = message_of[x]`` (or ``X`` itself), Bob computes ``Z``."""
    nx, ny, nz = _bits(f.s1), _bits(f.s2), _bits(len(f.alphabet))
    regs = [("X", nx), ("Y", ny), ("Z", nz)]
    owns = {"X": "A", "Y": "B", "Z": "B"}
    steps = []
    if message_of is None:
        sent, nm, value_of = "X", nx, list(range(f.s1))
        steps.append(LocalStep("A", GateCircuit(RegisterLayout((("X", nx),)))))
    elif n_messages > 1:
        nm = _bits(n_messages)
        regs.append(("M", nm))
        owns["M"] = "A"
        sent, value_of = "M", list(message_of)
        gates = []
        for x, k in enumerate(message_of):
            gates += _write_if(_pattern("X", nx, x), "M", nm, k)
        steps.append(LocalStep("A", GateCircuit(RegisterLayout((("X", nx), ("M", nm))), tuple(gates))))
    else:
        sent, nm, value_of = None, 0, [0] * f.s1
        steps.append(LocalStep("A", GateCircuit(RegisterLayout((("X", nx),)))))
    if sent is not None:
        steps.append(SendStep(sent, "B"))
    layout = RegisterLayout(tuple(regs))
    gates = []
    reps: dict[int, int] = {}
    for x, k in enumerate(value_of):
        reps.setdefault(k, x)
    for k, x in sorted(reps.items()):
        for y in range(f.s2):
            pattern = _pattern("Y", ny, y)
            if sent is not None:
                pattern = {**_pattern(sent, nm, k), **pattern}
            gates += _write_if(pattern, "Z", nz, f.code(x, y))
    bob_regs = [r for r in (sent, "Y", "Z") if r is not None]
    steps.append(LocalStep("B", GateCircuit(layout.subset(bob_regs), tuple(gates))))
    return ProtocolSpec(("A", "B"), owns, layout, tuple(steps), {"A": ("X",), "B": ("Y",)},
                        {"B": ("Z",)}, {"B": ("Z",)})


def insecure_protocol(f: FunctionTable) -> FProtocol:
    """Alice sends her input in the clear and Bob evaluates the table."""
    return FProtocol(_lookup_spec(f, None, f.s1), f, "X", "Y", "Z")


@dataclass(frozen=True, eq=False)
class TrivialProtocol:
    """Row-class protocol: Alice sends the index of her row's equality class.

    ``certificate[y][k]`` is the output on class ``k`` at column ``y``; if each
    of these maps is injective Bob's message is a function of ``(y, output)``,
    so his view reveals nothing beyond the output.
    """

    table: FunctionTable
    classes: tuple[tuple[int, ...], ...]
    class_of: tuple[int, ...]
    certificate: tuple[tuple[str, ...], ...]
    passes: bool

    @property
    def message_bits(self) -> int:
        n = len(self.classes)
        return 0 if n == 1 else math.ceil(math.log2(n))

    def protocol(self) -> FProtocol:
        return FProtocol(_lookup_spec(self.table, self.class_of, len(self.classes)), self.table, "X", "Y", "Z")


def trivial_protocol(f: FunctionTable) -> TrivialProtocol:
    """One-message perfectly private protocol for a minor-free table."""
    witness = find_insecure_minor(f)
    if witness is not None:
        raise ValueError(f"table has an insecure minor {witness}; no one-message protocol")
    classes: list[list[int]] = []
    class_of = []
    for x in range(f.s1):
        for k, members in enumerate(classes):
            if f.cells[members[0]] == f.cells[x]:
                members.append(x)
                class_of.append(k)
                break
        else:
            classes.append([x])
            class_of.append(len(classes) - 1)
    for a, b in itertools.combinations(range(len(classes)), 2):
        ra, rb = f.cells[classes[a][0]], f.cells[classes[b][0]]
        if any(u == v for u, v in zip(ra, rb)):
            raise AssertionError(f"classes {a} and {b} agree somewhere on a minor-free table")
    certificate = tuple(tuple(f(members[0], y) for members in classes) for y in range(f.s2))
    passes = all(len(set(col)) == len(col) for col in certificate)
    return TrivialProtocol(f, tuple(map(tuple, classes)), tuple(class_of), certificate, passes)


def _check_witness(f: FunctionTable, w) -> tuple[int, int, int, int]:
    x0, x1, y0, y1 = (int(v) for v in w)
    if not (0 <= x0 < f.s1 and 0 <= x1 < f.s1 and 0 <= y0 < f.s2 and 0 <= y1 < f.s2):
        raise ValueError(f"witness {w} out of range")
    if not (f(x0, y0) == f(x1, y0) and f(x0, y1) != f(x1, y1)):
        raise ValueError(f"{w} is not an insecure minor")
    return x0, x1, y0, y1


def ot_from_f(f: FunctionTable, witness, fp: FProtocol, tol: float = 1e-9) -> OtProtocol:
    """OT from any protocol computing ``f``, given an insecure minor.

    Alice (the OT sender, bits ``a0``, ``a1``) and Bob (choice ``b``) run
    ``fp`` twice: on ``(x_{a0}, y_{1-b})`` and on ``(x_{a1}, y_b)``. Bob
    outputs 0 iff the output ``z_b`` of run ``b`` equals ``f(x0, y1)``.
    """
    x0, x1, y0, y1 = _check_witness(f, witness)
    if fp.table != f:
        raise ValueError("f_protocol computes a different table")
    pairs = [(x, y) for x in (x0, x1) for y in (y0, y1)]
    if fp.correctness(pairs) < 1 - tol:
        raise ValueError("f_protocol is not correct on the witness inputs")
    spec = fp.spec
    alice, bob = fp.alice, fp.bob
    if spec.final_ownership()[fp.out] != bob:
        raise ProtocolError("f_protocol output must end with Bob")
    nx, ny = spec.layout.size(fp.alice_slot), spec.layout.size(fp.bob_slot)
    nz = spec.layout.size(fp.out)
    runs = [spec.relabel({r: f"r{j}_{r}" for r in spec.layout.names}) for j in (1, 2)]
    xs = [f"r{j}_{fp.alice_slot}" for j in (1, 2)]
    ys = [f"r{j}_{fp.bob_slot}" for j in (1, 2)]
    zs = [f"r{j}_{fp.out}" for j in (1, 2)]

    base = RegisterLayout((("A0", 1), ("A1", 1), ("Bc", 1), ("OUT", 1)))
    layout = base
    owns = {"A0": alice, "A1": alice, "Bc": bob, "OUT": bob}
    for run in runs:
        layout = layout.concat(run.layout)
        owns.update(run.owns)

    prep_a = []
    for bit, reg in (("A0", xs[0]), ("A1", xs[1])):
        prep_a += _write_if({f"{bit}.0": 0}, reg, nx, x0) + _write_if({f"{bit}.0": 1}, reg, nx, x1)
    # run 1 gets y_{1-b}, run 2 gets y_b
    prep_b = (_write_if({"Bc.0": 0}, ys[0], ny, y1) + _write_if({"Bc.0": 1}, ys[0], ny, y0)
              + _write_if({"Bc.0": 0}, ys[1], ny, y0) + _write_if({"Bc.0": 1}, ys[1], ny, y1))
    reference = f.code(x0, y1)
    finish = []
    for j in (0, 1):
        finish += _match_flip({"Bc.0": j, **_pattern(zs[j], nz, reference)}, "OUT.0")
    finish.append(Gate("X", ("OUT.0",)))

    steps = [LocalStep(alice, GateCircuit(layout.subset(["A0", "A1", *xs]), tuple(prep_a))),
             LocalStep(bob, GateCircuit(layout.subset(["Bc", *ys]), tuple(prep_b)))]
    for run in runs:
        steps.extend(run.steps)
    steps.append(LocalStep(bob, GateCircuit(layout.subset(["Bc", "OUT", *zs]), tuple(finish))))
    composed = ProtocolSpec(spec.parties, {r: owns[r] for r in layout.names}, layout, tuple(steps),
                            {alice: ("A0", "A1"), bob: ("Bc",)}, {bob: ("OUT",)}, {bob: ("OUT",)})
    return OtProtocol(composed, "A0", "A1", "Bc", "OUT", "two runs of an f-protocol on an insecure minor")


@dataclass(frozen=True, eq=False)
class DichotomyVerdict:
    kind: str
    protocol: TrivialProtocol | None = None
    witness: tuple[int, int, int, int] | None = None
    note: str = field(default="")

    def __str__(self) -> str:
        if self.kind == "HasMinor":
            return "HasMinor ({},{},{},{})".format(*self.witness)
        return f"MinorFree ({len(self.protocol.classes)} classes)"


def classify(f: FunctionTable) -> DichotomyVerdict:
    """Minor-free tables get the one-message protocol; the rest a minor witness."""
    witness = find_insecure_minor(f)
    if witness is None:
        return DichotomyVerdict("MinorFree", protocol=trivial_protocol(f),
                                note="computable with perfect privacy in a single message")
    return DichotomyVerdict("HasMinor", witness=witness,
                            note="any semi-honest protocol for f yields semi-honest OT, hence EFI pairs")
