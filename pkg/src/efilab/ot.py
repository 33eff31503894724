"""Oblivious transfer: protocols, semi-honest attacks and the extraction of EFI pairs.

Roles are read off the metadata: the sender owns the two bit slots ``x0`` and
``x1``, the receiver owns the choice slot ``b`` and measures the one-qubit
``out`` register. The sender's coins are its input slots; attacks put them in
superposition rather than sampling them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .circuits import Gate, GateCircuit, _require_keys, dumps, load_json
from .commitment import CommitmentScheme
from .efi import EfiPair
from .protocol import (
    LocalStep,
    ProtocolError,
    ProtocolSpec,
    SendStep,
    protocol_from_obj,
    protocol_to_obj,
    run_protocol,
)
from .qstate import DensityMatrix, PureState, RegisterLayout, trace_distance

__all__ = [
    "AttackReport",
    "OtProtocol",
    "broken_ck88",
    "build_ot_from_commitment",
    "cgs_check",
    "naive_ck88",
    "ot_correctness",
    "ot_to_efi",
    "parse_ot",
    "receiver_attack",
    "sender_attack",
    "serialize_ot",
]

CGS_TOL = 1e-6
INPUT_COMBOS = tuple(itertools.product((0, 1), repeat=3))


@dataclass(frozen=True, eq=False)
class OtProtocol:
    spec: ProtocolSpec
    x0: str
    x1: str
    b: str
    out: str
    provenance: str = ""

    def __post_init__(self):
        p = self.spec
        sender = p.slot_owner(self.x0)
        if p.slot_owner(self.x1) != sender:
            raise ProtocolError("x0 and x1 must be slots of the same party")
        if p.slot_owner(self.b) != p.other(sender):
            raise ProtocolError("the choice slot must belong to the other party")
        for slot in (self.x0, self.x1, self.b):
            if p.layout.size(slot) != 1:
                raise ProtocolError(f"slot {slot!r} must be a single qubit")
        if self.out not in p.layout or p.layout.size(self.out) != 1:
            raise ProtocolError(f"output register {self.out!r} must be a declared single qubit")
        if p.final_ownership()[self.out] != p.other(sender):
            raise ProtocolError(f"output register {self.out!r} must end with the receiver")

    @property
    def sender(self) -> str:
        return self.spec.slot_owner(self.x0)

    @property
    def receiver(self) -> str:
        return self.spec.slot_owner(self.b)

    def inputs(self, x0: int, x1: int, b: int) -> dict:
        return {self.sender: {self.x0: x0, self.x1: x1}, self.receiver: {self.b: b}}

    @cached_property
    def _finals(self) -> dict:
        return {(x0, x1, b): run_protocol(self.spec, self.inputs(x0, x1, b)).state
                for x0, x1, b in INPUT_COMBOS}

    def final_state(self, x0: int, x1: int, b: int) -> PureState:
        return self._finals[(x0, x1, b)]

    def view(self, party: str, x0: int, x1: int, b: int) -> DensityMatrix:
        return self.final_state(x0, x1, b).reduced(self.spec.registers_of(party))


def _ck88_spec(receiver_basis_flip: bool) -> ProtocolSpec:
    layout = RegisterLayout((("X0", 1), ("X1", 1), ("M0", 1), ("M1", 1), ("Bc", 1)))
    owns = {"X0": "B", "X1": "B", "M0": "B", "M1": "B", "Bc": "A"}
    prep = GateCircuit(layout.subset(["X0", "X1", "M0", "M1"]), (
        Gate("CNOT", ("X0.0", "M0.0")),
        Gate("CNOT", ("X1.0", "M1.0")),
        Gate("H", ("M1.0",)),
    ))
    basis = [Gate("H", ("M0.0",), controls=("Bc.0",)), Gate("H", ("M1.0",), controls=("Bc.0",))]
    if receiver_basis_flip:
        basis = [Gate("X", ("Bc.0",))] + basis + [Gate("X", ("Bc.0",))]
    read = GateCircuit(layout.subset(["M0", "M1", "Bc"]),
                       tuple(basis) + (Gate("SWAP", ("M0.0", "M1.0"), controls=("Bc.0",)),))
    steps = (LocalStep("B", prep), SendStep("M0", "A"), SendStep("M1", "A"), LocalStep("A", read))
    return ProtocolSpec(("A", "B"), owns, layout, steps, {"A": ("Bc",), "B": ("X0", "X1")},
                        {"A": ("M0",)}, {"A": ("M0",)})


def naive_ck88() -> OtProtocol:
    """One-message OT: the sender sends ``|x0> (x) H|x1>``, the receiver reads basis ``b``.

    Party ``B`` is the sender (slots ``X0``, ``X1``, kept after copying into
    the message qubits ``M0``, ``M1``) and ``A`` the receiver (slot ``Bc``,
    output ``M0``).
    """
    return OtProtocol(_ck88_spec(False), "X0", "X1", "Bc", "M0", "ck88")


def broken_ck88() -> OtProtocol:
    """CK88 with the receiver reading the wrong basis; correct with probability 1/2."""
    return OtProtocol(_ck88_spec(True), "X0", "X1", "Bc", "M0", "ck88-wrong-basis")


def _controlled_commit(s: CommitmentScheme, control: str, c_reg: str, r_reg: str) -> list[Gate]:
    mapping = {s.commit_register: c_reg, s.opening_register: r_reg}
    q0 = [g.relabel(mapping).controlled_by(control) for g in s.q0.gates]
    q1 = [g.relabel(mapping).controlled_by(control) for g in s.q1.gates]
    flip = [Gate("X", (control,))]
    return flip + q0 + flip + q1


def build_ot_from_commitment(s: CommitmentScheme) -> OtProtocol:
    """Committed-measurement OT.

    The sender sends ``|x0> (x) H|x1>`` in its slots ``X0``, ``X1``. The
    receiver applies its basis-``b`` measurement coherently, commits to each
    measured bit with ``s`` (``Q_m`` controlled on the bit), moves ``x_b`` into
    ``X0`` and sends both commitment registers back.
    """
    nc = s.layout.size(s.commit_register)
    nr = s.layout.size(s.opening_register)
    layout = RegisterLayout((("X0", 1), ("X1", 1), ("Bc", 1), ("C0", nc), ("R0", nr), ("C1", nc), ("R1", nr)))
    owns = {"X0": "B", "X1": "B", "Bc": "A", "C0": "A", "R0": "A", "C1": "A", "R1": "A"}
    prep = GateCircuit(layout.subset(["X0", "X1"]), (Gate("H", ("X1.0",)),))
    gates = [Gate("H", ("X0.0",), controls=("Bc.0",)), Gate("H", ("X1.0",), controls=("Bc.0",))]
    gates += _controlled_commit(s, "X0.0", "C0", "R0")
    gates += _controlled_commit(s, "X1.0", "C1", "R1")
    gates.append(Gate("SWAP", ("X0.0", "X1.0"), controls=("Bc.0",)))
    receive = GateCircuit(layout.subset(["X0", "X1", "Bc", "C0", "R0", "C1", "R1"]), tuple(gates))
    steps = (LocalStep("B", prep), SendStep("X0", "A"), SendStep("X1", "A"), LocalStep("A", receive),
             SendStep("C0", "B"), SendStep("C1", "B"))
    spec = ProtocolSpec(("A", "B"), owns, layout, steps, {"A": ("Bc",), "B": ("X0", "X1")},
                        {"A": ("X0",)}, {"A": ("X0",)})
    return OtProtocol(spec, "X0", "X1", "Bc", "X0", "committed-measurement")


def ot_correctness(p: OtProtocol) -> float:
    """Worst case over the 8 inputs of ``Pr[receiver outputs x_b]``."""
    worst = 1.0
    for x0, x1, b in INPUT_COMBOS:
        probs = p.final_state(x0, x1, b).probabilities([p.out])
        worst = min(worst, float(probs[(x0, x1)[b]]))
    return worst


def _fresh(name: str, taken) -> str:
    while name in taken:
        name += "_"
    return name


def g_states(p: OtProtocol) -> tuple[DensityMatrix, DensityMatrix]:
    """Receiver-side states ``G_0``, ``G_1``.

    ``G_y`` mixes a classical flag ``c`` with the receiver's view on inputs
    ``(x, y)`` for ``c = 0`` and ``(y, x)`` for ``c = 1``, the received bit
    ``x`` averaged and the choice bit equal to ``c``.
    """
    regs = p.spec.registers_of(p.receiver)
    flag = _fresh("flag", regs)
    layout = RegisterLayout(((flag, 1),)).concat(p.spec.layout.subset(regs))
    states = []
    for y in (0, 1):
        v0 = sum(p.view(p.receiver, x, y, 0).mat for x in (0, 1)) / 2
        v1 = sum(p.view(p.receiver, y, x, 1).mat for x in (0, 1)) / 2
        mat = 0.5 * (np.kron(np.diag([1.0, 0.0]), v0) + np.kron(np.diag([0.0, 1.0]), v1))
        states.append(DensityMatrix(layout, mat))
    return states[0], states[1]


def h_states(p: OtProtocol) -> tuple[DensityMatrix, DensityMatrix]:
    """Sender-side states ``H_0``, ``H_1``: the sender's bits in uniform superposition.

    The two reference registers holding ``|x0>|x1>`` stay with the sender.
    """
    regs = p.spec.registers_of(p.sender)
    ref0 = _fresh("ref_x0", p.spec.layout.names)
    ref1 = _fresh("ref_x1", p.spec.layout.names)
    layout = p.spec.layout.concat(RegisterLayout(((ref0, 1), (ref1, 1))))
    states = []
    for b in (0, 1):
        phi = np.zeros((p.spec.layout.dim, 4), dtype=complex)
        for x0, x1 in itertools.product((0, 1), repeat=2):
            phi[:, 2 * x0 + x1] = 0.5 * p.final_state(x0, x1, b).amplitudes
        states.append(PureState(layout, phi.reshape(-1)).reduced(list(regs) + [ref0, ref1]))
    return states[0], states[1]


def receiver_attack(p: OtProtocol) -> tuple[float, tuple[DensityMatrix, DensityMatrix]]:
    """Helstrom success of the purified receiver at guessing the unreceived bit."""
    g = g_states(p)
    return 0.5 * (1.0 + trace_distance(*g)), g


def receiver_attack_conditioned(p: OtProtocol) -> float:
    """Worst case over ``(b, c)`` of the Helstrom success at ``x_{1-b}`` given ``x_b = c``."""
    best = 0.0
    for b, c in itertools.product((0, 1), repeat=2):
        views = []
        for other in (0, 1):
            bits = [0, 0]
            bits[b], bits[1 - b] = c, other
            views.append(p.view(p.receiver, bits[0], bits[1], b))
        best = max(best, trace_distance(*views))
    return 0.5 * (1.0 + best)


def sender_attack(p: OtProtocol) -> tuple[float, tuple[DensityMatrix, DensityMatrix]]:
    """Helstrom success of the purified sender at guessing the choice bit."""
    h = h_states(p)
    return 0.5 * (1.0 + trace_distance(*h)), h


@dataclass(frozen=True, eq=False)
class AttackReport:
    p_a_star: float
    p_b_star: float
    cgs_lhs: float
    g_states: tuple
    h_states: tuple
    p_a_conditioned: float = field(default=float("nan"))
    violation: bool = False

    def as_dict(self) -> dict:
        return {"p_a_star": self.p_a_star, "p_b_star": self.p_b_star, "cgs_lhs": self.cgs_lhs,
                "p_a_conditioned": self.p_a_conditioned, "violation": self.violation}


def cgs_check(p: OtProtocol, tol: float = CGS_TOL) -> AttackReport:
    """Both attacks and the tradeoff ``2 p_b + p_a >= 2``; flags a violation beyond ``tol``."""
    p_a, g = receiver_attack(p)
    p_b, h = sender_attack(p)
    lhs = 2 * p_b + p_a
    return AttackReport(p_a, p_b, lhs, g, h, receiver_attack_conditioned(p), lhs < 2 - tol)


def _local_gates(spec: ProtocolSpec, mapping) -> list[Gate]:
    return [g.relabel(mapping) for st in spec.steps if isinstance(st, LocalStep) for g in st.circuit.gates]


def ot_to_efi(p: OtProtocol) -> EfiPair:
    """Generators ``gen_y`` emitting ``G_y (x) H_y`` with the protocol run inside.

    The G half prepares the flag ``c`` (purified by a copy), a coin for the
    received bit and the receiver's inputs; the H half entangles the sender's
    slots with two reference qubits. Both halves then replay every local step.
    """
    spec = p.spec
    g_map = {r: f"g_{r}" for r in spec.layout.names}
    h_map = {r: f"h_{r}" for r in spec.layout.names}
    flag, fpur, coin, ref0, ref1 = "g_flag", "g_fpur", "g_coin", "h_ref0", "h_ref1"
    layout = (RegisterLayout(((flag, 1),)).concat(spec.layout.renamed(g_map))
              .concat(RegisterLayout(((fpur, 1), (coin, 1))))
              .concat(spec.layout.renamed(h_map))
              .concat(RegisterLayout(((ref0, 1), (ref1, 1)))))
    outputs = ([flag] + [g_map[r] for r in spec.registers_of(p.receiver)]
               + [h_map[r] for r in spec.registers_of(p.sender)] + [ref0, ref1])
    f0, c0 = f"{flag}.0", f"{coin}.0"
    gx0, gx1, gb = (f"{g_map[r]}.0" for r in (p.x0, p.x1, p.b))
    hx0, hx1, hb = (f"{h_map[r]}.0" for r in (p.x0, p.x1, p.b))
    x = lambda a: Gate("X", (a,))  # noqa: E731
    gens = []
    for y in (0, 1):
        gates = [Gate("H", (f0,)), Gate("CNOT", (f0, f"{fpur}.0")), Gate("H", (c0,)), Gate("CNOT", (f0, gb))]
        # c = 0: x0 <- coin, x1 <- y;  c = 1: x0 <- y, x1 <- coin
        gates += [x(f0), Gate("X", (gx0,), controls=(f0, c0)), x(f0)]
        gates += [Gate("X", (gx1,), controls=(f0, c0))]
        if y:
            gates += [Gate("X", (gx0,), controls=(f0,))]
            gates += [x(f0), Gate("X", (gx1,), controls=(f0,)), x(f0)]
        gates += _local_gates(spec, g_map)
        gates += [Gate("H", (f"{ref0}.0",)), Gate("CNOT", (f"{ref0}.0", hx0)),
                  Gate("H", (f"{ref1}.0",)), Gate("CNOT", (f"{ref1}.0", hx1))]
        if y:
            gates.append(x(hb))
        gates += _local_gates(spec, h_map)
        gens.append(GateCircuit(layout, tuple(gates), (), tuple(outputs)))
    return EfiPair(gens[0], gens[1])


def ot_to_obj(p: OtProtocol) -> dict:
    obj = protocol_to_obj(p.spec)
    obj["ot"] = {"x0": p.x0, "x1": p.x1, "b": p.b, "out": p.out}
    if p.provenance:
        obj["ot"]["provenance"] = p.provenance
    return obj


def ot_from_obj(obj) -> OtProtocol:
    spec, extra = protocol_from_obj(obj, ("ot",))
    if "ot" not in extra:
        raise ProtocolError("OT protocol file needs an 'ot' metadata block")
    meta = extra["ot"]
    _require_keys(meta, {"x0", "x1", "b", "out", "provenance"}, {"x0", "x1", "b", "out"}, "ot block")
    return OtProtocol(spec, meta["x0"], meta["x1"], meta["b"], meta["out"], meta.get("provenance", ""))


def parse_ot(text: str) -> OtProtocol:
    return ot_from_obj(load_json(text, "OT protocol"))


def serialize_ot(p: OtProtocol) -> str:
    return dumps(ot_to_obj(p))
