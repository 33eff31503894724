"""Two-party protocols over a shared register pool.

A :class:`ProtocolSpec` is a list of local circuits and register sends. The
engine runs the purified protocol on one global state vector: every party's
randomness and measurements are kept coherent, so a party's semi-honest view
is just the reduced state on the registers it holds at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuits import (
    CircuitError,
    CircuitSyntaxError,
    GateCircuit,
    _require_keys,
    apply_gates,
    circuit_from_obj,
    circuit_to_obj,
    dumps,
    load_json,
)
from .qstate import DensityMatrix, LayoutError, PureState, RegisterLayout, basis_state, get_qubit_cap

__all__ = [
    "ExecutionTrace",
    "LocalStep",
    "ProtocolError",
    "ProtocolSpec",
    "SendStep",
    "parse_protocol",
    "protocol_from_obj",
    "protocol_to_obj",
    "run_protocol",
    "sample_outcomes",
    "semi_honest_view",
    "serialize_protocol",
]


class ProtocolError(ValueError):
    """Ownership violation or malformed protocol."""


@dataclass(frozen=True, eq=False)
class LocalStep:
    party: str
    circuit: GateCircuit


@dataclass(frozen=True)
class SendStep:
    register: str
    to: str


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """Two-party protocol description.

    Attributes:
        parties: the two party names.
        owns: initial owner of every register, in global layout order.
        layout: register sizes, in the same order as ``owns``.
        steps: ``LocalStep`` / ``SendStep`` sequence.
        inputs: per-party classical input slots (registers set to a basis
            state at run time).
        outputs: per-party output registers.
        measure: per-party registers measured in the computational basis at
            the end (honest mode only samples them).
    """

    parties: tuple[str, str]
    owns: Mapping[str, str]
    layout: RegisterLayout
    steps: tuple = ()
    inputs: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    outputs: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    measure: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        parties = tuple(self.parties)
        if len(parties) != 2 or parties[0] == parties[1]:
            raise ProtocolError("a protocol needs exactly two distinct parties")
        owns = dict(self.owns)
        if tuple(owns) != self.layout.names:
            raise ProtocolError("ownership map must list every register in layout order")
        for reg, party in owns.items():
            if party not in parties:
                raise ProtocolError(f"register {reg!r} owned by unknown party {party!r}")

        def per_party(m, what):
            m = {p: tuple(v) for p, v in dict(m).items()}
            for p, regs in m.items():
                if p not in parties:
                    raise ProtocolError(f"{what} for unknown party {p!r}")
                for r in regs:
                    if r not in self.layout:
                        raise ProtocolError(f"{what} register {r!r} of {p} is not declared")
            return m

        inputs = per_party(self.inputs, "input")
        for p, slots in inputs.items():
            for s in slots:
                if owns[s] != p:
                    raise ProtocolError(f"input slot {s!r} of {p} is owned by {owns[s]}")
        steps = tuple(self.steps)
        for i, st in enumerate(steps):
            if isinstance(st, LocalStep):
                if st.party not in parties:
                    raise ProtocolError(f"step {i}: unknown party {st.party!r}")
                for name, q in st.circuit.layout.registers:
                    if name not in self.layout or self.layout.size(name) != q:
                        raise ProtocolError(f"step {i}: register {name!r} ({q} qubits) does not match the protocol layout")
            elif isinstance(st, SendStep):
                if st.register not in self.layout:
                    raise ProtocolError(f"step {i}: unknown register {st.register!r}")
                if st.to not in parties:
                    raise ProtocolError(f"step {i}: unknown party {st.to!r}")
            else:
                raise ProtocolError(f"step {i}: not a protocol step")
        object.__setattr__(self, "parties", parties)
        object.__setattr__(self, "owns", owns)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", per_party(self.outputs, "output"))
        object.__setattr__(self, "measure", per_party(self.measure, "measure"))
        self.final_ownership()

    @property
    def width(self) -> int:
        return self.layout.total_qubits

    def other(self, party: str) -> str:
        if party not in self.parties:
            raise ProtocolError(f"unknown party {party!r}")
        return self.parties[1] if party == self.parties[0] else self.parties[0]

    def ownership_after(self, n_steps: int) -> dict[str, str]:
        """Register owners after the first ``n_steps`` steps.

        Raises:
            ProtocolError: on the first ownership violation, naming the step.
        """
        own = dict(self.owns)
        for i, st in enumerate(self.steps[:n_steps]):
            if isinstance(st, LocalStep):
                for reg in sorted(st.circuit.touched_registers()):
                    if own[reg] != st.party:
                        raise ProtocolError(f"step {i}: {st.party} touches register {reg!r} held by {own[reg]}")
            else:
                if own[st.register] == st.to:
                    raise ProtocolError(f"step {i}: {st.to} already holds register {st.register!r}")
                own[st.register] = st.to
        return own

    def final_ownership(self) -> dict[str, str]:
        return self.ownership_after(len(self.steps))

    def registers_of(self, party: str, ownership: Mapping[str, str] | None = None) -> tuple[str, ...]:
        own = self.final_ownership() if ownership is None else ownership
        return tuple(r for r in self.layout.names if own[r] == party)

    def truncated(self, n_steps: int) -> "ProtocolSpec":
        """The protocol stopped after ``n_steps`` steps, measurements dropped."""
        return ProtocolSpec(self.parties, self.owns, self.layout, self.steps[:n_steps], self.inputs)

    def relabel(self, mapping: Mapping[str, str]) -> "ProtocolSpec":
        def ren(regs):
            return tuple(mapping.get(r, r) for r in regs)

        steps = tuple(
            LocalStep(s.party, s.circuit.relabel(mapping)) if isinstance(s, LocalStep)
            else SendStep(mapping.get(s.register, s.register), s.to)
            for s in self.steps
        )
        return ProtocolSpec(
            self.parties, {mapping.get(r, r): p for r, p in self.owns.items()}, self.layout.renamed(mapping),
            steps, {p: ren(v) for p, v in self.inputs.items()}, {p: ren(v) for p, v in self.outputs.items()},
            {p: ren(v) for p, v in self.measure.items()},
        )

    def slot_owner(self, slot: str) -> str:
        for p, slots in self.inputs.items():
            if slot in slots:
                return p
        raise ProtocolError(f"{slot!r} is not an input slot")


@dataclass(frozen=True, eq=False)
class ExecutionTrace:
    state: PureState
    ownership: Mapping[str, str]
    snapshots: tuple[tuple[int, PureState, Mapping[str, str]], ...] = ()
    outcomes: Mapping[str, Mapping[str, int]] = field(default_factory=dict)

    def view(self, party: str) -> DensityMatrix:
        regs = [r for r in self.state.layout.names if self.ownership[r] == party]
        if not regs:
            raise LayoutError(f"{party} holds no registers at the end of the protocol")
        return self.state.reduced(regs)


def _bind_inputs(p: ProtocolSpec, inputs: Mapping[str, Mapping[str, int]] | None) -> dict[str, int]:
    inputs = dict(inputs or {})
    values: dict[str, int] = {}
    for party in inputs:
        if party not in p.parties:
            raise ProtocolError(f"inputs for unknown party {party!r}")
    for party in p.parties:
        given = dict(inputs.get(party, {}))
        slots = p.inputs.get(party, ())
        missing = [s for s in slots if s not in given]
        if missing:
            raise ProtocolError(f"{party} is missing inputs {missing}")
        extra = set(given) - set(slots)
        if extra:
            raise ProtocolError(f"{sorted(extra)} are not input slots of {party}")
        values.update(given)
    return values


def run_protocol(p: ProtocolSpec, inputs: Mapping[str, Mapping[str, int]] | None = None, *,
                 mode: str = "purified", rng: np.random.Generator | None = None,
                 snapshots: bool = False) -> ExecutionTrace:
    """Execute a protocol.

    Args:
        p: the protocol.
        inputs: ``{party: {slot: value}}`` for every declared slot.
        mode: ``"purified"`` keeps everything coherent; ``"honest"`` also
            samples the declared final measurements from their Born law.
        rng: generator for honest-mode sampling.
        snapshots: record ``(step, state, ownership)`` after every step.

    Raises:
        ProtocolError: missing inputs or an ownership violation (with step index).
        CapExceeded: protocol wider than the configured qubit cap.
    """
    if mode not in ("purified", "honest"):
        raise ValueError(f"unknown mode {mode!r}")
    p.layout.check_cap(get_qubit_cap())
    values = _bind_inputs(p, inputs)
    p.final_ownership()  # validates every step before any work is done
    n = p.layout.total_qubits
    psi = basis_state(p.layout, values).amplitudes.reshape((2,) * n)
    own = dict(p.owns)
    snaps = []
    for i, st in enumerate(p.steps):
        if isinstance(st, LocalStep):
            psi = apply_gates(psi, p.layout, st.circuit.gates)
        else:
            own[st.register] = st.to
        if snapshots:
            snaps.append((i, PureState(p.layout, psi.reshape(-1)), dict(own)))
    state = PureState(p.layout, psi.reshape(-1))
    outcomes: dict = {}
    if mode == "honest":
        outcomes = sample_outcomes(p, state, rng if rng is not None else np.random.default_rng(42))
    return ExecutionTrace(state, own, tuple(snaps), outcomes)


def measured_registers(p: ProtocolSpec) -> list[str]:
    return [r for party in p.parties for r in p.measure.get(party, ())]


def sample_outcomes(p: ProtocolSpec, state: PureState, rng: np.random.Generator, shots: int | None = None):
    """Sample the declared final measurements.

    With ``shots=None`` a single outcome dict ``{party: {reg: value}}`` is
    returned; otherwise an integer array of joint outcome indices (big-endian
    over the measured registers in party order).
    """
    regs = measured_registers(p)
    if not regs:
        return {} if shots is None else np.zeros(shots, dtype=np.int64)
    probs = state.probabilities(regs)
    probs = np.clip(probs.real, 0, None)
    probs /= probs.sum()
    draws = rng.choice(len(probs), size=1 if shots is None else shots, p=probs)
    if shots is not None:
        return draws
    k = int(draws[0])
    out: dict[str, dict[str, int]] = {}
    shift = sum(state.layout.size(r) for r in regs)
    for party in p.parties:
        for r in p.measure.get(party, ()):
            shift -= state.layout.size(r)
            out.setdefault(party, {})[r] = (k >> shift) & (2 ** state.layout.size(r) - 1)
    return out


def semi_honest_view(p: ProtocolSpec, party: str, inputs=None) -> DensityMatrix:
    """Purified view: reduced state on everything ``party`` holds at the end."""
    if party not in p.parties:
        raise ProtocolError(f"unknown party {party!r}")
    regs = p.registers_of(party)
    if not regs:
        raise LayoutError(f"{party} holds no registers at the end of the protocol")
    return run_protocol(p, inputs).view(party)


# -- protocol files ----------------------------------------------------------

_PROTOCOL_KEYS = {"parties", "owns", "inputs", "steps", "outputs", "measure"}


def protocol_to_obj(p: ProtocolSpec) -> dict:
    # register sizes live only in the step circuits
    declared = {name for st in p.steps if isinstance(st, LocalStep) for name in st.circuit.layout.names}
    missing = [r for r in p.layout.names if r not in declared]
    if missing:
        raise ProtocolError(f"registers {missing} appear in no circuit, so a file cannot record their size")
    steps = []
    for st in p.steps:
        if isinstance(st, LocalStep):
            steps.append({"local": {"party": st.party, "circuit": circuit_to_obj(st.circuit)}})
        else:
            steps.append({"send": {"reg": st.register, "to": st.to}})
    return {
        "parties": list(p.parties),
        "owns": dict(p.owns),
        "inputs": {k: list(v) for k, v in p.inputs.items()},
        "steps": steps,
        "outputs": {k: list(v) for k, v in p.outputs.items()},
        "measure": {k: list(v) for k, v in p.measure.items()},
    }


def protocol_from_obj(obj, extra_keys: Sequence[str] = ()) -> tuple[ProtocolSpec, dict]:
    """Build a protocol from its JSON object.

    Returns:
        The protocol and a dict holding the allowed ``extra_keys`` blocks.
    """
    _require_keys(obj, _PROTOCOL_KEYS | set(extra_keys), {"parties", "owns", "steps"}, "protocol")
    steps = []
    sizes: dict[str, int] = {}
    for i, raw in enumerate(obj["steps"]):
        if not isinstance(raw, dict) or len(raw) != 1 or next(iter(raw)) not in ("local", "send"):
            raise CircuitSyntaxError(f"step {i} must be {{'local': ...}} or {{'send': ...}}")
        kind, body = next(iter(raw.items()))
        if kind == "local":
            _require_keys(body, {"party", "circuit"}, {"party", "circuit"}, f"step {i}")
            try:
                circ = circuit_from_obj(body["circuit"])
            except CircuitError as exc:
                raise type(exc)(f"step {i}: {exc}") from None
            for name, q in circ.layout.registers:
                if sizes.setdefault(name, q) != q:
                    raise ProtocolError(f"step {i}: register {name!r} declared with {q} qubits, earlier {sizes[name]}")
            steps.append(LocalStep(body["party"], circ))
        else:
            _require_keys(body, {"reg", "to"}, {"reg", "to"}, f"step {i}")
            steps.append(SendStep(body["reg"], body["to"]))
    owns = obj["owns"]
    if not isinstance(owns, dict):
        raise CircuitSyntaxError("owns must be an object")
    undeclared = [r for r in owns if r not in sizes]
    if undeclared:
        raise ProtocolError(f"registers {undeclared} are not declared by any circuit")
    unowned = [r for r in sizes if r not in owns]
    if unowned:
        raise ProtocolError(f"registers {unowned} have no owner")
    layout = RegisterLayout(tuple((r, sizes[r]) for r in owns))
    spec = ProtocolSpec(tuple(obj["parties"]), owns, layout, tuple(steps), obj.get("inputs", {}),
                        obj.get("outputs", {}), obj.get("measure", {}))
    return spec, {k: obj[k] for k in extra_keys if k in obj}


def parse_protocol(text: str) -> ProtocolSpec:
    return protocol_from_obj(load_json(text, "protocol"))[0]


def serialize_protocol(p: ProtocolSpec) -> str:
    return dumps(protocol_to_obj(p))
