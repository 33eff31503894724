"""Instance-dependent state pairs from purified multi-round interactions.

A rounded protocol alternates a verifier step and a prover step, passing a
single message register back and forth. Round ``i`` runs from verifier step
``i`` up to (not including) verifier step ``i + 1``, so it contains the
verifier's handling of the prover's response. Per round two snapshots are
reduced onto the verifier's private registers (message register traced out):

* ``xi_i``: right after the verifier's round-``i`` step, before sending;
* ``rho_i``: at the end of round ``i``, where an aborting verifier stops.

``gamma0 = rho_1 (x) ... (x) rho_k`` and ``gamma1 = xi_1 (x) ... (x) xi_k``.
Extraction runs on the real interaction; no simulator is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Gate, GateCircuit, _require_keys, apply_gates, dumps, load_json
from .protocol import (
    LocalStep,
    ProtocolError,
    ProtocolSpec,
    SendStep,
    protocol_from_obj,
    protocol_to_obj,
    run_protocol,
)
from .qstate import DensityMatrix, PureState, RegisterLayout, get_qubit_cap, tensor, trace_distance

__all__ = [
    "InstanceFarness",
    "InstanceStatePair",
    "RoundedProtocol",
    "extract_instance_states",
    "gamma2_factors",
    "instance_farness",
    "parse_rounded",
    "serialize_rounded",
    "silent_verifier_toy",
    "stored_response_toy",
    "truncation_factors",
    "two_round_toy",
]


@dataclass(frozen=True, eq=False)
class RoundedProtocol:
    spec: ProtocolSpec
    rounds: tuple[tuple[int, int], ...]
    message: str

    def __post_init__(self):
        spec = self.spec
        rounds = tuple((int(v), int(p)) for v, p in self.rounds)
        if not rounds:
            raise ProtocolError("a rounded protocol needs at least one round")
        if self.message not in spec.layout:
            raise ProtocolError(f"unknown message register {self.message!r}")
        flat = [i for pair in rounds for i in pair]
        if flat != sorted(set(flat)) or flat[-1] >= len(spec.steps) or flat[0] < 0:
            raise ProtocolError("round steps must be strictly increasing step indices")
        first = spec.steps[rounds[0][0]]
        if not isinstance(first, LocalStep):
            raise ProtocolError(f"round 1: step {rounds[0][0]} is not a local step")
        verifier = first.party
        prover = spec.other(verifier)
        if spec.owns[self.message] != verifier:
            raise ProtocolError("the message register must start with the verifier")
        for i, st in enumerate(spec.steps):
            if isinstance(st, SendStep) and st.register != self.message:
                raise ProtocolError(f"step {i}: only the message register may travel")
        ends = [v for v, _ in rounds[1:]] + [len(spec.steps)]
        for r, ((v, p), end) in enumerate(zip(rounds, ends), start=1):
            for idx, party in ((v, verifier), (p, prover)):
                st = spec.steps[idx]
                if not isinstance(st, LocalStep) or st.party != party:
                    raise ProtocolError(f"round {r}: step {idx} must be a local step of {party}")
            if not any(isinstance(s, SendStep) and s.to == prover for s in spec.steps[v + 1:p]):
                raise ProtocolError(f"round {r}: the message is not sent to the prover before its step")
            if not any(isinstance(s, SendStep) and s.to == verifier for s in spec.steps[p + 1:end]):
                raise ProtocolError(f"round {r}: the prover's response is never sent back")
        if not self.verifier_registers:
            raise ProtocolError("the verifier has no private registers")
        object.__setattr__(self, "rounds", rounds)

    @property
    def k(self) -> int:
        return len(self.rounds)

    @property
    def verifier(self) -> str:
        return self.spec.steps[self.rounds[0][0]].party

    @property
    def prover(self) -> str:
        return self.spec.other(self.verifier)

    @property
    def verifier_registers(self) -> tuple[str, ...]:
        return tuple(r for r in self.spec.layout.names
                     if self.spec.owns[r] == self.verifier and r != self.message)

    @property
    def prover_registers(self) -> tuple[str, ...]:
        return tuple(r for r in self.spec.layout.names if self.spec.owns[r] == self.prover)

    def round_ends(self) -> list[int]:
        """Number of steps executed at the end of each round."""
        return [v for v, _ in self.rounds[1:]] + [len(self.spec.steps)]


@dataclass(frozen=True)
class InstanceFarness:
    value: float
    mode: str  # "EXACT" or "LOWER_BOUND"


@dataclass(frozen=True, eq=False)
class InstanceStatePair:
    gamma0: tuple[DensityMatrix, ...]
    gamma1: tuple[DensityMatrix, ...]
    farness: float
    farness_mode: str


def instance_farness(pair_or_factors, mode: str = "auto") -> InstanceFarness:
    """Trace distance between ``gamma0`` and ``gamma1``.

    The full tensor products are formed when they fit under the qubit cap
    (``mode="auto"``); otherwise, or with ``mode="lower_bound"``, the largest
    per-factor distance is returned, which never exceeds the exact value.
    """
    if isinstance(pair_or_factors, InstanceStatePair):
        g0, g1 = pair_or_factors.gamma0, pair_or_factors.gamma1
    else:
        g0, g1 = pair_or_factors
    if len(g0) != len(g1) or not g0:
        raise ValueError("need the same positive number of factors on both sides")
    if mode not in ("auto", "exact", "lower_bound"):
        raise ValueError(f"unknown mode {mode!r}")
    width = sum(r.n_qubits for r in g0)
    if mode == "lower_bound" or (mode == "auto" and width > get_qubit_cap()):
        return InstanceFarness(max(trace_distance(a, b) for a, b in zip(g0, g1)), "LOWER_BOUND")
    return InstanceFarness(trace_distance(_tensor_all(g0), _tensor_all(g1)), "EXACT")


def _tensor_all(factors) -> DensityMatrix:
    out = None
    for i, f in enumerate(factors, start=1):
        f = f.relabel({n: f"{n}_{i}" for n in f.layout.names})
        out = f if out is None else tensor(out, f)
    return out


def extract_instance_states(rp: RoundedProtocol, inputs=None) -> InstanceStatePair:
    """One purified run, snapshotted after each verifier step and at each round end."""
    trace = run_protocol(rp.spec, inputs, snapshots=True)
    keep = rp.verifier_registers
    states = [s for _, s, _ in trace.snapshots]
    xi = tuple(states[v].reduced(keep) for v, _ in rp.rounds)
    rho = tuple(states[end - 1].reduced(keep) for end in rp.round_ends())
    far = instance_farness((rho, xi))
    return InstanceStatePair(rho, xi, far.value, far.mode)


def truncation_factors(rp: RoundedProtocol, inputs=None) -> tuple[DensityMatrix, ...]:
    """``rho_i`` recomputed by running the protocol cut off after round ``i``."""
    keep = rp.verifier_registers
    return tuple(run_protocol(rp.spec.truncated(end), inputs).state.reduced(keep) for end in rp.round_ends())


def gamma2_factors(rp: RoundedProtocol, inputs=None) -> tuple[DensityMatrix, ...]:
    """Honest-run verifier states ``psi_i`` after ``i`` full rounds.

    Each round is replayed on its own from the previous round's global state,
    so the result does not share the single-pass snapshots.
    """
    keep = rp.verifier_registers
    state = run_protocol(rp.spec.truncated(0), inputs).state
    starts = [0] + rp.round_ends()[:-1]
    out = []
    for start, end in zip(starts, rp.round_ends()):
        n = rp.spec.layout.total_qubits
        psi = state.amplitudes.reshape((2,) * n)
        for st in rp.spec.steps[start:end]:
            if isinstance(st, LocalStep):
                psi = apply_gates(psi, rp.spec.layout, st.circuit.gates)
        state = PureState(rp.spec.layout, psi.reshape(-1))
        out.append(state.reduced(keep))
    return tuple(out)


def _rounded(layout, owns, steps, rounds) -> RoundedProtocol:
    spec = ProtocolSpec(("V", "P"), owns, layout, tuple(steps))
    return RoundedProtocol(spec, rounds, "M")


def stored_response_toy() -> RoundedProtocol:
    """One round on three qubits; the verifier swaps the prover's constant ``|0>`` into ``S``.

    The verifier entangles ``S`` with the message, so ``xi_1`` is maximally
    mixed while ``rho_1 = |0><0|``.
    """
    layout = RegisterLayout((("S", 1), ("M", 1), ("P", 1)))
    local = lambda regs, *gates: GateCircuit(layout.subset(regs), gates)  # noqa: E731
    steps = [
        LocalStep("V", local(["S", "M"], Gate("H", ("S.0",)), Gate("CNOT", ("S.0", "M.0")))),
        SendStep("M", "P"),
        LocalStep("P", local(["M", "P"], Gate("SWAP", ("M.0", "P.0")))),
        SendStep("M", "V"),
        LocalStep("V", local(["S", "M"], Gate("SWAP", ("S.0", "M.0")))),
    ]
    return _rounded(layout, {"S": "V", "M": "V", "P": "P"}, steps, ((0, 2),))


def silent_verifier_toy() -> RoundedProtocol:
    """Two rounds where the verifier never reads the message and stays unentangled with it."""
    layout = RegisterLayout((("W", 1), ("M", 1), ("P", 1)))
    local = lambda regs, *gates: GateCircuit(layout.subset(regs), gates)  # noqa: E731
    steps = []
    for r in range(2):
        steps += [
            LocalStep("V", local(["W", "M"], Gate("H", ("W.0",)), Gate("H", ("M.0",)))),
            SendStep("M", "P"),
            LocalStep("P", local(["M", "P"], Gate("CNOT", ("M.0", "P.0")), Gate("T", ("M.0",)))),
            SendStep("M", "V"),
        ]
    return _rounded(layout, {"W": "V", "M": "V", "P": "P"}, steps, ((0, 2), (4, 6)))


def two_round_toy() -> RoundedProtocol:
    """Two rounds with an entangling verifier and a prover that keeps part of each message."""
    layout = RegisterLayout((("W", 2), ("M", 1), ("P", 2)))
    local = lambda regs, *gates: GateCircuit(layout.subset(regs), gates)  # noqa: E731
    steps = [
        LocalStep("V", local(["W", "M"], Gate("H", ("W.0",)), Gate("CNOT", ("W.0", "M.0")))),
        SendStep("M", "P"),
        LocalStep("P", local(["M", "P"], Gate("SWAP", ("M.0", "P.0")), Gate("H", ("M.0",)))),
        SendStep("M", "V"),
        LocalStep("V", local(["W", "M"], Gate("CNOT", ("M.0", "W.1")), Gate("S", ("W.1",)),
                             Gate("H", ("W.0",)), Gate("CNOT", ("W.1", "M.0")))),
        SendStep("M", "P"),
        LocalStep("P", local(["M", "P"], Gate("CNOT", ("M.0", "P.1")), Gate("H", ("M.0",)))),
        SendStep("M", "V"),
        LocalStep("V", local(["W", "M"], Gate("SWAP", ("M.0", "W.0")))),
    ]
    return _rounded(layout, {"W": "V", "M": "V", "P": "P"}, steps, ((0, 2), (4, 6)))


def rounded_to_obj(rp: RoundedProtocol) -> dict:
    obj = protocol_to_obj(rp.spec)
    obj["rounds"] = [{"verifier_step": v, "prover_step": p} for v, p in rp.rounds]
    obj["message"] = rp.message
    return obj


def rounded_from_obj(obj) -> RoundedProtocol:
    spec, extra = protocol_from_obj(obj, ("rounds", "message"))
    if "rounds" not in extra or "message" not in extra:
        raise ProtocolError("rounded protocol file needs 'rounds' and 'message'")
    rounds = []
    for i, r in enumerate(extra["rounds"]):
        _require_keys(r, {"verifier_step", "prover_step"}, {"verifier_step", "prover_step"}, f"round {i}")
        rounds.append((r["verifier_step"], r["prover_step"]))
    return RoundedProtocol(spec, tuple(rounds), extra["message"])


def parse_rounded(text: str) -> RoundedProtocol:
    return rounded_from_obj(load_json(text, "rounded protocol"))


def serialize_rounded(rp: RoundedProtocol) -> str:
    return dumps(rounded_to_obj(rp))
