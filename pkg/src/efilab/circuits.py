"""Gate model and generalized circuits.

A :class:`GateCircuit` is a gate list over named registers together with the
registers bound to classical basis inputs at call time and the registers kept
as output. Every other register starts in ``|0...0>`` and is traced out at the
end, so a circuit is a quantum channel and its gate list is the unitary part.

Circuit files are JSON::

    {"registers": [{"name": "C", "qubits": 1}, ...],
     "inputs": ["X"], "outputs": ["C"],
     "gates": [{"g": "H", "on": ["C.0"]},
               {"g": "X", "on": ["C.0"], "ctrl": ["X.0"]},
               {"g": "RAW1", "on": ["C.0"], "matrix": [[[1, 0], [0, 0]], ...]}]}

``ctrl`` is optional and lists control qubits (all must be ``|1>``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .qstate import DensityMatrix, LayoutError, PureState, RegisterLayout, basis_state, partial_trace

__all__ = [
    "CircuitError",
    "CircuitSyntaxError",
    "Gate",
    "GateCircuit",
    "apply_gates",
    "circuit_from_obj",
    "circuit_to_obj",
    "evolve_density",
    "final_state",
    "parse_circuit",
    "run_channel",
    "run_generator",
    "serialize_circuit",
]

UNITARY_TOL = 1e-9

_S2 = 1 / np.sqrt(2)
FIXED_GATES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
ARITY = {"I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "T": 1,
         "CNOT": 2, "CZ": 2, "SWAP": 2, "RAW1": 1, "RAW2": 2}
SELF_INVERSE = {"I", "X", "Y", "Z", "H", "CNOT", "CZ", "SWAP"}


class CircuitError(ValueError):
    """Invalid gate, target or circuit structure."""


class CircuitSyntaxError(CircuitError):
    """Malformed circuit or protocol file."""


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    targets: tuple[str, ...]
    matrix: np.ndarray | None = field(default=None, repr=False)
    controls: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ARITY:
            raise CircuitError(f"unknown gate {self.kind!r}")
        targets = tuple(self.targets)
        controls = tuple(self.controls)
        if len(targets) != ARITY[self.kind]:
            raise CircuitError(f"gate {self.kind} takes {ARITY[self.kind]} target(s), got {len(targets)}")
        if len(set(targets + controls)) != len(targets) + len(controls):
            raise CircuitError(f"gate {self.kind} uses a qubit twice: {targets + controls}")
        if self.kind.startswith("RAW"):
            if self.matrix is None:
                raise CircuitError(f"{self.kind} needs a matrix")
            m = np.array(self.matrix, dtype=np.complex128)
            d = 2 ** len(targets)
            if m.shape != (d, d):
                raise CircuitError(f"{self.kind} matrix must be {d}x{d}, got {m.shape}")
            if not np.all(np.isfinite(m)) or np.max(np.abs(m.conj().T @ m - np.eye(d))) > UNITARY_TOL:
                raise CircuitError("non-unitary raw gate")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise CircuitError(f"gate {self.kind} does not take a matrix")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "controls", controls)

    @property
    def unitary(self) -> np.ndarray:
        return self.matrix if self.kind.startswith("RAW") else FIXED_GATES[self.kind]

    @property
    def qubits(self) -> tuple[str, ...]:
        return self.controls + self.targets

    def inverse(self) -> "Gate":
        if self.kind in SELF_INVERSE:
            return self
        kind = "RAW1" if len(self.targets) == 1 else "RAW2"
        return Gate(kind, self.targets, self.unitary.conj().T, self.controls)

    def relabel(self, mapping: Mapping[str, str]) -> "Gate":
        def move(addr):
            reg, _, idx = addr.rpartition(".")
            return f"{mapping.get(reg, reg)}.{idx}"

        return Gate(self.kind, tuple(map(move, self.targets)), self.matrix,
                    tuple(map(move, self.controls)))

    def controlled_by(self, *addresses: str) -> "Gate":
        return Gate(self.kind, self.targets, self.matrix, tuple(addresses) + self.controls)

    def same_as(self, other: "Gate") -> bool:
        if (self.kind, self.targets, self.controls) != (other.kind, other.targets, other.controls):
            return False
        if self.matrix is None:
            return other.matrix is None
        return other.matrix is not None and np.array_equal(self.matrix, other.matrix)


def _register_of(address: str) -> str:
    return address.rpartition(".")[0]


@dataclass(frozen=True, eq=False)
class GateCircuit:
    """Gate list over named registers with bound inputs and designated outputs."""

    layout: RegisterLayout
    gates: tuple[Gate, ...] = ()
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        layout = self.layout if isinstance(self.layout, RegisterLayout) else RegisterLayout(tuple(self.layout))
        gates = tuple(self.gates)
        for g in gates:
            for addr in g.qubits:
                try:
                    layout.qubit(addr)
                except LayoutError as exc:
                    raise CircuitError(f"bad target {addr!r}: {exc}") from None
        for group in ("inputs", "outputs"):
            names = tuple(getattr(self, group))
            for name in names:
                if name not in layout:
                    raise CircuitError(f"{group[:-1]} register {name!r} not in layout")
            if len(set(names)) != len(names):
                raise CircuitError(f"duplicate {group}")
            object.__setattr__(self, group, names)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "gates", gates)

    @property
    def output_layout(self) -> RegisterLayout:
        return self.layout.subset(self.outputs)

    @property
    def input_layout(self) -> RegisterLayout:
        return RegisterLayout(tuple((n, self.layout.size(n)) for n in self.inputs))

    def touched_registers(self) -> set[str]:
        return {_register_of(a) for g in self.gates for a in g.qubits}

    def inverse(self) -> "GateCircuit":
        return GateCircuit(self.layout, tuple(g.inverse() for g in reversed(self.gates)),
                           self.inputs, self.outputs)

    def relabel(self, mapping: Mapping[str, str]) -> "GateCircuit":
        return GateCircuit(self.layout.renamed(mapping), tuple(g.relabel(mapping) for g in self.gates),
                           tuple(mapping.get(n, n) for n in self.inputs),
                           tuple(mapping.get(n, n) for n in self.outputs))

    def with_gates(self, gates: Iterable[Gate]) -> "GateCircuit":
        return GateCircuit(self.layout, tuple(gates), self.inputs, self.outputs)

    def unitary(self) -> np.ndarray:
        """Matrix of the unitary part (big-endian over ``layout``)."""
        n = self.layout.total_qubits
        basis = np.eye(2**n, dtype=np.complex128).reshape((2,) * n + (2**n,))
        out = apply_gates(basis, self.layout, self.gates)
        return out.reshape(2**n, 2**n)

    def same_as(self, other: "GateCircuit") -> bool:
        return (self.layout == other.layout and self.inputs == other.inputs
                and self.outputs == other.outputs and len(self.gates) == len(other.gates)
                and all(a.same_as(b) for a, b in zip(self.gates, other.gates)))


def apply_gates(tensor: np.ndarray, layout: RegisterLayout, gates: Sequence[Gate],
                offset: int = 0, conjugate: bool = False) -> np.ndarray:
    """Apply gates to the qubit axes ``offset .. offset + n`` of ``tensor``.

    Gates are resolved by register name, so ``layout`` may be a superset of
    the registers the gates mention. With ``conjugate`` the complex-conjugate
    gate is applied, which is how the column index of a density matrix moves.
    """
    psi = np.array(tensor, dtype=np.complex128)
    for g in gates:
        u = g.unitary.conj() if conjugate else g.unitary
        ts = [offset + layout.qubit(a) for a in g.targets]
        cs = [offset + layout.qubit(a) for a in g.controls]
        idx = [slice(None)] * psi.ndim
        for c in cs:
            idx[c] = 1
        # axis positions inside the control-sliced view
        view_axes = [t - sum(1 for c in cs if c < t) for t in ts]
        sub = psi[tuple(idx)]
        k = len(ts)
        u_t = u.reshape((2,) * (2 * k))
        moved = np.tensordot(u_t, sub, axes=(list(range(k, 2 * k)), view_axes))
        psi[tuple(idx)] = np.moveaxis(moved, list(range(k)), view_axes)
    return psi


def final_state(c: GateCircuit, bound_inputs: Mapping[str, int] | None = None) -> PureState:
    """Pure state after the unitary part, inputs bound to basis values."""
    bound = dict(bound_inputs or {})
    missing = [n for n in c.inputs if n not in bound]
    if missing:
        raise CircuitError(f"unbound inputs {missing}")
    extra = set(bound) - set(c.inputs)
    if extra:
        raise CircuitError(f"{sorted(extra)} are not declared inputs")
    start = basis_state(c.layout, bound)
    n = c.layout.total_qubits
    psi = apply_gates(start.amplitudes.reshape((2,) * n), c.layout, c.gates)
    return PureState(c.layout, psi.reshape(-1))


def run_generator(c: GateCircuit, bound_inputs: Mapping[str, int] | None = None) -> DensityMatrix:
    """Output state of a generalized circuit: run it and trace out non-outputs."""
    if not c.outputs:
        raise CircuitError("circuit has no output registers")
    return final_state(c, bound_inputs).reduced(c.outputs)


def evolve_density(rho: DensityMatrix, gates: Sequence[Gate]) -> DensityMatrix:
    """``U rho U^dagger`` for the gate list, gates addressed by register name."""
    n = rho.n_qubits
    t = rho.mat.reshape((2,) * (2 * n))
    t = apply_gates(t, rho.layout, gates, offset=0)
    t = apply_gates(t, rho.layout, gates, offset=n, conjugate=True)
    return DensityMatrix(rho.layout, t.reshape(rho.mat.shape))


def run_channel(c: GateCircuit, rho: DensityMatrix) -> DensityMatrix:
    """Feed ``rho`` into the circuit's input registers and return the output state.

    ``rho`` must be laid out exactly as the circuit's inputs; all other
    registers start at zero.
    """
    if rho.layout != c.input_layout:
        raise LayoutError(f"input layout {rho.layout.registers} does not match circuit inputs "
                          f"{c.input_layout.registers}")
    if not c.outputs:
        raise CircuitError("circuit has no output registers")
    rest = [r for r in c.layout.registers if r[0] not in c.inputs]
    full = rho
    if rest:
        zero = basis_state(RegisterLayout(tuple(rest))).density()
        full = DensityMatrix(rho.layout.concat(zero.layout), np.kron(rho.mat, zero.mat))
    full = full.reorder(c.layout.names)
    out = evolve_density(full, c.gates)
    return partial_trace(out, [n for n in c.layout.names if n not in c.outputs])


# -- serialization ---------------------------------------------------------

_CIRCUIT_KEYS = {"registers", "inputs", "outputs", "gates"}
_GATE_KEYS = {"g", "on", "matrix", "ctrl"}


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _decode_matrix(rows) -> np.ndarray:
    try:
        return np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])
    except (TypeError, ValueError):
        raise CircuitSyntaxError("matrix entries must be [re, im] pairs") from None


def circuit_to_obj(c: GateCircuit) -> dict:
    gates = []
    for g in c.gates:
        entry: dict = {"g": g.kind, "on": list(g.targets)}
        if g.controls:
            entry["ctrl"] = list(g.controls)
        if g.matrix is not None:
            entry["matrix"] = _encode_matrix(g.matrix)
        gates.append(entry)
    return {
        "registers": [{"name": n, "qubits": q} for n, q in c.layout.registers],
        "inputs": list(c.inputs),
        "outputs": list(c.outputs),
        "gates": gates,
    }


def _require_keys(obj, allowed: set, required: set, what: str):
    if not isinstance(obj, dict):
        raise CircuitSyntaxError(f"{what} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise CircuitSyntaxError(f"unknown keys in {what}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise CircuitSyntaxError(f"missing keys in {what}: {sorted(missing)}")


def circuit_from_obj(obj) -> GateCircuit:
    _require_keys(obj, _CIRCUIT_KEYS, {"registers", "gates"}, "circuit")
    regs = []
    for r in obj["registers"]:
        _require_keys(r, {"name", "qubits"}, {"name", "qubits"}, "register")
        if not isinstance(r["qubits"], int) or isinstance(r["qubits"], bool):
            raise CircuitSyntaxError(f"register {r['name']!r} qubits must be an integer")
        regs.append((r["name"], r["qubits"]))
    try:
        layout = RegisterLayout(tuple(regs))
    except LayoutError as exc:
        raise CircuitSyntaxError(str(exc)) from None
    gates = []
    for i, g in enumerate(obj["gates"]):
        _require_keys(g, _GATE_KEYS, {"g", "on"}, f"gate {i}")
        matrix = _decode_matrix(g["matrix"]) if "matrix" in g else None
        try:
            gates.append(Gate(g["g"], tuple(g["on"]), matrix, tuple(g.get("ctrl", ()))))
        except CircuitError as exc:
            raise CircuitError(f"gate {i}: {exc}") from None
    return GateCircuit(layout, tuple(gates), tuple(obj.get("inputs", ())), tuple(obj.get("outputs", ())))


def load_json(text: str, what: str = "file"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitSyntaxError(f"{what}: syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def parse_circuit(text: str) -> GateCircuit:
    """Parse a circuit file (JSON text)."""
    return circuit_from_obj(load_json(text, "circuit"))


def dumps(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def serialize_circuit(c: GateCircuit) -> str:
    """Canonical JSON text; ``parse_circuit`` inverts it exactly."""
    return dumps(circuit_to_obj(c))
