"""EFI candidate pairs: two generators, their output states, and distance tools."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import (
    CircuitError,
    Gate,
    GateCircuit,
    _require_keys,
    circuit_from_obj,
    circuit_to_obj,
    dumps,
    load_json,
    run_channel,
    run_generator,
)
from .qstate import (
    PURE_QUBIT_CAP,
    CapExceeded,
    DensityMatrix,
    LayoutError,
    RegisterLayout,
    get_qubit_cap,
    helstrom,
    trace_distance,
)

__all__ = [
    "AmplificationRow",
    "EfiPair",
    "amplification_bound",
    "amplification_check",
    "amplify",
    "distinguisher_advantage",
    "farness",
    "helstrom_distinguisher",
    "parse_pair",
    "serialize_pair",
]


@dataclass(frozen=True, eq=False)
class EfiPair:
    """Two generalized circuits whose outputs should be far but hard to tell apart.

    ``security_parameter`` is carried along as metadata only.
    """

    gen0: GateCircuit
    gen1: GateCircuit
    security_parameter: int = 1

    def __post_init__(self):
        for g in (self.gen0, self.gen1):
            if not g.outputs:
                raise CircuitError("generator has no output registers")
            if g.inputs:
                raise CircuitError("generators take no classical inputs")
        if self.gen0.output_layout != self.gen1.output_layout:
            raise LayoutError(f"generators disagree on output layout: {self.gen0.output_layout.registers} "
                              f"vs {self.gen1.output_layout.registers}")

    @property
    def output_layout(self) -> RegisterLayout:
        return self.gen0.output_layout

    def states(self) -> tuple[DensityMatrix, DensityMatrix]:
        return run_generator(self.gen0), run_generator(self.gen1)


def farness(p: EfiPair) -> float:
    """Trace distance between the two generated states."""
    return trace_distance(*p.states())


def _copies(c: GateCircuit, n: int) -> GateCircuit:
    regs, gates, outs = [], [], []
    for k in range(1, n + 1):
        mapping = {name: f"{name}_{k}" for name in c.layout.names}
        ck = c.relabel(mapping)
        regs.extend(ck.layout.registers)
        gates.extend(ck.gates)
        outs.extend(ck.outputs)
    return GateCircuit(RegisterLayout(tuple(regs)), tuple(gates), (), tuple(outs))


def amplify(p: EfiPair, n: int) -> EfiPair:
    """Pair whose generators emit ``n`` independent copies of the originals."""
    if n < 1:
        raise ValueError("need at least one copy")
    if n == 1:
        return p
    width = n * p.output_layout.total_qubits
    if width > get_qubit_cap():
        raise CapExceeded(f"{n} copies need {width} output qubits, cap is {get_qubit_cap()}")
    total = n * max(p.gen0.layout.total_qubits, p.gen1.layout.total_qubits)
    if total > PURE_QUBIT_CAP:
        raise CapExceeded(f"{n} copies need {total} circuit qubits, cap is {PURE_QUBIT_CAP}")
    return EfiPair(_copies(p.gen0, n), _copies(p.gen1, n), p.security_parameter)


def amplification_bound(td: float, n: int) -> float:
    """Majority-vote lower bound ``1 - exp(-n * td / 2)`` on the n-copy distance."""
    return 1.0 - math.exp(-n * td / 2.0)


@dataclass(frozen=True)
class AmplificationRow:
    n: int
    actual: float
    bound: float
    violation: bool


def amplification_check(p: EfiPair, n_max: int, tol: float = 1e-9) -> list[AmplificationRow]:
    """Compare the n-copy distance with the majority-vote bound for n = 1..n_max."""
    td = farness(p)
    rows = []
    for n in range(1, n_max + 1):
        actual = farness(amplify(p, n))
        bound = amplification_bound(td, n)
        rows.append(AmplificationRow(n, actual, bound, actual < bound - tol))
    return rows


def distinguisher_advantage(p: EfiPair, d: GateCircuit) -> float:
    """Exact ``|Pr[d(xi0) = 1] - Pr[d(xi1) = 1]|`` for a one-bit-output circuit.

    ``d`` receives the generated state in its input registers, which must be
    laid out exactly like the generator output.
    """
    if d.input_layout != p.output_layout:
        raise LayoutError(f"distinguisher inputs {d.input_layout.registers} do not match "
                          f"generator output {p.output_layout.registers}")
    if d.output_layout.total_qubits != 1:
        raise LayoutError("distinguisher must output exactly one qubit")
    ones = [run_channel(d, xi).mat[1, 1].real for xi in p.states()]
    return abs(ones[0] - ones[1])


def helstrom_distinguisher(rho: DensityMatrix, sigma: DensityMatrix) -> GateCircuit:
    """Circuit that outputs 0 on the Helstrom ``"rho"`` outcome and 1 otherwise.

    Supported for 1- and 2-qubit states: a raw gate rotates the eigenbasis of
    ``rho - sigma`` onto the computational basis and controlled flips mark the
    ``"sigma"`` directions on a fresh output qubit.
    """
    layout = rho.layout
    n = layout.total_qubits
    if n > 2:
        raise CapExceeded("helstrom_distinguisher supports at most 2 input qubits")
    meas, _ = helstrom(rho, sigma)
    w, v = np.linalg.eigh(meas.projector("sigma"))
    v = v[:, ::-1]  # "sigma" directions first
    addrs = [f"{name}.{i}" for name, q in layout.registers for i in range(q)]
    out = "out"
    while out in layout:
        out += "_"
    full = layout.concat(RegisterLayout(((out, 1),)))
    gates = [Gate("RAW1" if n == 1 else "RAW2", tuple(addrs), v.conj().T)]
    for k in range(int(round(w.sum()))):
        bits = [(k >> (n - 1 - j)) & 1 for j in range(n)]
        flips = [Gate("X", (a,)) for a, bit in zip(addrs, bits) if bit == 0]
        gates += flips + [Gate("X", (f"{out}.0",), controls=tuple(addrs))] + flips
    return GateCircuit(full, tuple(gates), layout.names, (out,))


def pair_to_obj(p: EfiPair) -> dict:
    return {"gen0": circuit_to_obj(p.gen0), "gen1": circuit_to_obj(p.gen1), "lambda": p.security_parameter}


def pair_from_obj(obj) -> EfiPair:
    _require_keys(obj, {"gen0", "gen1", "lambda"}, {"gen0", "gen1"}, "EFI pair")
    return EfiPair(circuit_from_obj(obj["gen0"]), circuit_from_obj(obj["gen1"]), int(obj.get("lambda", 1)))


def parse_pair(text: str) -> EfiPair:
    return pair_from_obj(load_json(text, "EFI pair"))


def serialize_pair(p: EfiPair) -> str:
    return dumps(pair_to_obj(p))
