"""Canonical-form quantum bit commitments.

Committing to ``b`` runs ``Q_b`` on ``|0...0>`` over registers ``(C, R)`` and
sends ``C``. Opening sends ``R`` and ``b``; the receiver applies ``Q_b^dagger``
and accepts on all zeroes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circuits import (
    CircuitError,
    Gate,
    GateCircuit,
    _require_keys,
    circuit_from_obj,
    circuit_to_obj,
    dumps,
    evolve_density,
    final_state,
    load_json,
)
from .efi import EfiPair
from .qstate import (
    DensityMatrix,
    LayoutError,
    PureState,
    RegisterLayout,
    fidelity,
    random_unitary,
    trace_distance,
)

__all__ = [
    "CommitmentScheme",
    "binding_parameter",
    "collapse_deviation",
    "commit",
    "from_efi",
    "hiding_advantage",
    "honest_binding_norm",
    "message",
    "optimal_binding_attack",
    "parse_scheme",
    "sampled_binding_attacks",
    "serialize_scheme",
    "verify_opening",
]


@dataclass(frozen=True, eq=False)
class CommitmentScheme:
    q0: GateCircuit
    q1: GateCircuit
    commit_register: str = "C"
    opening_register: str = "R"

    def __post_init__(self):
        names = (self.commit_register, self.opening_register)
        for q in (self.q0, self.q1):
            if set(q.layout.names) != set(names) or len(q.layout) != 2:
                raise LayoutError(f"commitment circuits must act on exactly {names}")
            if q.inputs:
                raise CircuitError("commitment circuits start from all zeroes and take no inputs")
        if self.q0.layout != self.q1.layout:
            raise LayoutError("q0 and q1 must share a layout")

    @property
    def layout(self) -> RegisterLayout:
        return self.q0.layout

    def circuit(self, b: int) -> GateCircuit:
        if b not in (0, 1):
            raise ValueError("commitment bit must be 0 or 1")
        return self.q1 if b else self.q0


def from_efi(p: EfiPair) -> CommitmentScheme:
    """Commitment whose messages are the two EFI states.

    The generator's output registers become ``C`` and everything it traces
    out becomes ``R``; the narrower side is padded with idle zero qubits so
    both circuits share a layout, and ``R`` always has at least one qubit.
    """
    width_c = p.output_layout.total_qubits
    rest = [sum(q for name, q in g.layout.registers if name not in g.outputs) for g in (p.gen0, p.gen1)]
    width_r = max(1, *rest)
    layout = RegisterLayout((("C", width_c), ("R", width_r)))
    circuits = []
    for g in (p.gen0, p.gen1):
        addr: dict[str, str] = {}
        n_c = n_r = 0
        for name, q in g.layout.registers:
            for i in range(q):
                if name in g.outputs:
                    addr[f"{name}.{i}"] = f"C.{n_c}"
                    n_c += 1
        for name, q in g.layout.registers:
            for i in range(q):
                if name not in g.outputs:
                    addr[f"{name}.{i}"] = f"R.{n_r}"
                    n_r += 1
        gates = [Gate(x.kind, tuple(addr[a] for a in x.targets), x.matrix, tuple(addr[a] for a in x.controls))
                 for x in g.gates]
        circuits.append(GateCircuit(layout, tuple(gates), (), ("C",)))
    return CommitmentScheme(circuits[0], circuits[1])


def commit(s: CommitmentScheme, b: int) -> PureState:
    """``Q_b |0...0>`` over ``(C, R)``."""
    return final_state(s.circuit(b))


def message(s: CommitmentScheme, b: int) -> DensityMatrix:
    """Commitment message: the reduced state on ``C``."""
    return commit(s, b).reduced([s.commit_register])


def verify_opening(s: CommitmentScheme, b: int, state) -> float:
    """Probability that the receiver accepts ``state`` as an opening to ``b``."""
    rho = state.density() if isinstance(state, PureState) else state
    if rho.layout != s.layout:
        raise LayoutError(f"opening layout {rho.layout.registers} does not match {s.layout.registers}")
    undone = evolve_density(rho, s.circuit(b).inverse().gates)
    return float(undone.mat[0, 0].real)


def hiding_advantage(s: CommitmentScheme) -> float:
    """Trace distance of the two messages (bounds every distinguisher)."""
    return trace_distance(message(s, 0), message(s, 1))


def binding_parameter(s: CommitmentScheme) -> float:
    """``sqrt(F(rho_0, rho_1))``, the optimum of the honest-binding norm."""
    return float(np.sqrt(fidelity(message(s, 0), message(s, 1))))


def _split(state: PureState, s: CommitmentScheme) -> np.ndarray:
    """Commitment state as a ``dim C x dim R`` matrix."""
    dc = 2 ** s.layout.size(s.commit_register)
    if state.layout.names[0] == s.commit_register:
        return state.amplitudes.reshape(dc, -1)
    return state.amplitudes.reshape(-1, dc).T


def honest_binding_norm(s: CommitmentScheme, unitary: np.ndarray, aux: np.ndarray | None = None) -> float:
    """Honest-binding norm for one attack.

    ``|| (Q_1|0><0|Q_1^dagger (x) I_Z) (I_C (x) U_RZ) (Q_0|0> (x) |aux>_Z) ||``
    where ``unitary`` acts on ``R`` followed by the auxiliary register.
    """
    aux = np.ones(1, dtype=complex) if aux is None else np.asarray(aux, dtype=complex)
    a0 = _split(commit(s, 0), s)
    a1 = _split(commit(s, 1), s)
    dc, dr = a0.shape
    dz = aux.size
    if unitary.shape != (dr * dz, dr * dz):
        raise LayoutError(f"attack unitary must act on {dr * dz} dims (R plus auxiliary)")
    # |chi>_{C,(R,Z)} = (I (x) U)(a0 (x) aux)
    start = np.kron(a0, aux.reshape(1, -1))  # dc x (dr*dz)
    chi = start @ unitary.T
    # project C,R onto |psi_1>, leaving a vector on Z
    residual = np.einsum("cr,crz->z", a1.conj(), chi.reshape(dc, dr, dz))
    return float(np.linalg.norm(residual))


def optimal_binding_attack(s: CommitmentScheme) -> np.ndarray:
    """Uhlmann unitary on ``R`` that attains the binding parameter.

    ``<psi_1|(I (x) U)|psi_0> = Tr(A_1^dagger A_0 U^T)`` is maximized in
    modulus by the polar factor of ``A_1^dagger A_0``.
    """
    a0 = _split(commit(s, 0), s)
    a1 = _split(commit(s, 1), s)
    m = a1.conj().T @ a0
    u, _, vh = np.linalg.svd(m)
    return (u @ vh).conj()


def sampled_binding_attacks(s: CommitmentScheme, rng: np.random.Generator, n: int = 200,
                            aux_qubits: int = 2) -> np.ndarray:
    """Honest-binding norms for ``n`` Haar-random unitaries on ``R`` plus an auxiliary register.

    The auxiliary register starts in ``|0...0>``; its size is a fixed
    restriction of the sampled attacks (the definition allows any size).
    """
    dr = 2 ** s.layout.size(s.opening_register)
    dz = 2**aux_qubits
    aux = np.zeros(dz, dtype=complex)
    aux[0] = 1
    return np.array([honest_binding_norm(s, random_unitary(dr * dz, rng), aux) for _ in range(n)])


def collapse_deviation(s: CommitmentScheme, alphas: Sequence[complex], projector: np.ndarray,
                       acts_on: Sequence[str], aux: np.ndarray | None = None) -> float:
    """Interference term a projector sees in a superposition of commitments.

    The state is ``sum_s alpha_s |s>_S (Q_s|0>)_{C_1R_1...C_mR_m} |psi_s>_Z``
    with ``m = log2(len(alphas))`` committed bits. The result is
    ``| ||P sum_s alpha_s v_s||^2 - sum_s ||alpha_s P v_s||^2 |``.

    Args:
        s: the commitment scheme.
        alphas: amplitudes indexed by the big-endian bit string ``s``.
        projector: projector on the registers ``acts_on``.
        acts_on: registers the projector touches, in order; any of ``"S"``,
            ``"R1".."Rm"`` and ``"Z"``. Commitment registers are refused.
        aux: optional array ``(2**m, dz)`` of auxiliary states ``|psi_s>``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    m = int(round(np.log2(alphas.size)))
    if 2**m != alphas.size or m < 1:
        raise ValueError("need 2**m amplitudes with m >= 1")
    if aux is None:
        aux = np.ones((alphas.size, 1), dtype=complex)
    aux = np.asarray(aux, dtype=complex)
    if aux.shape[0] != alphas.size:
        raise ValueError("one auxiliary state per branch")
    dz = aux.shape[1]
    nc = s.layout.size(s.commit_register)
    nr = s.layout.size(s.opening_register)
    regs = [("S", m)]
    for i in range(1, m + 1):
        regs += [(f"C{i}", nc), (f"R{i}", nr)]
    z_qubits = int(round(np.log2(dz)))
    if dz > 1:
        if 2**z_qubits != dz:
            raise ValueError("auxiliary dimension must be a power of two")
        regs.append(("Z", z_qubits))
    layout = RegisterLayout(tuple(regs))
    touched = [r for r in acts_on if r.startswith("C") or r not in layout]
    if touched:
        raise LayoutError(f"projector may not act on {touched}")
    d_act = int(np.prod([2 ** layout.size(r) for r in acts_on]))
    projector = np.asarray(projector, dtype=complex)
    if projector.shape != (d_act, d_act):
        raise ValueError(f"projector must be {d_act}x{d_act}")

    commits = [commit(s, 0).amplitudes, commit(s, 1).amplitudes]
    branches = []
    for idx in range(alphas.size):
        bits = [(idx >> (m - 1 - j)) & 1 for j in range(m)]
        v = np.zeros(2**m, dtype=complex)
        v[idx] = 1
        for b in bits:
            v = np.kron(v, commits[b])
        branches.append(np.kron(v, aux[idx]))

    # apply P on acts_on by permuting those qubits to the front
    n = layout.total_qubits
    order = [q for r in acts_on for q in layout.qubits_of(r)]
    order += [q for q in range(n) if q not in order]
    inv = np.argsort(order)

    def apply(vec):
        t = vec.reshape((2,) * n).transpose(order).reshape(d_act, -1)
        t = (projector @ t).reshape((2,) * n).transpose(inv)
        return t.reshape(-1)

    projected = [apply(v) for v in branches]
    joint = sum(a * pv for a, pv in zip(alphas, projected))
    separate = sum(abs(a) ** 2 * np.vdot(pv, pv).real for a, pv in zip(alphas, projected))
    return float(abs(np.vdot(joint, joint).real - separate))


def scheme_to_obj(s: CommitmentScheme) -> dict:
    return {"q0": circuit_to_obj(s.q0), "q1": circuit_to_obj(s.q1),
            "C": s.commit_register, "R": s.opening_register}


def scheme_from_obj(obj) -> CommitmentScheme:
    _require_keys(obj, {"q0", "q1", "C", "R"}, {"q0", "q1", "C", "R"}, "commitment scheme")
    return CommitmentScheme(circuit_from_obj(obj["q0"]), circuit_from_obj(obj["q1"]), obj["C"], obj["R"])


def parse_scheme(text: str) -> CommitmentScheme:
    return scheme_from_obj(load_json(text, "commitment scheme"))


def serialize_scheme(s: CommitmentScheme) -> str:
    return dumps(scheme_to_obj(s))
