"""Example artifact files shipped with the package, and the code that writes them."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .circuits import Gate, GateCircuit, serialize_circuit
from .commitment import from_efi, serialize_scheme
from .efi import EfiPair, helstrom_distinguisher, serialize_pair
from .ot import broken_ck88, build_ot_from_commitment, naive_ck88, serialize_ot
from .qstate import RegisterLayout
from .twopc import FunctionTable
from .zkstates import serialize_rounded, silent_verifier_toy, stored_response_toy, two_round_toy

__all__ = ["bundled_texts", "data_dir", "data_path", "write_bundled"]


def single_qubit_generator(*gates: str) -> GateCircuit:
    """Generator with one output qubit ``out`` and the given fixed one-qubit gates."""
    return GateCircuit(RegisterLayout((("out", 1),)), tuple(Gate(g, ("out.0",)) for g in gates), (), ("out",))


def bell_generator() -> GateCircuit:
    """Half of a Bell pair: the maximally mixed qubit."""
    layout = RegisterLayout((("out", 1), ("anc", 1)))
    return GateCircuit(layout, (Gate("H", ("anc.0",)), Gate("CNOT", ("anc.0", "out.0"))), (), ("out",))


def bundled_texts() -> dict[str, str]:
    zero, one, plus = single_qubit_generator(), single_qubit_generator("X"), single_qubit_generator("H")
    orthogonal = EfiPair(zero, one)
    overlapping = EfiPair(zero, plus)
    identical = EfiPair(bell_generator(), bell_generator())
    binding = from_efi(orthogonal)
    hiding = from_efi(EfiPair(zero, zero))
    xor = FunctionTable.from_function(lambda x, y: x ^ y, 2, 2)
    and_ = FunctionTable.from_function(lambda x, y: x & y, 2, 2)
    return {
        "zero.circ": serialize_circuit(zero),
        "one.circ": serialize_circuit(one),
        "plus.circ": serialize_circuit(plus),
        "pair_orthogonal.json": serialize_pair(orthogonal),
        "pair_plus.json": serialize_pair(overlapping),
        "pair_identical.json": serialize_pair(identical),
        "helstrom_zero_one.circ": serialize_circuit(helstrom_distinguisher(*orthogonal.states())),
        "scheme_binding.json": serialize_scheme(binding),
        "scheme_hiding.json": serialize_scheme(hiding),
        "ck88.json": serialize_ot(naive_ck88()),
        "ck88_broken.json": serialize_ot(broken_ck88()),
        "ot_binding.json": serialize_ot(build_ot_from_commitment(binding)),
        "ot_hiding.json": serialize_ot(build_ot_from_commitment(hiding)),
        "and.csv": and_.to_csv(),
        "xor.csv": xor.to_csv(),
        "zk_stored.json": serialize_rounded(stored_response_toy()),
        "zk_silent.json": serialize_rounded(silent_verifier_toy()),
        "zk_two_round.json": serialize_rounded(two_round_toy()),
    }


def data_dir() -> Path:
    return Path(str(resources.files("efilab") / "data"))


def data_path(name: str) -> Path:
    return data_dir() / name


def write_bundled(directory: str | Path | None = None) -> list[Path]:
    directory = Path(directory) if directory is not None else data_dir()
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in bundled_texts().items():
        path = directory / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


if __name__ == "__main__":
    for p in write_bundled():
        print(p)
