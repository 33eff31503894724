import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from efilab.qstate import DensityMatrix, RegisterLayout

settings.register_profile(
    "efilab", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("efilab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def qubits(n, name="q"):
    return RegisterLayout(((name, n),))


def ket_dm(vec, name="q"):
    """Density matrix of a (not necessarily normalized) ket on one register."""
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    n = int(np.log2(v.size))
    return DensityMatrix(qubits(n, name), np.outer(v, v.conj()))


ZERO = np.array([1, 0])
ONE = np.array([0, 1])
PLUS = np.array([1, 1]) / np.sqrt(2)


def random_generator(rng, n_out=1, n_anc=1, layers=2):
    """Generator circuit of random one- and two-qubit raw gates."""
    from efilab.circuits import Gate, GateCircuit
    from efilab.qstate import random_unitary

    regs = [("out", n_out)] + ([("anc", n_anc)] if n_anc else [])
    layout = RegisterLayout(tuple(regs))
    addrs = [f"{n}.{i}" for n, q in regs for i in range(q)]
    gates = []
    for _ in range(layers):
        gates += [Gate("RAW1", (a,), random_unitary(2, rng)) for a in addrs]
        gates += [Gate("RAW2", (a, b), random_unitary(4, rng)) for a, b in zip(addrs, addrs[1:])]
    return GateCircuit(layout, tuple(gates), (), ("out",))


def random_pair(rng, n_out=1, n_anc=1):
    from efilab.efi import EfiPair

    return EfiPair(random_generator(rng, n_out, n_anc), random_generator(rng, n_out, n_anc))
