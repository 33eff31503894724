"""Register layouts, density matrices, pure states and the distance toolkit.

Qubit ordering is big-endian throughout: registers in layout order, and
inside a register index 0 is the most significant qubit.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import eig_hermitian, psd_sqrt

__all__ = [
    "CapExceeded",
    "DensityMatrix",
    "LayoutError",
    "Measurement",
    "PureState",
    "RegisterLayout",
    "basis_state",
    "fidelity",
    "get_qubit_cap",
    "helstrom",
    "maximally_mixed",
    "partial_trace",
    "purify",
    "qubit_cap",
    "random_density_matrix",
    "random_projector",
    "random_pure_state",
    "random_unitary",
    "set_qubit_cap",
    "tensor",
    "trace_distance",
]

STATE_TOL = 1e-9
PURE_QUBIT_CAP = 20

_config = {"dm_cap": 10}


class CapExceeded(ValueError):
    """A state would exceed the configured qubit cap."""


class LayoutError(ValueError):
    """Unknown, duplicate or mismatched registers."""


def get_qubit_cap() -> int:
    return _config["dm_cap"]


def set_qubit_cap(n: int) -> int:
    """Set the density-matrix qubit cap, returning the previous value."""
    if n < 1:
        raise ValueError("qubit cap must be positive")
    old = _config["dm_cap"]
    _config["dm_cap"] = int(n)
    return old


@contextlib.contextmanager
def qubit_cap(n: int):
    old = set_qubit_cap(n)
    try:
        yield
    finally:
        set_qubit_cap(old)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers, each a block of qubits."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(name), int(q)) for name, q in self.registers)
        names = [name for name, _ in regs]
        if len(set(names)) != len(names):
            raise LayoutError(f"duplicate register names in {names}")
        for name, q in regs:
            if not name.isidentifier():
                raise LayoutError(f"register name {name!r} is not an identifier")
            if q < 1:
                raise LayoutError(f"register {name!r} needs at least one qubit")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    @property
    def total_qubits(self) -> int:
        return sum(q for _, q in self.registers)

    @property
    def dim(self) -> int:
        return 2**self.total_qubits

    def __contains__(self, name) -> bool:
        return name in self.names

    def __len__(self) -> int:
        return len(self.registers)

    def size(self, name: str) -> int:
        for reg, q in self.registers:
            if reg == name:
                return q
        raise LayoutError(f"unknown register {name!r}")

    def offset(self, name: str) -> int:
        start = 0
        for reg, q in self.registers:
            if reg == name:
                return start
            start += q
        raise LayoutError(f"unknown register {name!r}")

    def qubit(self, address: str) -> int:
        """Global qubit index of an address ``"REG.i"``."""
        reg, sep, idx = address.rpartition(".")
        if not sep or not idx.isdigit():
            raise LayoutError(f"bad qubit address {address!r}")
        i = int(idx)
        if i >= self.size(reg):
            raise LayoutError(f"qubit {address!r} out of range")
        return self.offset(reg) + i

    def qubits_of(self, name: str) -> list[int]:
        start = self.offset(name)
        return list(range(start, start + self.size(name)))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.registers + other.registers)

    def subset(self, names: Iterable[str]) -> "RegisterLayout":
        wanted = set(names)
        unknown = wanted - set(self.names)
        if unknown:
            raise LayoutError(f"unknown registers {sorted(unknown)}")
        return RegisterLayout(tuple(r for r in self.registers if r[0] in wanted))

    def renamed(self, mapping: Mapping[str, str]) -> "RegisterLayout":
        return RegisterLayout(tuple((mapping.get(n, n), q) for n, q in self.registers))

    def check_cap(self, cap: int | None = None):
        cap = get_qubit_cap() if cap is None else cap
        if self.total_qubits > cap:
            raise CapExceeded(f"{self.total_qubits} qubits exceed the density-matrix cap of {cap}")


def _as_layout(layout) -> RegisterLayout:
    if isinstance(layout, RegisterLayout):
        return layout
    if isinstance(layout, int):
        return RegisterLayout((("q", layout),))
    return RegisterLayout(tuple(layout))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, PSD, unit-trace matrix over a register layout."""

    layout: RegisterLayout
    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        layout.check_cap()
        mat = np.array(self.mat, dtype=np.complex128)
        if mat.shape != (layout.dim, layout.dim):
            raise ValueError(f"matrix shape {mat.shape} does not match {layout.total_qubits} qubits")
        if not np.all(np.isfinite(mat)):
            raise ValueError("density matrix has non-finite entries")
        if np.max(np.abs(mat - mat.conj().T)) > STATE_TOL:
            raise ValueError("density matrix is not Hermitian")
        mat = (mat + mat.conj().T) / 2
        if abs(np.trace(mat).real - 1.0) > STATE_TOL:
            raise ValueError(f"density matrix trace {np.trace(mat).real!r} is not 1")
        try:
            np.linalg.cholesky(mat + STATE_TOL * np.eye(layout.dim))
        except np.linalg.LinAlgError:
            raise ValueError("density matrix is not PSD within tolerance") from None
        mat.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "mat", mat)

    @property
    def n_qubits(self) -> int:
        return self.layout.total_qubits

    def purity(self) -> float:
        return float(np.real(np.vdot(self.mat, self.mat)))

    def eigenvalues(self) -> np.ndarray:
        return eig_hermitian(self.mat)[0]

    def relabel(self, mapping: Mapping[str, str]) -> "DensityMatrix":
        return DensityMatrix(self.layout.renamed(mapping), self.mat)

    def reorder(self, names: Sequence[str]) -> "DensityMatrix":
        """Permute registers into the order ``names`` (all registers required)."""
        if sorted(names) != sorted(self.layout.names):
            raise LayoutError(f"reorder needs exactly the registers {self.layout.names}")
        new = RegisterLayout(tuple((n, self.layout.size(n)) for n in names))
        perm = _qubit_permutation(self.layout, names)
        n = self.n_qubits
        t = self.mat.reshape((2,) * (2 * n))
        t = t.transpose(perm + [p + n for p in perm])
        return DensityMatrix(new, t.reshape(self.mat.shape))

    def evolve(self, unitary: np.ndarray) -> "DensityMatrix":
        return DensityMatrix(self.layout, unitary @ self.mat @ unitary.conj().T)

    def expectation(self, operator: np.ndarray) -> float:
        return float(np.real(np.trace(operator @ self.mat)))


def _qubit_permutation(layout: RegisterLayout, names: Sequence[str]) -> list[int]:
    perm: list[int] = []
    for name in names:
        perm.extend(layout.qubits_of(name))
    return perm


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector over a register layout."""

    layout: RegisterLayout
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        layout = _as_layout(self.layout)
        if layout.total_qubits > PURE_QUBIT_CAP:
            raise CapExceeded(f"{layout.total_qubits} qubits exceed the pure-state cap of {PURE_QUBIT_CAP}")
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape != (layout.dim,):
            raise ValueError(f"amplitude vector of length {amps.size} does not match {layout.total_qubits} qubits")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > STATE_TOL:
            raise ValueError(f"state vector norm {norm!r} is not 1")
        amps.setflags(write=False)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.layout.total_qubits

    def density(self) -> DensityMatrix:
        return DensityMatrix(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def reduced(self, keep: Iterable[str]) -> DensityMatrix:
        """Reduced density matrix on ``keep`` (kept in layout order)."""
        keep_layout = self.layout.subset(keep)
        if len(keep_layout) == 0:
            raise LayoutError("cannot reduce onto an empty set of registers")
        keep_layout.check_cap()
        drop = [n for n in self.layout.names if n not in keep_layout.names]
        order = _qubit_permutation(self.layout, list(keep_layout.names) + drop)
        t = self.amplitudes.reshape((2,) * self.n_qubits).transpose(order)
        m = t.reshape(keep_layout.dim, -1)
        return DensityMatrix(keep_layout, m @ m.conj().T)

    def relabel(self, mapping: Mapping[str, str]) -> "PureState":
        return PureState(self.layout.renamed(mapping), self.amplitudes)

    def probabilities(self, registers: Sequence[str]) -> np.ndarray:
        """Born distribution of a computational-basis measurement of ``registers``.

        Index ``k`` of the result is the big-endian integer of the outcome
        bits, concatenated in the order given.
        """
        order = _qubit_permutation(self.layout, registers)
        rest = [q for q in range(self.n_qubits) if q not in order]
        t = np.abs(self.amplitudes.reshape((2,) * self.n_qubits)) ** 2
        t = t.transpose(order + rest).reshape(2 ** len(order), -1)
        return t.sum(axis=1)

    def overlap(self, other: "PureState") -> complex:
        if self.layout != other.layout:
            raise LayoutError("layout mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class Measurement:
    """Projective measurement given by labelled orthogonal projectors."""

    outcomes: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        outs = tuple((str(label), np.asarray(p, dtype=np.complex128)) for label, p in self.outcomes)
        if not outs:
            raise ValueError("a measurement needs at least one outcome")
        dim = outs[0][1].shape[0]
        total = np.zeros((dim, dim), dtype=np.complex128)
        for label, p in outs:
            if p.shape != (dim, dim):
                raise ValueError(f"projector {label!r} has shape {p.shape}")
            if np.max(np.abs(p - p.conj().T)) > STATE_TOL:
                raise ValueError(f"projector {label!r} is not Hermitian")
            if np.max(np.abs(p @ p - p)) > STATE_TOL:
                raise ValueError(f"projector {label!r} is not idempotent")
            total += p
        if np.max(np.abs(total - np.eye(dim))) > STATE_TOL:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "outcomes", outs)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.outcomes)

    def projector(self, label: str) -> np.ndarray:
        for name, p in self.outcomes:
            if name == label:
                return p
        raise KeyError(label)

    def probability(self, rho: DensityMatrix, label: str) -> float:
        return float(np.real(np.trace(self.projector(label) @ rho.mat)))

    def probabilities(self, rho: DensityMatrix) -> dict[str, float]:
        return {label: self.probability(rho, label) for label in self.labels}


def _check_same_layout(rho: DensityMatrix, sigma: DensityMatrix):
    if rho.layout != sigma.layout:
        raise LayoutError(f"layout mismatch: {rho.layout.registers} vs {sigma.layout.registers}")


def tensor(a, b):
    """Tensor product of two density matrices (or two pure states)."""
    layout = a.layout.concat(b.layout)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, PureState):
        a = a.density()
    if isinstance(b, PureState):
        b = b.density()
    layout.check_cap()
    return DensityMatrix(layout, np.kron(a.mat, b.mat))


def partial_trace(rho: DensityMatrix, drop: Iterable[str]) -> DensityMatrix:
    """Trace out the registers ``drop``."""
    drop = set(drop)
    unknown = drop - set(rho.layout.names)
    if unknown:
        raise LayoutError(f"unknown registers {sorted(unknown)}")
    keep = [n for n in rho.layout.names if n not in drop]
    if not keep:
        raise LayoutError("cannot trace out every register")
    if not drop:
        return rho
    keep_layout = rho.layout.subset(keep)
    drop_names = [n for n in rho.layout.names if n in drop]
    perm = _qubit_permutation(rho.layout, keep + drop_names)
    n = rho.n_qubits
    t = rho.mat.reshape((2,) * (2 * n)).transpose(perm + [p + n for p in perm])
    dk = keep_layout.dim
    dd = rho.layout.dim // dk
    reduced = np.einsum("ijkj->ik", t.reshape(dk, dd, dk, dd))
    return DensityMatrix(keep_layout, reduced)


def _canonical_order(rho: DensityMatrix, sigma: DensityMatrix):
    # fixed argument order makes symmetric quantities bitwise symmetric
    return (sigma, rho) if rho.mat.tobytes() > sigma.mat.tobytes() else (rho, sigma)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of ``rho - sigma``."""
    _check_same_layout(rho, sigma)
    rho, sigma = _canonical_order(rho, sigma)
    w = eig_hermitian(rho.mat - sigma.mat)[0]
    return float(min(1.0, max(0.0, 0.5 * np.abs(w).sum())))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Squared fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Computed as the squared trace norm of ``sqrt(rho) sqrt(sigma)``, whose
    singular values come out of the Hermitian dilation without taking square
    roots of rounding noise.
    """
    _check_same_layout(rho, sigma)
    rho, sigma = _canonical_order(rho, sigma)
    x = psd_sqrt(rho.mat) @ psd_sqrt(sigma.mat)
    d = x.shape[0]
    dilation = np.zeros((2 * d, 2 * d), dtype=np.complex128)
    dilation[:d, d:] = x
    dilation[d:, :d] = x.conj().T
    nuclear = 0.5 * np.abs(eig_hermitian(dilation)[0]).sum()
    return float(min(1.0, max(0.0, nuclear**2)))


HELSTROM_ZERO = 1e-12


def helstrom(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[Measurement, float]:
    """Optimal two-outcome measurement for telling ``rho`` from ``sigma``.

    The ``"rho"`` projector spans the eigenvectors of ``rho - sigma`` with
    strictly positive eigenvalue; null directions go to ``"sigma"``.

    Returns:
        The measurement and its success probability on an equal mixture.
    """
    _check_same_layout(rho, sigma)
    w, v = eig_hermitian(rho.mat - sigma.mat)
    pos = v[:, w > HELSTROM_ZERO]
    p_rho = pos @ pos.conj().T
    p_sigma = np.eye(rho.layout.dim) - p_rho
    td = min(1.0, max(0.0, 0.5 * np.abs(w).sum()))
    return Measurement((("rho", p_rho), ("sigma", p_sigma))), 0.5 * (1.0 + td)


def purify(rho: DensityMatrix, ancilla: str | None = None) -> PureState:
    """Purification of ``rho`` onto a fresh ancilla register of equal width.

    Reducing the result onto the original registers returns ``rho``.
    """
    if ancilla is None:
        ancilla = "anc"
        while ancilla in rho.layout:
            ancilla += "_"
    if ancilla in rho.layout:
        raise LayoutError(f"ancilla name {ancilla!r} already in use")
    layout = rho.layout.concat(RegisterLayout(((ancilla, rho.n_qubits),)))
    w, v = eig_hermitian(rho.mat)
    w = np.where(w > 1e-13, w, 0.0)
    amps = v * np.sqrt(w)
    amps /= np.linalg.norm(amps)
    return PureState(layout, amps.reshape(-1))


def basis_state(layout, values: Mapping[str, int] | None = None) -> PureState:
    """Computational basis state with register ``r`` holding ``values[r]``."""
    layout = _as_layout(layout)
    values = dict(values or {})
    unknown = set(values) - set(layout.names)
    if unknown:
        raise LayoutError(f"unknown registers {sorted(unknown)}")
    index = 0
    for name, q in layout.registers:
        v = int(values.get(name, 0))
        if not 0 <= v < 2**q:
            raise ValueError(f"value {v} does not fit register {name!r} of {q} qubits")
        index = (index << q) | v
    amps = np.zeros(layout.dim, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(layout, amps)


def maximally_mixed(layout) -> DensityMatrix:
    layout = _as_layout(layout)
    return DensityMatrix(layout, np.eye(layout.dim) / layout.dim)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(layout, rng: np.random.Generator) -> PureState:
    layout = _as_layout(layout)
    z = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return PureState(layout, z / np.linalg.norm(z))


def random_density_matrix(layout, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state ``G G^dagger / Tr`` with ``G`` a Ginibre matrix of given rank."""
    layout = _as_layout(layout)
    rank = layout.dim if rank is None else rank
    g = rng.normal(size=(layout.dim, rank)) + 1j * rng.normal(size=(layout.dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(layout, m / np.trace(m).real)


def random_projector(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    if rank is None:
        rank = int(rng.integers(0, dim + 1))
    u = random_unitary(dim, rng)[:, :rank]
    return u @ u.conj().T
