import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_generator, random_pair
from efilab.bundled import bell_generator, single_qubit_generator
from efilab.circuits import CircuitSyntaxError, GateCircuit, run_generator
from efilab.commitment import (
    CommitmentScheme,
    binding_parameter,
    collapse_deviation,
    commit,
    from_efi,
    hiding_advantage,
    honest_binding_norm,
    message,
    optimal_binding_attack,
    parse_scheme,
    sampled_binding_attacks,
    serialize_scheme,
    verify_opening,
)
from efilab.efi import EfiPair, farness
from efilab.qstate import LayoutError, RegisterLayout, fidelity, random_pure_state, random_unitary

ZERO, ONE, PLUS = single_qubit_generator(), single_qubit_generator("X"), single_qubit_generator("H")
BINDING = from_efi(EfiPair(ZERO, ONE))
HIDING = from_efi(EfiPair(ZERO, ZERO))
MIDDLE = from_efi(EfiPair(ZERO, PLUS))

PLUS_PROJ = np.full((2, 2), 0.5)


def brute_force_binding(s, rng, n=400, aux_dim=1):
    """Best norm over random attack unitaries, built from dense matrices."""
    psi0 = commit(s, 0).amplitudes
    psi1 = commit(s, 1).amplitudes
    dc = 2 ** s.layout.size("C")
    dr = 2 ** s.layout.size("R")
    best = 0.0
    aux = np.zeros(aux_dim)
    aux[0] = 1
    for _ in range(n):
        u = random_unitary(dr * aux_dim, rng)
        chi = np.kron(np.eye(dc), u) @ np.kron(psi0, aux)
        proj = np.kron(psi1.conj(), np.eye(aux_dim)) @ chi
        best = max(best, np.linalg.norm(proj))
    return best


class TestConstruction:
    def test_layout(self):
        assert MIDDLE.layout.registers == (("C", 1), ("R", 1))

    def test_ancillas_become_opening(self):
        s = from_efi(EfiPair(bell_generator(), bell_generator()))
        assert s.layout.registers == (("C", 1), ("R", 1))

    def test_padding(self, rng):
        p = EfiPair(random_generator(rng, 1, 2), random_generator(rng, 1, 1))
        s = from_efi(p)
        assert s.layout.size("R") == 2
        for b, g in enumerate((p.gen0, p.gen1)):
            np.testing.assert_allclose(message(s, b).mat, run_generator(g).mat, atol=1e-9)

    def test_shape_checks(self):
        bad = GateCircuit(RegisterLayout.of(("C", 1), ("X", 1)), (), (), ("C",))
        with pytest.raises(LayoutError):
            CommitmentScheme(bad, bad)

    def test_messages_equal_generated_states(self, rng):
        p = random_pair(rng, 2, 1)
        s = from_efi(p)
        for b, xi in enumerate(p.states()):
            assert np.max(np.abs(message(s, b).mat - xi.mat)) <= 1e-9


class TestExtremes:
    def test_binding_extreme(self):
        assert hiding_advantage(BINDING) == pytest.approx(1)
        assert binding_parameter(BINDING) == pytest.approx(0, abs=1e-9)

    def test_hiding_extreme(self):
        assert hiding_advantage(HIDING) == pytest.approx(0, abs=1e-12)
        assert binding_parameter(HIDING) == pytest.approx(1)

    def test_middle(self):
        assert hiding_advantage(MIDDLE) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        # sqrt of the squared fidelity 1/2
        assert binding_parameter(MIDDLE) == pytest.approx(math.sqrt(0.5), abs=1e-9)


class TestCommitVerify:
    def test_commit_one(self):
        np.testing.assert_allclose(np.abs(commit(BINDING, 1).amplitudes), [0, 0, 1, 0])

    def test_deterministic(self):
        assert np.array_equal(commit(MIDDLE, 1).amplitudes, commit(MIDDLE, 1).amplitudes)

    def test_completeness(self):
        for s in (BINDING, HIDING, MIDDLE):
            for b in (0, 1):
                assert verify_opening(s, b, commit(s, b)) == pytest.approx(1, abs=1e-9)

    def test_orthogonal_rejects(self):
        assert verify_opening(BINDING, 1, commit(BINDING, 0)) == pytest.approx(0, abs=1e-12)

    def test_overlap(self):
        oracle = abs(np.vdot(commit(MIDDLE, 1).amplitudes, commit(MIDDLE, 0).amplitudes)) ** 2
        assert verify_opening(MIDDLE, 1, commit(MIDDLE, 0)) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.5)

    def test_layout_mismatch(self):
        with pytest.raises(LayoutError):
            verify_opening(MIDDLE, 0, random_pure_state(RegisterLayout.of(("C", 2)), np.random.default_rng(0)))


class TestAttacks:
    def test_uhlmann_attack_attains_parameter(self, rng):
        for s in (MIDDLE, from_efi(random_pair(rng, 1, 2))):
            assert honest_binding_norm(s, optimal_binding_attack(s)) == pytest.approx(binding_parameter(s), abs=1e-9)

    def test_brute_force_approaches_from_below(self, rng):
        best = brute_force_binding(MIDDLE, rng)
        assert best <= binding_parameter(MIDDLE) + 1e-9
        assert best >= binding_parameter(MIDDLE) - 0.05

    def test_identity_attack(self):
        # doing nothing in R prompts the overlap <psi_1|psi_0>
        norm = honest_binding_norm(MIDDLE, np.eye(2))
        assert norm == pytest.approx(abs(np.vdot(commit(MIDDLE, 1).amplitudes, commit(MIDDLE, 0).amplitudes)))

    def test_sampled_never_beat_parameter(self, rng):
        s = from_efi(random_pair(rng))
        assert sampled_binding_attacks(s, rng, 200).max() <= binding_parameter(s) + 1e-9

    def test_sampled_attacks_seeded(self):
        a = sampled_binding_attacks(MIDDLE, np.random.default_rng(42), 20)
        b = sampled_binding_attacks(MIDDLE, np.random.default_rng(42), 20)
        assert np.array_equal(a, b)

    def test_attack_dimension_check(self):
        with pytest.raises(LayoutError):
            honest_binding_norm(MIDDLE, np.eye(3))


def collapse_oracle(s, alphas, projector_on_s):
    """Dense version for one committed bit with the projector on the branch register."""
    v = [np.kron(np.eye(2)[b], commit(s, b).amplitudes) for b in (0, 1)]
    p = np.kron(projector_on_s, np.eye(v[0].size // 2))
    joint = p @ (alphas[0] * v[0] + alphas[1] * v[1])
    separate = sum(abs(a) ** 2 * np.linalg.norm(p @ x) ** 2 for a, x in zip(alphas, v))
    return abs(np.linalg.norm(joint) ** 2 - separate)


class TestCollapse:
    alphas = [1 / math.sqrt(2), 1 / math.sqrt(2)]

    def test_binding_scheme(self):
        assert collapse_deviation(BINDING, self.alphas, PLUS_PROJ, ["S"]) <= 1e-9

    def test_single_term(self):
        assert collapse_deviation(HIDING, [1, 0], PLUS_PROJ, ["S"]) <= 1e-12

    def test_non_binding_scheme(self):
        assert collapse_deviation(HIDING, self.alphas, PLUS_PROJ, ["S"]) == pytest.approx(0.5, abs=1e-12)

    def test_matches_dense_oracle(self, rng):
        s = from_efi(random_pair(rng))
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        a /= np.linalg.norm(a)
        assert collapse_deviation(s, a, PLUS_PROJ, ["S"]) == pytest.approx(collapse_oracle(s, a, PLUS_PROJ), abs=1e-12)

    def test_projector_on_opening_and_aux(self, rng):
        aux = np.array([[1, 0], [0, 1]], dtype=complex)
        proj = np.kron(PLUS_PROJ, PLUS_PROJ)
        d = collapse_deviation(BINDING, [0.6, 0.8], proj, ["R1", "Z"], aux)
        assert d <= 1e-9

    def test_two_committed_bits(self, rng):
        alphas = np.full(4, 0.5)
        proj = np.full((4, 4), 0.25)
        assert collapse_deviation(BINDING, alphas, proj, ["S"]) <= 1e-9

    def test_refuses_commitment_register(self):
        with pytest.raises(LayoutError):
            collapse_deviation(BINDING, self.alphas, PLUS_PROJ, ["C1"])


class TestFiles:
    def test_round_trip(self, rng):
        s = from_efi(random_pair(rng))
        text = serialize_scheme(s)
        again = parse_scheme(text)
        assert serialize_scheme(again) == text
        assert binding_parameter(again) == binding_parameter(s)

    def test_missing_key(self):
        with pytest.raises(CircuitSyntaxError):
            parse_scheme('{"q0": {}, "q1": {}}')


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_reduction_preserves_statistics(seed, n_out):
    p = random_pair(np.random.default_rng(seed), n_out)
    s = from_efi(p)
    rho, sigma = p.states()
    assert abs(hiding_advantage(s) - farness(p)) <= 1e-9
    assert abs(binding_parameter(s) - math.sqrt(fidelity(rho, sigma))) <= 1e-9
    assert binding_parameter(s) ** 2 + hiding_advantage(s) ** 2 <= 1 + 1e-9


@given(st.integers(0, 2**32 - 1))
def test_completeness_property(seed):
    s = from_efi(random_pair(np.random.default_rng(seed)))
    for b in (0, 1):
        assert abs(verify_opening(s, b, commit(s, b)) - 1) <= 1e-9


@given(st.integers(0, 2**32 - 1))
def test_perfect_binding_never_collapses(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=2) + 1j * rng.normal(size=2)
    proj_vec = rng.normal(size=2) + 1j * rng.normal(size=2)
    proj_vec /= np.linalg.norm(proj_vec)
    assert collapse_deviation(BINDING, a / np.linalg.norm(a), np.outer(proj_vec, proj_vec.conj()), ["S"]) <= 1e-9
