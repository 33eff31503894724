import numpy as np
import pytest
from hypothesis import given, strategies as st

from efilab.linalg import (
    JACOBI_MAX_DIM,
    ConvergenceError,
    eig_hermitian,
    eigvals_hermitian,
    jacobi_eigh,
    psd_sqrt,
)


def random_hermitian(n, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


def test_already_diagonal():
    w, v = eig_hermitian(np.diag([1.0, 0.0]))
    np.testing.assert_allclose(w, [1, 0])
    np.testing.assert_allclose(np.abs(v), np.eye(2))


def test_pauli_x_eigenvalues():
    # roots of lambda^2 - 1
    w, _ = eig_hermitian(np.array([[0, 1], [1, 0]], dtype=complex))
    np.testing.assert_allclose(w, [1, -1], atol=1e-14)


def test_descending_order_and_real():
    w = eigvals_hermitian(np.diag([0.2, 3.0, -1.0]))
    assert w.dtype == np.float64
    np.testing.assert_allclose(w, [3.0, 0.2, -1.0])


@pytest.mark.parametrize("n", [2, 3, 8, 16, 64])
def test_reconstruction_random(n, rng):
    h = random_hermitian(n, rng)
    w, v = eig_hermitian(h)
    assert np.max(np.abs((v * w) @ v.conj().T - h)) <= 1e-9
    assert np.max(np.abs(v.conj().T @ v - np.eye(n))) <= 1e-9


def test_jacobi_matches_lapack_eigenvalues(rng):
    h = random_hermitian(12, rng)
    w, _ = jacobi_eigh(h)
    np.testing.assert_allclose(w, np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-10)


def test_block_split_handles_direct_sum(rng):
    a, b = random_hermitian(3, rng), random_hermitian(4, rng)
    h = np.zeros((7, 7), dtype=complex)
    h[:3, :3], h[3:, 3:] = a, b
    perm = rng.permutation(7)
    h = h[np.ix_(perm, perm)]
    w, v = eig_hermitian(h)
    assert np.max(np.abs((v * w) @ v.conj().T - h)) <= 1e-9
    expected = np.sort(np.concatenate([np.linalg.eigvalsh(a), np.linalg.eigvalsh(b)]))[::-1]
    np.testing.assert_allclose(w, expected, atol=1e-10)


def test_large_block_falls_back(rng):
    n = JACOBI_MAX_DIM + 8
    h = random_hermitian(n, rng)
    w, v = eig_hermitian(h)
    assert np.max(np.abs((v * w) @ v.conj().T - h)) <= 1e-9


def test_repeated_eigenvalues(rng):
    u = np.linalg.qr(rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)))[0]
    h = u @ np.diag([2, 2, 2, -1, -1, 0]) @ u.conj().T
    w, v = eig_hermitian(h)
    np.testing.assert_allclose(w, [2, 2, 2, 0, -1, -1], atol=1e-10)
    assert np.max(np.abs(v.conj().T @ v - np.eye(6))) <= 1e-9


def test_non_hermitian_rejected():
    with pytest.raises(ValueError, match="Hermitian"):
        eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_non_square_rejected():
    with pytest.raises(ValueError):
        eig_hermitian(np.zeros((2, 3)))


def test_sweep_cap_raises(rng):
    with pytest.raises(ConvergenceError):
        jacobi_eigh(random_hermitian(10, rng), max_sweeps=1)


def test_psd_sqrt_squares_back(rng):
    g = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    p = g @ g.conj().T
    r = psd_sqrt(p)
    np.testing.assert_allclose(r @ r, p, atol=1e-9)


def test_psd_sqrt_rejects_negative():
    with pytest.raises(ValueError, match="PSD"):
        psd_sqrt(np.diag([1.0, -0.1]))


@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_reconstruction_property(n, seed):
    h = random_hermitian(n, np.random.default_rng(seed))
    w, v = eig_hermitian(h)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.max(np.abs((v * w) @ v.conj().T - h)) <= 1e-9
