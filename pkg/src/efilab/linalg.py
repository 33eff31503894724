"""Dense Hermitian linear algebra.

The eigensolver is a cyclic Jacobi method in round-robin (parallel) ordering,
compiled with numba. Matrices are first split into their block-diagonal
components, which is exact and pays off because most states built by the
protocol code carry classical flag registers. Blocks wider than
``JACOBI_MAX_DIM`` are handed to LAPACK, the Jacobi sweep being cubic per
sweep with a large constant.
"""

from __future__ import annotations

import math

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

__all__ = [
    "ConvergenceError",
    "HERMITIAN_TOL",
    "JACOBI_MAX_DIM",
    "eig_hermitian",
    "eigvals_hermitian",
    "jacobi_eigh",
    "psd_sqrt",
]

HERMITIAN_TOL = 1e-9
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 100
JACOBI_MAX_DIM = 128


class ConvergenceError(np.linalg.LinAlgError):
    """Raised when the Jacobi sweep cap is hit before convergence."""


@numba.njit(cache=True)
def _round_pairs(m, r):
    # Round r of a chess-tournament schedule on m (even) players: player 0
    # stays put, the other m - 1 rotate. Every pair meets once per m - 1 rounds.
    half = m // 2
    ps = np.empty(half, np.int64)
    qs = np.empty(half, np.int64)
    others = np.empty(m - 1, np.int64)
    for i in range(m - 1):
        others[i] = 1 + (i + r) % (m - 1)
    ps[0] = 0
    qs[0] = others[0]
    for i in range(1, half):
        a = others[i]
        b = others[m - 1 - i]
        ps[i] = min(a, b)
        qs[i] = max(a, b)
    return ps, qs


@numba.njit(cache=True)
def _jacobi_kernel(a, tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    m = n + (n % 2)
    half = m // 2
    cs = np.empty(half)
    s_up = np.empty(half, np.complex128)
    s_dn = np.empty(half, np.complex128)
    active = np.zeros(half, np.bool_)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        total = 0.0
        for i in range(n):
            for j in range(n):
                x = a[i, j].real ** 2 + a[i, j].imag ** 2
                total += x
                if i != j:
                    off += x
        if math.sqrt(off) <= tol * max(1.0, math.sqrt(total)):
            return a, v, sweep
        if sweep == max_sweeps:
            break
        for r in range(m - 1):
            ps, qs = _round_pairs(m, r)
            n_active = 0
            for i in range(half):
                p = ps[i]
                q = qs[i]
                active[i] = False
                if q >= n:
                    continue
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                cs[i] = c
                s_up[i] = s * phase
                s_dn[i] = s * phase.conjugate()
                active[i] = True
                n_active += 1
            if n_active == 0:
                continue
            # A <- A W and V <- V W, row by row so memory access stays contiguous
            for k in range(n):
                for i in range(half):
                    if active[i]:
                        p = ps[i]
                        q = qs[i]
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = cs[i] * akp - s_dn[i] * akq
                        a[k, q] = s_up[i] * akp + cs[i] * akq
                        vkp = v[k, p]
                        vkq = v[k, q]
                        v[k, p] = cs[i] * vkp - s_dn[i] * vkq
                        v[k, q] = s_up[i] * vkp + cs[i] * vkq
            # A <- W^dagger A
            for i in range(half):
                if active[i]:
                    p = ps[i]
                    q = qs[i]
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = cs[i] * apk - s_up[i] * aqk
                        a[q, k] = s_dn[i] * apk + cs[i] * aqk
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    a[p, p] = a[p, p].real
                    a[q, q] = a[q, q].real
    return a, v, -1


def _as_hermitian(h, tol: float) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix has non-finite entries")
    if h.size and np.max(np.abs(h - h.conj().T)) > tol:
        raise ValueError("matrix is not Hermitian")
    return (h + h.conj().T) / 2


def jacobi_eigh(h, *, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    No block splitting and no LAPACK fallback; this is the raw solver.

    Returns:
        Eigenvalues in descending order and the unitary whose columns are the
        matching eigenvectors.

    Raises:
        ValueError: if ``h`` is not square, finite and Hermitian.
        ConvergenceError: if ``max_sweeps`` sweeps do not reach ``tol``.
    """
    h = _as_hermitian(h, HERMITIAN_TOL)
    n = h.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0), dtype=np.complex128)
    if n == 1:
        return h.real.diagonal().copy(), np.ones((1, 1), dtype=np.complex128)
    a, v, sweeps = _jacobi_kernel(h.copy(), float(tol), int(max_sweeps))
    if sweeps < 0:
        raise ConvergenceError(f"Jacobi did not converge within {max_sweeps} sweeps")
    w = a.diagonal().real
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _blocks(h: np.ndarray) -> list[np.ndarray]:
    scale = max(1.0, float(np.max(np.abs(h))))
    pattern = np.abs(h) > 1e-15 * scale
    n_comp, labels = connected_components(csr_matrix(pattern), directed=False)
    return [np.flatnonzero(labels == k) for k in range(n_comp)]


def eig_hermitian(h, *, tol: float = OFFDIAG_TOL, max_sweeps: int = MAX_SWEEPS):
    """Eigendecomposition ``h = V diag(w) V^dagger`` of a Hermitian matrix.

    Args:
        h: square complex matrix, Hermitian to within 1e-9 entrywise.
        tol: relative off-diagonal Frobenius threshold for Jacobi.
        max_sweeps: Jacobi sweep cap.

    Returns:
        ``(w, V)`` with ``w`` real and descending and ``V`` unitary.
    """
    h = _as_hermitian(h, HERMITIAN_TOL)
    n = h.shape[0]
    w = np.zeros(n)
    v = np.zeros((n, n), dtype=np.complex128)
    for idx in _blocks(h):
        sub = h[np.ix_(idx, idx)]
        if len(idx) > JACOBI_MAX_DIM:
            bw, bv = np.linalg.eigh(sub)
        else:
            bw, bv = jacobi_eigh(sub, tol=tol, max_sweeps=max_sweeps)
        w[idx] = bw
        v[np.ix_(idx, idx)] = bv
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def eigvals_hermitian(h) -> np.ndarray:
    return eig_hermitian(h)[0]


def psd_sqrt(h, *, neg_tol: float = 1e-9, zero_tol: float = 1e-13) -> np.ndarray:
    """Square root of a PSD matrix via its spectral decomposition.

    Eigenvalues in ``[-neg_tol, zero_tol]`` are clamped to zero (the upper
    clamp keeps rounding noise out of the square root); eigenvalues below
    ``-neg_tol`` raise ``ValueError``.
    """
    w, v = eig_hermitian(h)
    if w.size and w.min() < -neg_tol:
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    root = np.sqrt(np.where(w > zero_tol, w, 0.0))
    return (v * root) @ v.conj().T
