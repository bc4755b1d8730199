"""Shared independent oracles for the test suite.

These implementations deliberately avoid the library code paths (and the
LAPACK routines backing them) so each check compares two separate routes
to the same quantity.
"""

import math

import numpy as np
import pytest


def naive_dft(x, inverse=False):
    """Direct O(N^2) DFT sum; forward unnormalized, inverse carries 1/N."""
    x = np.asarray(x, dtype=complex)
    n = x.shape[0]
    sign = 1j if inverse else -1j
    k = np.arange(n)
    kernel = np.exp(sign * 2.0 * np.pi * np.outer(k, k) / n)
    out = kernel @ x
    return out / n if inverse else out


def naive_matmul(a, b):
    """Entry-by-entry triple-loop complex product."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    m, n = a.shape
    n2, p = b.shape
    assert n == n2
    out = np.zeros((m, p), dtype=complex)
    for i in range(m):
        for j in range(p):
            acc = 0.0 + 0.0j
            for k in range(n):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc
    return out


def jacobi_eigvalsh(a, sweeps=100, tol=1e-14):
    """Cyclic Jacobi eigenvalues of a Hermitian matrix, sorted descending.

    Each rotation zeros one off-diagonal pair: with gamma = a[p, q] the
    plane is first dephased by diag(1, e^{-i arg gamma}) and then rotated
    by the real Jacobi angle, a unitary similarity throughout.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(float(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2)))
        if off <= tol * max(1.0, float(np.linalg.norm(np.diag(a)))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                gamma = a[p, q]
                if abs(gamma) == 0.0:
                    continue
                phase = gamma / abs(gamma)
                alpha = a[p, p].real
                beta = a[q, q].real
                theta = 0.5 * math.atan2(2.0 * abs(gamma), alpha - beta)
                c, s = math.cos(theta), math.sin(theta)
                u = np.array([[c, -s], [s * np.conj(phase), c * np.conj(phase)]], dtype=complex)
                a[:, [p, q]] = a[:, [p, q]] @ u
                a[[p, q], :] = u.conj().T @ a[[p, q], :]
    return np.sort(np.real(np.diag(a)))[::-1]


def bessel_j0(x):
    """J0 via the integral form, trapezoid on a fine grid (1e-9 accurate)."""
    theta = np.linspace(0.0, np.pi, 4001)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.trapezoid(np.cos(np.outer(x, np.sin(theta))), theta, axis=1) / np.pi
    return vals if vals.size > 1 else float(vals[0])


def qfunc(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20220925)
