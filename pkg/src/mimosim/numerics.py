"""Complex linear-algebra kernels with an operation-count cost model.

Transform convention used throughout the package: the forward FFT is the
unnormalized sum, the inverse FFT carries the 1/N factor (the OFDM
transmitter uses the inverse transform).  ``fft(fft(x), inverse=True)``
returns ``x`` to machine precision.

Operation counting is a *model*, decoupled from the algorithms actually
executed: a counter is charged with closed-form real-operation counts for
each kernel invocation, regardless of how the result is computed
internally.  The model counts, for complex operands:

* product of an (m, n) by an (n, p) matrix: ``4*n*m*p`` real
  multiplications and ``(3*n - 1)*m*p`` real additions;
* inversion of an (n, n) matrix: ``8n^3 + 4n^2 + 3n`` multiplications and
  ``25/3 n^3 - 4n^2 - n/3`` additions (always an integer);
* thin SVD of an (m, n) matrix with p = min(m, n), q = max(m, n):
  ``4*(2*q*p^2 + 11*p^3)`` multiplications and ``3*(2*q*p^2 + 11*p^3)``
  additions (a standard bidiagonalization-based flop estimate scaled to
  real operations per complex multiply-accumulate).

All functions are pure; counters are plain accumulators owned by one
caller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NumericError, ParameterError, SingularMatrixError, SizeMismatchError

CONDITION_LIMIT = 1e12


def matmul_cost(m: int, n: int, p: int) -> tuple[int, int]:
    """Modeled real-op cost of an (m, n) x (n, p) complex product."""
    return 4 * n * m * p, (3 * n - 1) * m * p


def inversion_cost(n: int) -> tuple[int, int]:
    """Modeled real-op cost of inverting an (n, n) complex matrix."""
    mults = 8 * n**3 + 4 * n**2 + 3 * n
    adds = (25 * n**3 - n) // 3 - 4 * n**2
    return mults, adds


def svd_cost(m: int, n: int) -> tuple[int, int]:
    """Modeled real-op cost of a thin SVD of an (m, n) complex matrix."""
    p, q = min(m, n), max(m, n)
    flops = 2 * q * p**2 + 11 * p**3
    return 4 * flops, 3 * flops


@dataclass
class OpCount:
    """Tally of modeled real multiplications and additions.

    Counts are additive under composition: the count of a pipeline is the
    sum of the counts of its stages, in exact integer arithmetic.
    """

    real_mults: int = 0
    real_adds: int = 0

    def add(self, mults: int, adds: int) -> None:
        self.real_mults += mults
        self.real_adds += adds

    def add_matmul(self, m: int, n: int, p: int, repeats: int = 1) -> None:
        mults, adds = matmul_cost(m, n, p)
        self.add(mults * repeats, adds * repeats)

    def add_inversion(self, n: int, repeats: int = 1) -> None:
        mults, adds = inversion_cost(n)
        self.add(mults * repeats, adds * repeats)

    def add_svd(self, m: int, n: int, repeats: int = 1) -> None:
        mults, adds = svd_cost(m, n)
        self.add(mults * repeats, adds * repeats)

    def merge(self, other: "OpCount") -> None:
        self.add(other.real_mults, other.real_adds)

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.real_mults + other.real_mults, self.real_adds + other.real_adds)


@dataclass
class SvdResult:
    """Thin SVD factors: ``u @ diag(s) @ v.conj().T`` reconstructs the input.

    ``s`` is sorted non-increasing; ``u`` and ``v`` have orthonormal
    columns.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    _input_shape: tuple[int, int] = field(default=(0, 0), repr=False)


def _as_matrix(a: np.ndarray, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise SizeMismatchError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.size == 0:
        raise SizeMismatchError(f"{name} must be non-empty")
    if not np.isfinite(a).all():
        raise NumericError(f"{name} contains non-finite entries")
    return a


def fft(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Radix-2 DFT of a 1-D vector; inverse carries the 1/N factor."""
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 1:
        raise SizeMismatchError(f"fft expects a 1-D vector, got ndim={x.ndim}")
    n = x.shape[0]
    if n == 0 or (n & (n - 1)) != 0:
        raise SizeMismatchError(f"fft length must be a power of two, got {n}")
    return np.fft.ifft(x) if inverse else np.fft.fft(x)


def matmul(a: np.ndarray, b: np.ndarray, counter: OpCount | None = None) -> np.ndarray:
    """Complex matrix product, charging the counter per the cost model."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise SizeMismatchError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    if counter is not None:
        counter.add_matmul(a.shape[0], a.shape[1], b.shape[1])
    return a @ b


def solve_regularized(a: np.ndarray, b: np.ndarray, counter: OpCount | None = None) -> np.ndarray:
    """Return ``inv(a) @ b`` via a stable solve (no explicit inverse).

    ``a`` must be square and well conditioned (condition number below
    1e12); it arises here as a Hermitian positive definite regularized
    Gram matrix.  The counter is charged the modeled inversion cost plus
    one matmul for the product, independent of the factorization used.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise SizeMismatchError(f"solve_regularized needs a square matrix, got {a.shape}")
    if b.shape[0] != n:
        raise SizeMismatchError(f"right-hand side rows {b.shape[0]} != {n}")
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularMatrixError(f"condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}")
    if counter is not None:
        counter.add_inversion(n)
        counter.add_matmul(n, n, b.shape[1])
    try:
        return np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by cond check
        raise SingularMatrixError(str(exc)) from exc


def svd(a: np.ndarray) -> SvdResult:
    """Economy-size SVD with singular values sorted non-increasing."""
    a = _as_matrix(a, "a")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return SvdResult(u=u, s=s, v=vh.conj().T, _input_shape=a.shape)


def truncate_rank(res: SvdResult, lambda_max: int) -> np.ndarray:
    """Best Frobenius rank-``lambda_max`` reconstruction from an SVD."""
    k = len(res.s)
    if not 1 <= lambda_max <= k:
        raise ParameterError(f"lambda_max must be in [1, {k}], got {lambda_max}")
    u = res.u[:, :lambda_max]
    v = res.v[:, :lambda_max]
    return (u * res.s[:lambda_max]) @ v.conj().T
