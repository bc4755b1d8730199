"""Space-time block codes and their per-subcarrier ML decoder.

A code is described by its linear representation
``X(s) = sum_q s_q * A_q + conj(s_q) * B_q`` with constant matrices
``A_q, B_q`` of shape (m_t, p_slots).  Every shipped code is a complex
orthogonal design: ``X(s) @ X(s)^H == energy_factor * sum_q |s_q|^2 * I``
for all symbol draws, which makes the joint ML search over symbol tuples
decompose into independent per-symbol nearest-point decisions on the
matched-filter statistic

    z_q = (conj(alpha_q) + beta_q) / (energy_factor * ||H||_F^2),
    alpha_q = tr(Y^H H^T A_q),   beta_q = tr(Y^H H^T B_q).

Shipped designs:

* ``siso()``      -- trivial 1-antenna code, one symbol per slot;
* ``alamouti()``  -- 2 antennas, 2 symbols over 2 slots, rate 1;
* ``hr8()``       -- 8 antennas, 8 symbols over 16 slots, rate 1/2, built
  from the octonion left-multiplication (Hurwitz-Radon) matrices.  No
  rate-1 complex orthogonal design exists beyond 2 antennas, so rate 1/2
  is the honest 8-antenna construction that keeps exact orthogonality and
  decoupled ML.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import FramingError, SizeMismatchError
from .modem import qam_constellation

ORTHOGONALITY_TOL = 1e-10


@dataclass(frozen=True)
class StbcCode:
    """Linear-representation description of an orthogonal design."""

    name: str
    m_t: int
    p_slots: int
    a_mats: np.ndarray  # (q, m_t, p_slots)
    b_mats: np.ndarray  # (q, m_t, p_slots)
    energy_factor: int = 1  # X X^H == energy_factor * sum|s_q|^2 * I

    @property
    def n_symbols(self) -> int:
        return self.a_mats.shape[0]

    @property
    def rate(self) -> float:
        return self.n_symbols / self.p_slots


@dataclass
class StbcCodeword:
    matrix: np.ndarray          # (m_t, p_slots)
    source_symbols: np.ndarray  # (q,)


def siso() -> StbcCode:
    a = np.ones((1, 1, 1), dtype=np.complex128)
    b = np.zeros((1, 1, 1), dtype=np.complex128)
    return StbcCode("siso", m_t=1, p_slots=1, a_mats=a, b_mats=b)


def alamouti() -> StbcCode:
    """2x2 rate-1 design: X = [[s1, -conj(s2)], [s2, conj(s1)]]."""
    a = np.zeros((2, 2, 2), dtype=np.complex128)
    b = np.zeros((2, 2, 2), dtype=np.complex128)
    a[0, 0, 0] = 1.0
    b[0, 1, 1] = 1.0
    a[1, 1, 0] = 1.0
    b[1, 0, 1] = -1.0
    return StbcCode("alamouti", m_t=2, p_slots=2, a_mats=a, b_mats=b)


# Octonion structure constants (e_i e_{i+1} = e_{i+3}, indices mod 7): for
# each triple (a, b, c), e_a e_b = e_c cyclically.  This Fano-plane
# orientation makes the left-multiplication matrices a Hurwitz-Radon
# family (pairwise anticommuting orthogonal matrices).
_OCTONION_TRIPLES = ((1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3))


@lru_cache(maxsize=1)
def _octonion_left_mult() -> np.ndarray:
    """L[q] with (e_q * e_j) = sum_i L[q][i, j] e_i, q = 0..7."""
    mult = np.zeros((8, 8, 8))  # mult[a, b, c]: coefficient of e_c in e_a e_b
    for j in range(8):
        mult[0, j, j] = 1.0
        mult[j, 0, j] = 1.0
    for j in range(1, 8):
        mult[j, j, 0] = -1.0
    for a, b, c in _OCTONION_TRIPLES:
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            mult[x, y, z] = 1.0
            mult[y, x, z] = -1.0
    mats = np.transpose(mult, (0, 2, 1))  # L[q][i, j] = mult[q, j, i]
    for q in range(8):
        for r in range(8):
            anti = mats[q].T @ mats[r] + mats[r].T @ mats[q]
            expect = 2.0 * np.eye(8) if q == r else np.zeros((8, 8))
            assert np.array_equal(anti, expect), "octonion table is inconsistent"
    return mats


def hr8() -> StbcCode:
    """8-antenna rate-1/2 design: X = [L(s), L(conj(s))] over 16 slots."""
    l_mats = _octonion_left_mult().astype(np.complex128)
    a = np.zeros((8, 8, 16), dtype=np.complex128)
    b = np.zeros((8, 8, 16), dtype=np.complex128)
    a[:, :, :8] = l_mats
    b[:, :, 8:] = l_mats
    return StbcCode("hr8", m_t=8, p_slots=16, a_mats=a, b_mats=b, energy_factor=2)


_CODES = {"siso": siso, "alamouti": alamouti, "hr8": hr8}


def get_code(name: str) -> StbcCode:
    try:
        return _CODES[name]()
    except KeyError:
        raise KeyError(f"unknown STBC code {name!r}; available: {sorted(_CODES)}") from None


def stbc_encode(symbols: np.ndarray, code: StbcCode) -> StbcCodeword:
    """Build one codeword matrix from exactly q constellation symbols."""
    symbols = np.asarray(symbols, dtype=np.complex128).reshape(-1)
    if symbols.shape[0] != code.n_symbols:
        raise FramingError(f"{code.name} needs {code.n_symbols} symbols, got {symbols.shape[0]}")
    matrix = np.einsum("q,qmp->mp", symbols, code.a_mats) + np.einsum(
        "q,qmp->mp", symbols.conj(), code.b_mats
    )
    return StbcCodeword(matrix=matrix, source_symbols=symbols)


def encode_batch(symbols: np.ndarray, code: StbcCode) -> np.ndarray:
    """Vectorized encoder: (..., q) symbols -> (..., m_t, p_slots) codewords."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape[-1] != code.n_symbols:
        raise FramingError(f"{code.name} needs {code.n_symbols} symbols per codeword")
    return np.einsum("...q,qmp->...mp", symbols, code.a_mats) + np.einsum(
        "...q,qmp->...mp", symbols.conj(), code.b_mats
    )


def decode_statistics(y: np.ndarray, h_est: np.ndarray, code: StbcCode) -> np.ndarray:
    """Per-symbol matched-filter statistics for batched codewords.

    ``y``: (..., m_r, p_slots) received blocks, ``h_est``: (..., m_t, m_r)
    channel estimates.  Returns (..., q) statistics whose nearest
    constellation points are the exact joint-ML decisions for orthogonal
    designs.  Zero-energy channel entries yield statistic 0 (flagged by
    the scalar decoder).
    """
    hta = np.einsum("...mr,qmp->...qrp", h_est, code.a_mats)
    htb = np.einsum("...mr,qmp->...qrp", h_est, code.b_mats)
    alpha = np.einsum("...rp,...qrp->...q", y.conj(), hta)
    beta = np.einsum("...rp,...qrp->...q", y.conj(), htb)
    gain = code.energy_factor * np.sum(np.abs(h_est) ** 2, axis=(-2, -1))
    gain = np.where(gain > 0.0, gain, 1.0)
    return (alpha.conj() + beta) / gain[..., None]


def stbc_ml_decode(
    received: np.ndarray, h_est: np.ndarray, code: StbcCode, order: int
) -> np.ndarray:
    """ML-decode one received block into q constellation symbols.

    Computes ``argmin_s || Y - H^T X(s) ||_F^2`` through the decoupled
    matched-filter statistic (equal to the joint search for orthogonal
    designs).  A zero-energy channel estimate is flagged with a warning
    and decided as the lowest-label constellation point.
    """
    received = np.asarray(received, dtype=np.complex128)
    h_est = np.asarray(h_est, dtype=np.complex128)
    if received.shape != (h_est.shape[1], code.p_slots):
        raise SizeMismatchError(
            f"received shape {received.shape} inconsistent with (m_r={h_est.shape[1]}, "
            f"p={code.p_slots})"
        )
    if h_est.shape[0] != code.m_t:
        raise SizeMismatchError(f"h_est rows {h_est.shape[0]} != m_t {code.m_t}")
    const = qam_constellation(order)
    if not np.any(np.abs(h_est) > 0.0):
        warnings.warn("zero-energy channel estimate; returning tie-break symbols", RuntimeWarning)
        return np.full(code.n_symbols, const.points[0])
    z = decode_statistics(received, h_est, code)
    d2 = np.abs(z.reshape(-1, 1) - const.points.reshape(1, -1)) ** 2
    return const.points[np.argmin(d2, axis=1)]
