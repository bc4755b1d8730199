"""Bit source, Gray-coded square-QAM mapping, and closed-form BER references.

Gray labeling convention (fixed so results are reproducible):

* a symbol of ``B = log2(M)`` bits splits into first half -> I axis,
  second half -> Q axis;
* each axis maps its bits through a reflected Gray sequence onto
  amplitude levels ordered from most positive to most negative, so the
  all-zeros label lands on the most positive lattice point.

For 4-QAM this gives ``00 -> (+1+1j)/sqrt(2)``, ``01 -> (+1-1j)/sqrt(2)``,
``10 -> (-1+1j)/sqrt(2)``, ``11 -> (-1-1j)/sqrt(2)``.  Constellations are
scaled to unit average symbol energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import FramingError, NumericError, ParameterError


@dataclass(frozen=True)
class QamConstellation:
    order: int
    points: np.ndarray        # (M,) complex, indexed by integer label
    bit_labels: np.ndarray    # (M, B) int, bit_labels[label] = bits MSB-first

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))


def _gray_sequence(m_bits: int) -> list[int]:
    return [i ^ (i >> 1) for i in range(1 << m_bits)]


@lru_cache(maxsize=None)
def qam_constellation(order: int) -> QamConstellation:
    """Unit-energy Gray square-QAM constellation for M in {4, 16, 64, ...}."""
    if order < 4 or (order & (order - 1)) != 0 or int(math.log2(order)) % 2 != 0:
        raise ParameterError(f"QAM order must be a power of 4, got {order}")
    bits_total = int(math.log2(order))
    m_axis = bits_total // 2
    side = 1 << m_axis
    # Gray-ordered axis bits -> levels from most positive to most negative.
    levels = np.arange(side - 1, -side, -2, dtype=float)
    axis_level = np.empty(side)
    for pos, gray in enumerate(_gray_sequence(m_axis)):
        axis_level[gray] = levels[pos]
    scale = math.sqrt(2.0 * np.mean(levels**2))
    points = np.empty(order, dtype=np.complex128)
    bit_labels = np.empty((order, bits_total), dtype=np.int8)
    for label in range(order):
        i_bits = label >> m_axis
        q_bits = label & (side - 1)
        points[label] = (axis_level[i_bits] + 1j * axis_level[q_bits]) / scale
        bit_labels[label] = [(label >> (bits_total - 1 - b)) & 1 for b in range(bits_total)]
    return QamConstellation(order=order, points=points, bit_labels=bit_labels)


def random_bits(n_bits: int, seed: int) -> np.ndarray:
    """Reproducible stream of n_bits values in {0, 1}."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.integers(0, 2, size=n_bits, dtype=np.int8)


def qam_map(bits: np.ndarray, order: int) -> np.ndarray:
    """Map a {0,1} stream onto unit-energy Gray M-QAM symbols."""
    const = qam_constellation(order)
    bits = np.asarray(bits)
    b = const.bits_per_symbol
    if bits.size % b != 0:
        raise FramingError(f"bit count {bits.size} not divisible by log2(M)={b}")
    groups = bits.reshape(-1, b).astype(np.int64)
    weights = 1 << np.arange(b - 1, -1, -1, dtype=np.int64)
    labels = groups @ weights
    return const.points[labels]


def qam_demap_hard(symbols: np.ndarray, order: int) -> np.ndarray:
    """Nearest-point hard decisions back to bits.

    Distance ties break toward the smaller label index.
    """
    labels = nearest_labels(symbols, order)
    return qam_constellation(order).bit_labels[labels].reshape(-1)


def nearest_labels(symbols: np.ndarray, order: int) -> np.ndarray:
    """Integer labels of the nearest constellation points."""
    const = qam_constellation(order)
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size and not np.isfinite(symbols).all():
        raise NumericError("symbols contain non-finite values")
    d2 = np.abs(symbols.reshape(-1, 1) - const.points.reshape(1, -1)) ** 2
    return np.argmin(d2, axis=1)


def nearest_symbols(symbols: np.ndarray, order: int) -> np.ndarray:
    """Project noisy values onto the nearest constellation points."""
    return qam_constellation(order).points[nearest_labels(symbols, order)]


def qfunc(x: float) -> float:
    """Gaussian tail probability Q(x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def theoretical_ber_diversity(ebn0_db: float, diversity_order: int, order: int = 4) -> float:
    """Closed-form BER of Gray 4-QAM over D i.i.d. Rayleigh branches with MRC.

    ``ebn0_db`` is the mean per-branch bit SNR.  With
    ``mu = sqrt(g / (1 + g))`` for linear ``g``, the bit error probability
    is ``(0.5*(1-mu))**D * sum_k C(D-1+k, k) * (0.5*(1+mu))**k`` over
    ``k = 0..D-1``.  Exact for Gray 4-QAM, whose two bits ride independent
    binary antipodal rails.
    """
    if diversity_order < 1:
        raise ParameterError("diversity_order must be >= 1")
    if order != 4:
        raise ParameterError("closed form implemented for 4-QAM only")
    g = 10.0 ** (ebn0_db / 10.0)
    mu = math.sqrt(g / (1.0 + g))
    lo = 0.5 * (1.0 - mu)
    hi = 0.5 * (1.0 + mu)
    total = sum(math.comb(diversity_order - 1 + k, k) * hi**k for k in range(diversity_order))
    return lo**diversity_order * total
