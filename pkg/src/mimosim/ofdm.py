"""OFDM modulation with cyclic prefix, and the pilot/data frame schedule.

The transmitter applies the inverse transform (1/K normalization) and
prepends the last ``cp_len`` body samples; the receiver strips the prefix
and applies the forward transform, so modulate -> demodulate is the
identity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exceptions import FramingError, ParameterError


@dataclass(frozen=True)
class OfdmConfig:
    k_subcarriers: int
    delta_f_hz: float
    cp_len: int

    def __post_init__(self) -> None:
        k = self.k_subcarriers
        if k < 2 or (k & (k - 1)) != 0:
            raise ParameterError(f"k_subcarriers must be a power of two, got {k}")
        if not 0 <= self.cp_len < k:
            raise ParameterError(f"cp_len must be in [0, K), got {self.cp_len}")
        if self.delta_f_hz <= 0:
            raise ParameterError("delta_f_hz must be positive")

    @property
    def sample_rate_hz(self) -> float:
        return self.k_subcarriers * self.delta_f_hz

    @property
    def block_len(self) -> int:
        return self.k_subcarriers + self.cp_len


def cp_len_for_max_delay(max_delay_samples: int) -> int:
    """Cyclic prefix sized to 120% of the channel delay spread in samples."""
    return int(math.ceil(1.2 * max_delay_samples))


def ofdm_modulate(freq_symbols: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """IFFT + cyclic prefix; accepts (..., K) and returns (..., K + cp)."""
    freq_symbols = np.asarray(freq_symbols, dtype=np.complex128)
    if freq_symbols.shape[-1] != cfg.k_subcarriers:
        raise FramingError(
            f"expected {cfg.k_subcarriers} subcarrier symbols, got {freq_symbols.shape[-1]}"
        )
    body = np.fft.ifft(freq_symbols, axis=-1)
    if cfg.cp_len == 0:
        return body
    return np.concatenate([body[..., -cfg.cp_len:], body], axis=-1)


def ofdm_demodulate(samples: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Strip cyclic prefix and FFT; accepts (..., K + cp) and returns (..., K)."""
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.shape[-1] != cfg.block_len:
        raise FramingError(f"expected block of {cfg.block_len} samples, got {samples.shape[-1]}")
    return np.fft.fft(samples[..., cfg.cp_len:], axis=-1)


class BlockKind(enum.Enum):
    CSIRS = "CSIRS"
    DATA = "DATA"


@dataclass(frozen=True)
class FrameSchedule:
    data_blocks_per_pilot: int = 23

    def __post_init__(self) -> None:
        if self.data_blocks_per_pilot < 1:
            raise ParameterError("data_blocks_per_pilot must be >= 1")

    @property
    def pilot_ratio(self) -> Fraction:
        return Fraction(1, self.data_blocks_per_pilot + 1)

    @property
    def period(self) -> int:
        return self.data_blocks_per_pilot + 1


def schedule_frames(n_blocks: int, sched: FrameSchedule) -> list[BlockKind]:
    """Tag blocks; index 0 is a pilot so estimation precedes data decoding."""
    if n_blocks < 1:
        raise ParameterError("n_blocks must be >= 1")
    return [BlockKind.CSIRS if i % sched.period == 0 else BlockKind.DATA for i in range(n_blocks)]
