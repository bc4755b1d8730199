"""Tapped-delay-line Rayleigh fading with Doppler, plus calibrated AWGN.

Fading is a sum-of-sinusoids Jakes process per (tx, rx, tap): the complex
gain at time t is ``sqrt(p_tap / N) * sum_n exp(j*(2*pi*fd*cos(a_n)*t +
phi_n))`` with equally spaced arrival angles randomly rotated per tap and
i.i.d. phases.  This evaluates exactly at arbitrary block timestamps (no
filter warm-up) and gives the J0(2*pi*fd*tau) autocorrelation.  Tap delays
round to the nearest sample; per-pair processes are independent.

Noise calibration: Eb is accounted per transmit-antenna branch,

    Eb = sigma_x^2 * (1 + cp/K) * pilot_factor / (K * log2(M)),
    N0 per complex time sample = Eb / 10^(ebn0_db/10),

with ``pilot_factor = (d + p_slots/q) / d`` when one pilot block follows
every d data blocks (pilot slots carry full-power entries, data codewords
carry q symbols over p_slots) and 1 when pilots are disabled.  Under this
convention each of the m_t*m_r fading branches has mean bit SNR equal to
10^(ebn0_db/10) once cp and pilot overheads are removed, so closed-form
AWGN and Rayleigh-diversity references apply without hidden offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import ConfigError, ParameterError, SizeMismatchError

DEFAULT_SINUSOIDS = 64


@dataclass(frozen=True)
class TdlProfile:
    """Normalized power-delay profile; delays in seconds, powers sum to 1."""

    name: str
    tap_delays_s: np.ndarray
    tap_powers: np.ndarray
    faded: bool = True  # False -> deterministic unit taps (pure AWGN link)

    def __post_init__(self) -> None:
        if self.tap_delays_s.shape != self.tap_powers.shape:
            raise ConfigError("tap delay/power lengths differ")
        if self.tap_delays_s[0] != 0.0 or np.any(self.tap_delays_s < 0.0):
            raise ConfigError("tap delays must start at 0 and be non-negative")
        if not math.isclose(float(np.sum(self.tap_powers)), 1.0, rel_tol=1e-12):
            raise ConfigError("tap powers must be normalized to 1")

    @property
    def sigma_h_sq(self) -> float:
        """Per-entry variance of the frequency response (sum of tap powers)."""
        return float(np.sum(self.tap_powers))

    def tap_samples(self, sample_rate_hz: float) -> np.ndarray:
        return np.rint(self.tap_delays_s * sample_rate_hz).astype(int)

    def max_delay_samples(self, sample_rate_hz: float) -> int:
        return int(self.tap_samples(sample_rate_hz).max())


def flat_profile(faded: bool = True) -> TdlProfile:
    """Single zero-delay tap; faded=False gives the fixed unit AWGN tap."""
    name = "flat" if faded else "awgn"
    return TdlProfile(name, np.zeros(1), np.ones(1), faded=faded)


def tdl_profile_load(name: str, delay_spread_s: float, path=None) -> TdlProfile:
    """Load a named TDL profile file, scale delays, normalize powers."""
    norm = name.strip().lower().replace("-", "_")
    if norm == "flat":
        return flat_profile(faded=True)
    if norm == "awgn":
        return flat_profile(faded=False)
    if delay_spread_s <= 0:
        raise ConfigError("delay_spread_s must be positive")
    if path is None:
        ref = resources.files("mimosim.data").joinpath(f"{norm}.txt")
        if not ref.is_file():
            raise ConfigError(f"unknown TDL profile {name!r}")
        text = ref.read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read profile file {path}: {exc}") from exc
    delays, powers_db = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"malformed profile line: {line!r}")
        delays.append(float(parts[0]))
        powers_db.append(float(parts[1]))
    if not delays:
        raise ConfigError("profile file holds no taps")
    delays_s = np.asarray(delays) * delay_spread_s
    powers = 10.0 ** (np.asarray(powers_db) / 10.0)
    powers /= powers.sum()
    return TdlProfile(norm, delays_s, powers)


@dataclass
class ChannelRealization:
    """Discrete CIR per antenna pair, frozen for one OFDM block."""

    cir: np.ndarray  # (m_t, m_r, n_taps_samples)
    timestamp_s: float


class TdlChannelState:
    """Single-owner fading state for one m_t x m_r link.

    ``block_iid=True`` replaces the Doppler process with an independent
    Rayleigh draw per evolve() call (block-fading ensemble); ``evolve``
    must then be called once per block in time order.
    """

    def __init__(
        self,
        profile: TdlProfile,
        sample_rate_hz: float,
        m_t: int,
        m_r: int,
        doppler_hz: float,
        rng_seed,
        n_sinusoids: int = DEFAULT_SINUSOIDS,
        block_iid: bool = False,
    ) -> None:
        if n_sinusoids < 32:
            raise ParameterError("need at least 32 sinusoids per tap")
        if doppler_hz < 0:
            raise ParameterError("doppler_hz must be >= 0")
        self.profile = profile
        self.sample_rate_hz = sample_rate_hz
        self.m_t = m_t
        self.m_r = m_r
        self.doppler_hz = doppler_hz
        self.block_iid = block_iid and profile.faded
        self._tap_idx = profile.tap_samples(sample_rate_hz)
        self._cir_len = int(self._tap_idx.max()) + 1
        self._amps = np.sqrt(profile.tap_powers / n_sinusoids)
        self._rng = np.random.Generator(np.random.PCG64(rng_seed))
        n_taps = len(profile.tap_powers)
        shape = (m_t, m_r, n_taps, n_sinusoids)
        offsets = self._rng.uniform(0.0, 1.0, size=shape[:3])[..., None]
        # Arrival angles over a half period: cos() is injective there, so no
        # two sinusoids share a Doppler frequency (their beat would never
        # time-average out), while the cosine values keep the arcsine
        # distribution that yields the J0 autocorrelation.
        angles = np.pi * (np.arange(n_sinusoids) + offsets) / n_sinusoids
        self._omega = 2.0 * np.pi * doppler_hz * np.cos(angles)
        self._phases = self._rng.uniform(0.0, 2.0 * np.pi, size=shape)
        self._last_t = -math.inf

    @property
    def cir_len(self) -> int:
        return self._cir_len

    def _tap_gains(self, t: float) -> np.ndarray:
        if not self.profile.faded:
            gains = np.zeros((self.m_t, self.m_r, len(self._tap_idx)), dtype=np.complex128)
            gains[...] = np.sqrt(self.profile.tap_powers)
            return gains
        if self.block_iid:
            shape = (self.m_t, self.m_r, len(self._tap_idx))
            draw = self._rng.standard_normal(shape) + 1j * self._rng.standard_normal(shape)
            return draw * np.sqrt(self.profile.tap_powers / 2.0)
        phase = self._omega * t + self._phases
        return self._amps * np.exp(1j * phase).sum(axis=-1)

    def evolve(self, t: float) -> ChannelRealization:
        """CIR at block start time t (channel frozen within the block)."""
        if t < self._last_t:
            raise ParameterError("evolve() times must be non-decreasing")
        self._last_t = t
        gains = self._tap_gains(t)
        cir = np.zeros((self.m_t, self.m_r, self._cir_len), dtype=np.complex128)
        for tap, idx in enumerate(self._tap_idx):
            cir[:, :, idx] += gains[:, :, tap]
        return ChannelRealization(cir=cir, timestamp_s=t)

    def frequency_response(self, real: ChannelRealization, k_subcarriers: int) -> np.ndarray:
        """True H[k] = DFT of the CIR, shaped (K, m_t, m_r)."""
        h = np.fft.fft(real.cir, n=k_subcarriers, axis=-1)
        return np.transpose(h, (2, 0, 1))


def apply_channel(tx: np.ndarray, real: ChannelRealization) -> np.ndarray:
    """Convolve per-antenna streams with the pair CIRs, summed per RX antenna.

    ``tx``: (m_t, n) samples.  Returns (m_r, n); convolution tails beyond
    the block are dropped (they land in the next block's cyclic prefix).
    """
    tx = np.atleast_2d(np.asarray(tx, dtype=np.complex128))
    m_t, m_r, _ = real.cir.shape
    if tx.shape[0] != m_t:
        raise SizeMismatchError(f"tx has {tx.shape[0]} streams, channel expects {m_t}")
    n = tx.shape[1]
    out = np.zeros((m_r, n), dtype=np.complex128)
    for r in range(m_r):
        for m in range(m_t):
            out[r] += np.convolve(tx[m], real.cir[m, r])[:n]
    return out


@dataclass(frozen=True)
class LinkBudget:
    """Eb/N0 accounting knobs for one link configuration."""

    qam_order: int
    k_subcarriers: int
    cp_len: int
    code_symbols: int = 1     # q symbols per codeword
    code_slots: int = 1       # p_slots per codeword
    data_blocks_per_pilot: int | None = None  # None -> no pilot overhead
    sigma_x_sq: float = 1.0

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.qam_order))

    @property
    def pilot_factor(self) -> float:
        if self.data_blocks_per_pilot is None:
            return 1.0
        d = self.data_blocks_per_pilot
        return (d + self.code_slots / self.code_symbols) / d

    @property
    def energy_per_bit(self) -> float:
        cp_factor = 1.0 + self.cp_len / self.k_subcarriers
        return self.sigma_x_sq * cp_factor * self.pilot_factor / (
            self.k_subcarriers * self.bits_per_symbol
        )

    def noise_variance(self, ebn0_db: float) -> float:
        return self.energy_per_bit / (10.0 ** (ebn0_db / 10.0))


def add_awgn(
    samples: np.ndarray, ebn0_db: float, link: LinkBudget, rng: np.random.Generator
) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise at the calibrated N0."""
    samples = np.asarray(samples, dtype=np.complex128)
    n0 = link.noise_variance(ebn0_db)
    sigma = math.sqrt(n0 / 2.0)
    noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    return samples + sigma * noise
