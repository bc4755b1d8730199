"""Monte-Carlo BER sweep engine.

Grid cells are (doppler, ebn0) pairs split into a fixed number of
independent streams; stream s of a cell draws all of its randomness from
``SeedSequence(master_seed, spawn_key=(fd_idx, s))`` and runs until every
estimator has collected its share of ``min_bit_errors`` or the stream hits
its share of ``max_bits``.  Randomness is shared two ways (common random
numbers):

* all estimators of a cell ride the same channel, noise, and payload
  bits, so estimator gaps are measured against common fading;
* the Eb/N0 axis reuses the same fading/bit/noise draws per (doppler,
  stream) with only the noise scale changed, so each BER-vs-Eb/N0 curve is
  monotone by construction rather than wobbling with the fade ensemble.

Streams are embarrassingly parallel and merge by integer summation, which
makes records bit-identical for any worker count and scheduling order.

Before measurement, each stream replays ``buffer_size`` pilot periods
(pilot blocks only, at their true schedule spacing) so realization buffers
and stored-block histories start from steady state.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel as chan
from . import estimation as est
from . import modem, ofdm, stbc
from .config import ResolvedConfig, SimConfig, resolve
from .exceptions import ConfigError
from .numerics import OpCount


@dataclass
class BerRecord:
    estimator: str
    doppler_hz: float
    ebn0_db: float
    bits_sent: int
    bit_errors: int
    ber: float
    elapsed_s: float
    op_mults: int
    op_adds: int
    capped: bool  # max-bits cap hit before reaching min_bit_errors


@dataclass(frozen=True)
class TheoryRecord:
    diversity_order: int
    ebn0_db: float
    ber: float

    @property
    def estimator(self) -> str:
        return f"theory_d{self.diversity_order}"


class _EstimatorState:
    """Per-estimator mutable pieces riding one simulation stream."""

    def __init__(self, name: str, rc: ResolvedConfig) -> None:
        self.name = name
        self.counter = OpCount()
        self.h_current: np.ndarray | None = None
        self.bits = 0
        self.errors = 0
        self._lambda = int(name[5:]) if name.startswith("lspca") else 0
        self.buffer = (
            est.CirBuffer(rc.m_t, rc.m_r, rc.smoothing_taps, rc.sim.buffer_size)
            if self._lambda
            else None
        )
        self.history: list[np.ndarray] = []

    def update(self, rc: ResolvedConfig, y: np.ndarray, smooth, mmse_params) -> None:
        if self.name == "ls":
            self.h_current = est.estimate_ls(rc.pilot, y, self.counter).h
        elif self.name == "ls_smooth":
            ls = est.estimate_ls(rc.pilot, y, self.counter)
            self.h_current = est.smooth_filter(ls, smooth).h
        elif self.name == "mmse":
            self.history.append(y)
            if len(self.history) > mmse_params.i_blocks:
                self.history.pop(0)
            stacked = np.concatenate(self.history, axis=2)
            mmse = est.estimate_mmse(rc.pilot, stacked, mmse_params, self.counter)
            self.h_current = est.smooth_filter(mmse, smooth).h
        elif self._lambda:
            lam = min(self._lambda, self.buffer.count + 1, rc.smoothing_taps)
            self.h_current = est.estimate_lspca(
                rc.pilot, y, self.buffer, smooth, lam, self.counter
            ).h


class _StreamSim:
    """One stream of one (doppler, ebn0) cell; owns channel and RNG state."""

    def __init__(self, rc: ResolvedConfig, doppler_hz: float, ebn0_db: float, seed_seq) -> None:
        self.rc = rc
        self.ebn0_db = ebn0_db
        cfg = rc.sim
        chan_seed, noise_seed, bits_seed = seed_seq.spawn(3)
        self.channel = chan.TdlChannelState(
            rc.profile,
            rc.ofdm_cfg.sample_rate_hz,
            rc.m_t,
            rc.m_r,
            doppler_hz,
            chan_seed,
            n_sinusoids=cfg.n_sinusoids,
            block_iid=cfg.block_iid,
        )
        self.noise_rng = np.random.Generator(np.random.PCG64(noise_seed))
        self.bits_rng = np.random.Generator(np.random.PCG64(bits_seed))
        self.block_index = 0
        self._block_duration = rc.code.p_slots * rc.ofdm_cfg.block_len / rc.ofdm_cfg.sample_rate_hz
        self._smooth = est.SmoothingParams(rc.smoothing_taps)
        self._mmse_params = est.MmseParams(
            sigma_x_sq=rc.pilot.sigma_x_sq,
            sigma_h_sq=rc.profile.sigma_h_sq,
            i_blocks=cfg.mmse_blocks,
        )
        self._const = modem.qam_constellation(cfg.qam_order)
        self.states = [_EstimatorState(name, rc) for name in cfg.estimators]

    def _transmit(self, freq: np.ndarray, real: chan.ChannelRealization) -> np.ndarray:
        """(K, m_t, P) frequency grid -> received (K, m_r, P) grid."""
        rc = self.rc
        grid = np.transpose(freq, (1, 2, 0))  # (m_t, P, K)
        tx = ofdm.ofdm_modulate(grid, rc.ofdm_cfg).reshape(rc.m_t, -1)
        rx = chan.apply_channel(tx, real)
        rx = chan.add_awgn(rx, self.ebn0_db, rc.link, self.noise_rng)
        rx = rx.reshape(rc.m_r, rc.code.p_slots, rc.ofdm_cfg.block_len)
        return np.transpose(ofdm.ofdm_demodulate(rx, rc.ofdm_cfg), (2, 0, 1))

    def _pilot_block(self, real: chan.ChannelRealization) -> None:
        y = self._transmit(self.rc.pilot.x, real)
        for state in self.states:
            if state.name != "perfect":
                state.update(self.rc, y, self._smooth, self._mmse_params)

    def warmup(self) -> None:
        """Replay pilot periods (pilot blocks only) to fill the histories."""
        rc = self.rc
        if not rc.sim.send_pilots or all(s.name == "perfect" for s in self.states):
            return
        for _ in range(rc.sim.buffer_size):
            t = self.block_index * self._block_duration
            self._pilot_block(self.channel.evolve(t))
            self.block_index += rc.schedule.period

    def step_block(self) -> int:
        """Simulate one MIMO-OFDM block; returns payload bits it carried."""
        rc = self.rc
        cfg = rc.sim
        t = self.block_index * self._block_duration
        real = self.channel.evolve(t)
        is_pilot = cfg.send_pilots and self.block_index % rc.schedule.period == 0
        self.block_index += 1
        if is_pilot:
            self._pilot_block(real)
            return 0
        k, q, b = cfg.k_subcarriers, rc.code.n_symbols, self._const.bits_per_symbol
        bits = self.bits_rng.integers(0, 2, size=k * q * b, dtype=np.int8)
        symbols = modem.qam_map(bits, cfg.qam_order).reshape(k, q)
        freq = stbc.encode_batch(symbols, rc.code)
        y = self._transmit(freq, real)
        sent = bits.reshape(-1, b)
        h_true: np.ndarray | None = None
        for state in self.states:
            if state.name == "perfect":
                if h_true is None:
                    h_true = self.channel.frequency_response(real, k)
                h_use = h_true
            else:
                h_use = state.h_current
            z = stbc.decode_statistics(y, h_use, rc.code)
            labels = modem.nearest_labels(z.reshape(-1), cfg.qam_order)
            decided = self._const.bit_labels[labels]
            state.bits += bits.size
            state.errors += int(np.count_nonzero(decided != sent))
        return int(bits.size)


@dataclass
class _CellResult:
    bits: list[int]
    errors: list[int]
    mults: list[int]
    adds: list[int]
    elapsed: float


def _run_cell(cfg: SimConfig, fd_idx: int, ebn0_idx: int, stream: int) -> _CellResult:
    rc = resolve(cfg)
    seed_seq = np.random.SeedSequence(cfg.master_seed, spawn_key=(fd_idx, stream))
    sim = _StreamSim(rc, cfg.doppler_hz[fd_idx], cfg.ebn0_db[ebn0_idx], seed_seq)
    err_quota = -(-cfg.min_bit_errors // cfg.streams)
    bit_cap = -(-cfg.max_bits // cfg.streams)
    start = time.perf_counter()
    sim.warmup()
    bits = 0
    while bits < bit_cap and any(s.errors < err_quota for s in sim.states):
        bits += sim.step_block()
    return _CellResult(
        bits=[s.bits for s in sim.states],
        errors=[s.errors for s in sim.states],
        mults=[s.counter.real_mults for s in sim.states],
        adds=[s.counter.real_adds for s in sim.states],
        elapsed=time.perf_counter() - start,
    )


def _run_cell_star(args) -> _CellResult:
    return _run_cell(*args)


def run_sweep(cfg: SimConfig, workers: int | None = None) -> list[BerRecord]:
    """Run the full grid; deterministic for a fixed (config, seed).

    ``workers`` overrides ``cfg.workers``; records are identical for any
    worker count.
    """
    cfg.validate()
    if workers is None:
        workers = cfg.workers
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    args = [
        (cfg, fd_idx, ebn0_idx, stream)
        for fd_idx in range(len(cfg.doppler_hz))
        for ebn0_idx in range(len(cfg.ebn0_db))
        for stream in range(cfg.streams)
    ]
    if workers == 1:
        results = [_run_cell(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell_star, args, chunksize=1))
    records: list[BerRecord] = []
    i = 0
    for fd in cfg.doppler_hz:
        for ebn0 in cfg.ebn0_db:
            shard = results[i : i + cfg.streams]
            i += cfg.streams
            for e_idx, name in enumerate(cfg.estimators):
                bits = sum(r.bits[e_idx] for r in shard)
                errors = sum(r.errors[e_idx] for r in shard)
                records.append(
                    BerRecord(
                        estimator=name,
                        doppler_hz=fd,
                        ebn0_db=ebn0,
                        bits_sent=bits,
                        bit_errors=errors,
                        ber=errors / bits if bits else 0.0,
                        elapsed_s=sum(r.elapsed for r in shard),
                        op_mults=sum(r.mults[e_idx] for r in shard),
                        op_adds=sum(r.adds[e_idx] for r in shard),
                        capped=errors < cfg.min_bit_errors,
                    )
                )
    records.sort(key=lambda r: (cfg.estimators.index(r.estimator), r.doppler_hz, r.ebn0_db))
    return records


def theoretical_overlay(cfg: SimConfig) -> list[TheoryRecord]:
    """Closed-form Rayleigh-diversity reference rows over the Eb/N0 grid."""
    rc = resolve(cfg)
    d = rc.theory_diversity_order
    return [
        TheoryRecord(d, ebn0, modem.theoretical_ber_diversity(ebn0, d, cfg.qam_order))
        for ebn0 in cfg.ebn0_db
    ]


def ber_crossing_db(ebn0_grid, bers, target: float) -> float | None:
    """Eb/N0 where a monotone BER curve crosses ``target`` (log-linear)."""
    pts = [(x, b) for x, b in zip(ebn0_grid, bers) if b > 0]
    for (x0, b0), (x1, b1) in zip(pts, pts[1:]):
        if (b0 - target) * (b1 - target) <= 0 and b0 != b1:
            t = (math.log(target) - math.log(b0)) / (math.log(b1) - math.log(b0))
            return x0 + t * (x1 - x0)
    return None
