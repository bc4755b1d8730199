"""Sweep configuration: validated dataclass, TOML loading, named presets."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace

from . import channel, csirs, ofdm, stbc
from .exceptions import ConfigError

_ESTIMATOR_RE = re.compile(r"^(perfect|ls|ls_smooth|mmse|lspca(\d+))$")


@dataclass
class SimConfig:
    """Full description of one Monte-Carlo sweep.

    ``m_t`` is implied by the code; estimator entries are ``perfect``,
    ``ls``, ``ls_smooth``, ``mmse`` (averages ``mmse_blocks`` stored pilot
    blocks, then smoothing) and ``lspca<N>`` (PCA keeping N components).
    """

    code: str = "alamouti"
    m_r: int = 2
    qam_order: int = 4
    k_subcarriers: int = 128
    delta_f_hz: float = 30e3
    profile: str = "tdl_b"
    delay_spread_s: float = 272e-9
    doppler_hz: list[float] = field(default_factory=lambda: [0.5])
    ebn0_db: list[float] = field(default_factory=lambda: [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    estimators: list[str] = field(default_factory=lambda: ["lspca3", "lspca5", "mmse"])
    mmse_blocks: int = 20
    buffer_size: int = 20
    smoothing_taps: int | None = None   # default: cp_len
    cp_len: int | None = None           # default: ceil(1.2 * max tap delay)
    data_blocks_per_pilot: int = 23
    send_pilots: bool = True
    block_iid: bool = False
    n_sinusoids: int = 64
    min_bit_errors: int = 200
    max_bits: int = 20_000_000
    master_seed: int = 20220925
    streams: int = 8
    workers: int = 1
    theory_diversity_order: int | None = None
    zc_root: int = 1

    def validate(self) -> None:
        problems = []
        if self.code not in ("siso", "alamouti", "hr8"):
            problems.append(f"unknown code {self.code!r}")
        if self.m_r < 1:
            problems.append("m_r must be >= 1")
        if self.qam_order < 4 or (self.qam_order & (self.qam_order - 1)) != 0 or int(
            math.log2(self.qam_order)
        ) % 2 != 0:
            problems.append("qam_order must be a power of 4")
        if self.k_subcarriers < 2 or (self.k_subcarriers & (self.k_subcarriers - 1)) != 0:
            problems.append("k_subcarriers must be a power of two")
        if not self.doppler_hz:
            problems.append("doppler_hz list is empty")
        if any(f < 0 for f in self.doppler_hz):
            problems.append("doppler_hz entries must be >= 0")
        if not self.ebn0_db:
            problems.append("ebn0_db list is empty")
        if not self.estimators:
            problems.append("estimators list is empty")
        for name in self.estimators:
            if not _ESTIMATOR_RE.match(name):
                problems.append(f"unknown estimator {name!r}")
        if len(set(self.estimators)) != len(self.estimators):
            problems.append("duplicate estimator entries")
        if self.min_bit_errors < 1 or self.max_bits < 1:
            problems.append("stop rules must be positive")
        if self.streams < 1:
            problems.append("streams must be >= 1")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.mmse_blocks < 1 or self.buffer_size < 1:
            problems.append("mmse_blocks and buffer_size must be >= 1")
        if self.data_blocks_per_pilot < 1:
            problems.append("data_blocks_per_pilot must be >= 1")
        needs_pilots = [n for n in self.estimators if n != "perfect"]
        if needs_pilots and not self.send_pilots:
            problems.append(f"estimators {needs_pilots} need send_pilots=true")
        if problems:
            raise ConfigError("; ".join(problems))
        try:
            resolve(self)
        except ConfigError:
            raise
        except Exception as exc:  # surfaced as config problems before any simulation
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ResolvedConfig:
    """Config with derived objects materialized (profile, code, pilots...)."""

    sim: SimConfig
    code: stbc.StbcCode
    profile: channel.TdlProfile
    ofdm_cfg: ofdm.OfdmConfig
    pilot: csirs.PilotBlock
    schedule: ofdm.FrameSchedule
    link: channel.LinkBudget
    smoothing_taps: int

    @property
    def m_t(self) -> int:
        return self.code.m_t

    @property
    def m_r(self) -> int:
        return self.sim.m_r

    @property
    def theory_diversity_order(self) -> int:
        return self.sim.theory_diversity_order or self.m_t * self.sim.m_r


def resolve(cfg: SimConfig) -> ResolvedConfig:
    code = stbc.get_code(cfg.code)
    prof = channel.tdl_profile_load(cfg.profile, cfg.delay_spread_s)
    sample_rate = cfg.k_subcarriers * cfg.delta_f_hz
    if cfg.cp_len is None:
        cp = ofdm.cp_len_for_max_delay(prof.max_delay_samples(sample_rate))
    else:
        cp = cfg.cp_len
    if prof.max_delay_samples(sample_rate) > cp:
        raise ConfigError(
            f"channel delay spread ({prof.max_delay_samples(sample_rate)} samples) "
            f"exceeds cp_len={cp}"
        )
    ofdm_cfg = ofdm.OfdmConfig(cfg.k_subcarriers, cfg.delta_f_hz, cp)
    pilot = csirs.default_pilot_block(
        code.m_t, code.p_slots, cfg.k_subcarriers, root_u=cfg.zc_root
    )
    smoothing = cfg.smoothing_taps if cfg.smoothing_taps is not None else max(cp, 1)
    if not 1 <= smoothing <= cfg.k_subcarriers:
        raise ConfigError(f"smoothing_taps must be in [1, K], got {smoothing}")
    link = channel.LinkBudget(
        qam_order=cfg.qam_order,
        k_subcarriers=cfg.k_subcarriers,
        cp_len=cp,
        code_symbols=code.n_symbols,
        code_slots=code.p_slots,
        data_blocks_per_pilot=cfg.data_blocks_per_pilot if cfg.send_pilots else None,
    )
    return ResolvedConfig(
        sim=cfg,
        code=code,
        profile=prof,
        ofdm_cfg=ofdm_cfg,
        pilot=pilot,
        schedule=ofdm.FrameSchedule(cfg.data_blocks_per_pilot),
        link=link,
        smoothing_taps=smoothing,
    )


def load_config_file(path, base: SimConfig | None = None) -> SimConfig:
    """Load a TOML config file, overriding fields of ``base`` (or defaults)."""
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - environment dependent
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    known = {f.name for f in fields(SimConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = replace(base, **raw) if base is not None else SimConfig(**raw)
    return cfg


def presets() -> dict[str, SimConfig]:
    """Named configurations; ``desk2x2`` is the default comparison sweep."""
    return {
        "awgn_siso": SimConfig(
            code="siso",
            m_r=1,
            k_subcarriers=64,
            profile="awgn",
            doppler_hz=[0.0],
            ebn0_db=[4.0, 6.0, 8.0],
            estimators=["perfect"],
            send_pilots=False,
            max_bits=8_000_000,
            theory_diversity_order=1,
        ),
        "rayleigh2x2": SimConfig(
            code="alamouti",
            m_r=2,
            k_subcarriers=64,
            profile="flat",
            block_iid=True,
            doppler_hz=[0.0],
            ebn0_db=[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0],
            estimators=["perfect"],
            send_pilots=False,
            max_bits=8_000_000,
        ),
        "desk2x2": SimConfig(
            code="alamouti",
            m_r=2,
            k_subcarriers=128,
            profile="tdl_b",
            doppler_hz=[0.5, 10.0, 20.0],
            ebn0_db=[0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0],
            estimators=["lspca3", "lspca5", "mmse", "perfect"],
            max_bits=20_000_000,
        ),
        "full8x8": SimConfig(
            code="hr8",
            m_r=8,
            k_subcarriers=1024,
            profile="tdl_b",
            doppler_hz=[0.5, 10.0],
            ebn0_db=[0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            estimators=["lspca3", "lspca5", "mmse", "perfect"],
            max_bits=100_000_000,
        ),
    }
