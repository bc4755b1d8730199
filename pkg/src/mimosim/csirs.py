"""Zadoff-Chu reference-signal generation and per-antenna pilot blocks.

Antenna ports share one ZC root sequence across subcarriers and are
separated by orthogonal per-slot phase patterns (row m of the pilot block
is the ZC value times ``exp(-2j*pi*m*p / P)`` at slot p).  Sequence-index
cyclic shifts cannot deliver per-subcarrier orthogonality over a short
slot window, so slot-domain separation is used instead; the resulting
``X[k] @ X[k]^H == P * I`` identity is exact and checked at construction.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ParameterError

PILOT_ORTHOGONALITY_TOL = 1e-10
_FIXTURE_HEADER = struct.Struct("<III")


@dataclass(frozen=True)
class ZcConfig:
    root_u: int
    n_zc: int

    def __post_init__(self) -> None:
        if self.n_zc < 3 or self.n_zc % 2 == 0:
            raise ParameterError(f"n_zc must be odd and >= 3, got {self.n_zc}")
        if not 0 < self.root_u < self.n_zc:
            raise ParameterError(f"root must satisfy 0 < u < n_zc, got u={self.root_u}")
        if math.gcd(self.root_u, self.n_zc) != 1:
            raise ParameterError(f"root u={self.root_u} not coprime with n_zc={self.n_zc}")


def zc_generate(cfg: ZcConfig) -> np.ndarray:
    """z[n] = exp(-j*pi*u*n*(n+1)/n_zc); constant modulus 1."""
    n = np.arange(cfg.n_zc)
    phase = -np.pi * cfg.root_u * n * (n + 1) / cfg.n_zc
    return np.exp(1j * phase)


def largest_odd_not_above(k: int) -> int:
    return k if k % 2 == 1 else k - 1


@dataclass(frozen=True)
class PilotBlock:
    """Known pilot matrices X[k] of shape (K, m_t, p_slots)."""

    x: np.ndarray
    sigma_x_sq: float = 1.0

    @property
    def k_subcarriers(self) -> int:
        return self.x.shape[0]

    @property
    def m_t(self) -> int:
        return self.x.shape[1]

    @property
    def p_slots(self) -> int:
        return self.x.shape[2]


def build_pilot_block(zc: np.ndarray, m_t: int, p_slots: int, k_subcarriers: int) -> PilotBlock:
    """Arrange a ZC sequence into orthogonal per-antenna pilot matrices."""
    zc = np.asarray(zc, dtype=np.complex128)
    if m_t > p_slots or m_t > zc.shape[0]:
        raise ParameterError(
            f"antenna patterns collide: m_t={m_t} needs p_slots>={m_t} and n_zc>={m_t}"
        )
    reps = -(-k_subcarriers // zc.shape[0])
    base = np.tile(zc, reps)[:k_subcarriers]
    m = np.arange(m_t).reshape(-1, 1)
    p = np.arange(p_slots).reshape(1, -1)
    slot_phases = np.exp(-2j * np.pi * m * p / p_slots)
    x = base[:, None, None] * slot_phases[None, :, :]
    gram = np.einsum("kmp,knp->kmn", x, x.conj())
    target = p_slots * np.eye(m_t)
    residual = np.max(np.abs(gram - target))
    if residual > PILOT_ORTHOGONALITY_TOL:
        raise NumericError(f"pilot orthogonality residual {residual:.3e} too large")
    return PilotBlock(x=x)


def default_pilot_block(m_t: int, p_slots: int, k_subcarriers: int, root_u: int = 1) -> PilotBlock:
    """Pilot block with the pinned defaults: largest odd n_zc <= K, root u."""
    n_zc = largest_odd_not_above(k_subcarriers)
    cfg = ZcConfig(root_u=root_u, n_zc=n_zc)
    return build_pilot_block(zc_generate(cfg), m_t, p_slots, k_subcarriers)


def export_pilot_block(block: PilotBlock, path) -> None:
    """Write the fixture format: '<III' header (m_t, p_slots, K) then the
    (K, m_t, p_slots) entries in C order as little-endian interleaved
    re/im float64."""
    with open(path, "wb") as fh:
        fh.write(_FIXTURE_HEADER.pack(block.m_t, block.p_slots, block.k_subcarriers))
        fh.write(np.ascontiguousarray(block.x, dtype="<c16").tobytes())


def load_pilot_block(path) -> PilotBlock:
    with open(path, "rb") as fh:
        m_t, p_slots, k = _FIXTURE_HEADER.unpack(fh.read(_FIXTURE_HEADER.size))
        payload = fh.read()
    expected = k * m_t * p_slots
    if len(payload) != expected * 16:
        raise ParameterError(f"fixture payload is {len(payload)} bytes, header implies "
                             f"{expected * 16}")
    data = np.frombuffer(payload, dtype="<c16")
    return PilotBlock(x=data.reshape(k, m_t, p_slots).astype(np.complex128))
