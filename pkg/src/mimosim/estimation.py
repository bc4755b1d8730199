"""Channel estimators: LS, MMSE, FFT smoothing, and PCA/SVD denoising.

Orientation convention: under the block model ``Y[k] = H[k]^T X[k] + Z[k]``
the pilot-matched product ``X Y^H`` returns ``c * conj(H)`` for orthogonal
pilots (``X X^H = c I``).  All estimators here normalize by the pilot Gram
matrix and conjugate, so in the noiseless case the LS estimate equals
``H[k]`` exactly.  The raw un-normalized product is recoverable by
multiplying back, but every consumer in this package wants ``H``.

Operation counting follows the package cost model (see ``numerics``):

* LS is modeled as the pilot-matched product, one (m_t, p) x (p, m_r)
  matmul per subcarrier (the orthogonal-pilot normalization is a scalar
  rescale, not a counted inversion);
* MMSE is charged per subcarrier with both Gram products, one m_t x m_t
  inversion, and the final product;
* the PCA stage is charged one thin-SVD per antenna pair.

Smoothing and the FFT stages carry no charge; the model tracks the terms
that separate the estimators' asymptotic costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .csirs import PilotBlock
from .exceptions import (
    BufferStateError,
    NumericError,
    ParameterError,
    SingularMatrixError,
    SizeMismatchError,
)
from .numerics import OpCount, svd, truncate_rank

SMOOTH_FIXPOINT_TOL = 1e-12


@dataclass
class ChannelEstimate:
    """Per-subcarrier estimates: h[k] has shape (K, m_t, m_r)."""

    h: np.ndarray
    method: str
    op_count: OpCount = field(default_factory=OpCount)

    @property
    def k_subcarriers(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class MmseParams:
    sigma_x_sq: float
    sigma_h_sq: float
    i_blocks: int = 20

    def __post_init__(self) -> None:
        if self.sigma_x_sq <= 0 or self.sigma_h_sq <= 0:
            raise ParameterError("variances must be positive")
        if self.i_blocks < 1:
            raise ParameterError("i_blocks must be >= 1")


@dataclass(frozen=True)
class SmoothingParams:
    max_delay_taps: int  # L: CIR support assumed known in advance

    def __post_init__(self) -> None:
        if self.max_delay_taps < 1:
            raise ParameterError("max_delay_taps must be >= 1")


class CirBuffer:
    """Ring buffer of truncated CIR snapshots per antenna pair.

    Stores up to ``capacity`` realizations of shape (m_t, m_r, length);
    single-owner mutable state.
    """

    def __init__(self, m_t: int, m_r: int, length: int, capacity: int = 20) -> None:
        if min(m_t, m_r, length, capacity) < 1:
            raise ParameterError("buffer dimensions must be positive")
        self.m_t = m_t
        self.m_r = m_r
        self.length = length
        self.capacity = capacity
        self._data = np.zeros((m_t, m_r, length, capacity), dtype=np.complex128)
        self._cursor = 0
        self.count = 0

    def push(self, cir: np.ndarray) -> None:
        """Append the newest realization, evicting the oldest at capacity."""
        cir = np.asarray(cir, dtype=np.complex128)
        if cir.shape != (self.m_t, self.m_r, self.length):
            raise SizeMismatchError(
                f"cir shape {cir.shape} != ({self.m_t}, {self.m_r}, {self.length})"
            )
        self._data[:, :, :, self._cursor] = cir
        self._cursor = (self._cursor + 1) % self.capacity
        self.count = min(self.count + 1, self.capacity)

    def snapshot_matrix(self, m_t: int, m_r: int) -> np.ndarray:
        """(length, count) matrix of stored CIRs, oldest to newest column."""
        if self.count == 0:
            raise BufferStateError("buffer is empty")
        if self.count < self.capacity:
            return self._data[m_t, m_r, :, : self.count]
        order = (np.arange(self.capacity) + self._cursor) % self.capacity
        return self._data[m_t, m_r][:, order]

    def newest(self) -> np.ndarray:
        if self.count == 0:
            raise BufferStateError("buffer is empty")
        return self._data[:, :, :, (self._cursor - 1) % self.capacity]


def buffer_push(buffer: CirBuffer, cir: np.ndarray) -> CirBuffer:
    """Functional alias for CirBuffer.push; returns the updated buffer."""
    buffer.push(cir)
    return buffer


def _check_pilot_obs(x_pilot: PilotBlock, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3:
        raise SizeMismatchError("y must be (K, m_r, p_slots)")
    if y.shape[0] != x_pilot.k_subcarriers or y.shape[2] != x_pilot.x.shape[2]:
        raise SizeMismatchError(
            f"observation shape {y.shape} inconsistent with pilots {x_pilot.x.shape}"
        )
    return y


def estimate_ls(
    x_pilot: PilotBlock, y: np.ndarray, counter: OpCount | None = None
) -> ChannelEstimate:
    """Least-squares estimate ``conj((X X^H)^-1 X Y^H)`` per subcarrier."""
    y = _check_pilot_obs(x_pilot, y)
    x = x_pilot.x
    k, m_t, p = x.shape
    m_r = y.shape[1]
    xyh = np.einsum("kmp,krp->kmr", x, y.conj())
    xxh = np.einsum("kmp,knp->kmn", x, x.conj())
    try:
        g = np.linalg.solve(xxh, xyh)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"rank-deficient pilot block: {exc}") from exc
    if counter is not None:
        counter.add_matmul(m_t, p, m_r, repeats=k)
    return ChannelEstimate(h=g.conj(), method="ls", op_count=counter or OpCount())


def estimate_mmse(
    x_pilot: PilotBlock, y: np.ndarray, params: MmseParams, counter: OpCount | None = None
) -> ChannelEstimate:
    """Regularized estimate per subcarrier,

    ``conj( (X X^H / (m_r s_x^2) + I / (m_r s_h^2))^-1  X Y^H / (m_r s_x^2) )``.

    ``y`` may stack several stored pilot blocks along the slot axis (the
    caller concatenates the freshest ``i_blocks`` observations; the pilot
    block repeats).
    """
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 3 or y.shape[0] != x_pilot.k_subcarriers:
        raise SizeMismatchError("y must be (K, m_r, p_eff)")
    p_eff = y.shape[2]
    p = x_pilot.x.shape[2]
    if p_eff % p != 0:
        raise SizeMismatchError(f"stacked slots {p_eff} not a multiple of pilot slots {p}")
    x = np.tile(x_pilot.x, (1, 1, p_eff // p))
    k, m_t, _ = x.shape
    m_r = y.shape[1]
    scale = 1.0 / (m_r * params.sigma_x_sq)
    bracket = np.einsum("kmp,knp->kmn", x, x.conj()) * scale
    bracket += np.eye(m_t) / (m_r * params.sigma_h_sq)
    rhs = np.einsum("kmp,krp->kmr", x, y.conj()) * scale
    try:
        g = np.linalg.solve(bracket, rhs)
    except np.linalg.LinAlgError as exc:  # guarded by the regularizer; belt and braces
        raise NumericError(f"regularized system became singular: {exc}") from exc
    if counter is not None:
        counter.add_matmul(m_t, p_eff, m_t, repeats=k)
        counter.add_matmul(m_t, p_eff, m_r, repeats=k)
        counter.add_inversion(m_t, repeats=k)
        counter.add_matmul(m_t, m_t, m_r, repeats=k)
    return ChannelEstimate(h=g.conj(), method="mmse", op_count=counter or OpCount())


def smooth_filter(est: ChannelEstimate, params: SmoothingParams) -> ChannelEstimate:
    """Zero impulse-response taps beyond the known maximum delay.

    Per antenna pair: IFFT across subcarriers, zero taps ``n > L - 1``,
    FFT back.  Inputs already supported on the first L taps (truncation
    residual below ``SMOOTH_FIXPOINT_TOL`` relative) are returned
    unchanged, which makes the operator an exact projector under repeated
    application.
    """
    k = est.k_subcarriers
    length = params.max_delay_taps
    if length > k:
        raise ParameterError(f"max_delay_taps {length} exceeds K={k}")
    taps = np.fft.ifft(est.h, axis=0)
    tail = np.abs(taps[length:])
    if tail.size == 0 or np.max(tail) <= SMOOTH_FIXPOINT_TOL * max(np.max(np.abs(taps)), 1e-300):
        return est
    taps[length:] = 0.0
    return ChannelEstimate(
        h=np.fft.fft(taps, axis=0), method=f"{est.method}+smooth", op_count=est.op_count
    )


def pca_denoise(buffer: CirBuffer, lambda_max: int) -> np.ndarray:
    """Rank-limited denoising of the newest buffered CIR per antenna pair.

    Builds the (L, i) matrix of stored realizations, keeps the top
    ``lambda_max`` singular components (no mean-centering: the across-
    realization mean is channel, not offset), and returns the newest
    column of the reconstruction, shaped (m_t, m_r, L).
    """
    if buffer.count == 0:
        raise BufferStateError("buffer is empty")
    if not 1 <= lambda_max <= min(buffer.length, buffer.count):
        raise ParameterError(
            f"lambda_max must be in [1, {min(buffer.length, buffer.count)}], got {lambda_max}"
        )
    out = np.empty((buffer.m_t, buffer.m_r, buffer.length), dtype=np.complex128)
    for m in range(buffer.m_t):
        for r in range(buffer.m_r):
            snap = buffer.snapshot_matrix(m, r)
            rec = truncate_rank(svd(snap), lambda_max)
            out[m, r] = rec[:, -1]
    return out


def estimate_lspca(
    x_pilot: PilotBlock,
    y: np.ndarray,
    buffer: CirBuffer,
    params: SmoothingParams,
    lambda_max: int,
    counter: OpCount | None = None,
) -> ChannelEstimate:
    """LS -> IFFT -> truncate to L -> buffer -> PCA -> FFT pipeline.

    The freshest pilot observation is LS-estimated, its impulse response
    truncated to the known support and pushed into the realization
    buffer; the rank-``lambda_max`` reconstruction of the buffer yields
    the denoised current CIR, transformed back to the frequency domain.
    The counter is charged the per-subcarrier LS matmul plus one modeled
    SVD per antenna pair, so the total scales with m_t * m_r.
    """
    k = x_pilot.k_subcarriers
    length = params.max_delay_taps
    if length > k:
        raise ParameterError(f"max_delay_taps {length} exceeds K={k}")
    ls = estimate_ls(x_pilot, y, counter)
    taps = np.fft.ifft(ls.h, axis=0)[:length]          # (L, m_t, m_r)
    buffer.push(np.transpose(taps, (1, 2, 0)))
    denoised = pca_denoise(buffer, lambda_max)         # (m_t, m_r, L)
    if counter is not None:
        counter.add_svd(buffer.length, buffer.count, repeats=buffer.m_t * buffer.m_r)
    full = np.zeros((k, taps.shape[1], taps.shape[2]), dtype=np.complex128)
    full[:length] = np.transpose(denoised, (2, 0, 1))
    return ChannelEstimate(
        h=np.fft.fft(full, axis=0), method=f"lspca{lambda_max}", op_count=counter or OpCount()
    )


# Golden-dump format: '<I' method-tag length, utf-8 tag, '<III' (K, m_t,
# m_r), then the (K, m_t, m_r) entries in C order as little-endian
# interleaved re/im float64.

def dump_estimate(est: ChannelEstimate, path) -> None:
    import struct

    tag = est.method.encode("utf-8")
    k, m_t, m_r = est.h.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", len(tag)))
        fh.write(tag)
        fh.write(struct.pack("<III", k, m_t, m_r))
        fh.write(np.ascontiguousarray(est.h, dtype="<c16").tobytes())


def load_estimate(path) -> ChannelEstimate:
    import struct

    with open(path, "rb") as fh:
        (tag_len,) = struct.unpack("<I", fh.read(4))
        tag = fh.read(tag_len).decode("utf-8")
        k, m_t, m_r = struct.unpack("<III", fh.read(12))
        payload = fh.read()
    if len(payload) != k * m_t * m_r * 16:
        raise ParameterError("estimate dump payload size disagrees with header")
    data = np.frombuffer(payload, dtype="<c16")
    return ChannelEstimate(h=data.reshape(k, m_t, m_r).astype(np.complex128), method=tag)
