"""Estimator correctness against independent direct-formula oracles."""

import numpy as np
import pytest

from mimosim.csirs import default_pilot_block
from mimosim.estimation import (
    ChannelEstimate,
    CirBuffer,
    MmseParams,
    SmoothingParams,
    buffer_push,
    dump_estimate,
    estimate_lspca,
    estimate_ls,
    estimate_mmse,
    load_estimate,
    pca_denoise,
    smooth_filter,
)
from mimosim.exceptions import (
    BufferStateError,
    ParameterError,
    SingularMatrixError,
    SizeMismatchError,
)
from mimosim.numerics import OpCount, matmul_cost, svd


def random_channel(rng, k, m_t, m_r):
    h = rng.standard_normal((k, m_t, m_r)) + 1j * rng.standard_normal((k, m_t, m_r))
    return h / np.sqrt(2.0)


def observe(pilot, h, noise=None):
    """Y[k] = H[k]^T X[k] (+ noise) for every subcarrier."""
    y = np.einsum("kmr,kmp->krp", h, pilot.x)
    return y if noise is None else y + noise


def channel_from_taps(taps_kmr, k):
    """Frequency response (K, m_t, m_r) of tap array (m_t, m_r, L)."""
    return np.transpose(np.fft.fft(taps_kmr, k, axis=-1), (2, 0, 1))


def ls_direct_oracle(pilot, y):
    """Per-subcarrier explicit-inverse evaluation of the LS formula."""
    out = np.empty((pilot.k_subcarriers, pilot.m_t, y.shape[1]), dtype=complex)
    for k in range(pilot.k_subcarriers):
        x = pilot.x[k]
        out[k] = np.conj(np.linalg.inv(x @ x.conj().T) @ x @ y[k].conj().T)
    return out


def mmse_direct_oracle(pilot, y, params):
    """Per-subcarrier explicit-inverse evaluation of the regularized formula."""
    m_r = y.shape[1]
    reps = y.shape[2] // pilot.x.shape[2]
    out = np.empty((pilot.k_subcarriers, pilot.m_t, m_r), dtype=complex)
    for k in range(pilot.k_subcarriers):
        x = np.tile(pilot.x[k], (1, reps))
        bracket = x @ x.conj().T / (m_r * params.sigma_x_sq)
        bracket = bracket + np.eye(pilot.m_t) / (m_r * params.sigma_h_sq)
        rhs = x @ y[k].conj().T / (m_r * params.sigma_x_sq)
        out[k] = np.conj(np.linalg.inv(bracket) @ rhs)
    return out


class TestLs:
    @pytest.mark.parametrize("m_t,m_r,p", [(1, 1, 1), (2, 2, 2), (8, 8, 8)])
    def test_noiseless_exact_recovery(self, rng, m_t, m_r, p):
        pilot = default_pilot_block(m_t, p, 16)
        h = random_channel(rng, 16, m_t, m_r)
        est = estimate_ls(pilot, observe(pilot, h))
        assert np.max(np.abs(est.h - h)) <= 1e-10 * np.max(np.abs(h))

    def test_zero_observation_gives_zero(self):
        pilot = default_pilot_block(2, 2, 8)
        est = estimate_ls(pilot, np.zeros((8, 2, 2), dtype=complex))
        assert np.all(est.h == 0)

    def test_scalar_pilot_is_mean_of_slot_ratios(self, rng):
        # x = 1 repeated P times: the estimate is the average of y_p / x.
        from mimosim.csirs import PilotBlock

        pilot = PilotBlock(x=np.ones((4, 1, 4), dtype=complex))
        y = rng.standard_normal((4, 1, 4)) + 1j * rng.standard_normal((4, 1, 4))
        est = estimate_ls(pilot, y)
        slot_ratio_mean = np.mean(y, axis=2)  # (K, m_r) with m_r = 1
        assert np.allclose(est.h[:, 0, :], slot_ratio_mean, atol=1e-12)

    def test_matches_direct_inverse_oracle(self, rng):
        pilot = default_pilot_block(4, 4, 8)
        h = random_channel(rng, 8, 4, 3)
        noise = 0.1 * (rng.standard_normal((8, 3, 4)) + 1j * rng.standard_normal((8, 3, 4)))
        y = observe(pilot, h, noise)
        est = estimate_ls(pilot, y)
        assert np.max(np.abs(est.h - ls_direct_oracle(pilot, y))) <= 1e-10

    def test_rank_deficient_pilot_rejected(self):
        from mimosim.csirs import PilotBlock

        pilot = PilotBlock(x=np.zeros((4, 2, 2), dtype=complex))
        with pytest.raises(SingularMatrixError):
            estimate_ls(pilot, np.ones((4, 2, 2), dtype=complex))

    def test_counter_charges_matched_product(self):
        pilot = default_pilot_block(2, 2, 8)
        counter = OpCount()
        estimate_ls(pilot, np.zeros((8, 2, 2), dtype=complex), counter)
        mults, adds = matmul_cost(2, 2, 2)
        assert (counter.real_mults, counter.real_adds) == (8 * mults, 8 * adds)


class TestMmse:
    def test_scalar_contract_example(self):
        from mimosim.csirs import PilotBlock

        pilot = PilotBlock(x=np.ones((1, 1, 1), dtype=complex))
        y = np.full((1, 1, 1), 2.0 + 0.0j)
        params = MmseParams(sigma_x_sq=1.0, sigma_h_sq=1.0, i_blocks=1)
        est = estimate_mmse(pilot, y, params)
        assert np.allclose(est.h, [[[1.0]]])

    def test_large_prior_variance_converges_to_ls(self, rng):
        pilot = default_pilot_block(2, 2, 16)
        h = random_channel(rng, 16, 2, 2)
        noise = 0.05 * (rng.standard_normal((16, 2, 2)) + 1j * rng.standard_normal((16, 2, 2)))
        y = observe(pilot, h, noise)
        ls = estimate_ls(pilot, y)
        mmse = estimate_mmse(pilot, y, MmseParams(1.0, 1e12, 1))
        err = np.max(np.abs(mmse.h - ls.h)) / np.max(np.abs(ls.h))
        assert err <= 1e-6

    def test_error_to_ls_monotone_in_prior_variance(self, rng):
        pilot = default_pilot_block(2, 2, 8)
        h = random_channel(rng, 8, 2, 2)
        y = observe(pilot, h)
        ls = estimate_ls(pilot, y)
        gaps = []
        for sig in (1.0, 10.0, 100.0, 1e4, 1e8):
            mmse = estimate_mmse(pilot, y, MmseParams(1.0, sig, 1))
            gaps.append(float(np.linalg.norm(mmse.h - ls.h)))
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_matches_direct_inverse_oracle(self, rng):
        pilot = default_pilot_block(4, 4, 8)
        h = random_channel(rng, 8, 4, 4)
        noise = 0.2 * (rng.standard_normal((8, 4, 8)) + 1j * rng.standard_normal((8, 4, 8)))
        y = np.concatenate([observe(pilot, h), observe(pilot, h)], axis=2) + noise
        params = MmseParams(sigma_x_sq=1.0, sigma_h_sq=0.7, i_blocks=2)
        est = estimate_mmse(pilot, y, params)
        assert np.max(np.abs(est.h - mmse_direct_oracle(pilot, y, params))) <= 1e-10

    def test_counter_contains_cubic_inversion_term(self):
        pilot = default_pilot_block(8, 8, 16)
        counter = OpCount()
        estimate_mmse(pilot, np.zeros((16, 8, 8), dtype=complex), MmseParams(1.0, 1.0), counter)
        # per subcarrier: 8 m_t^3 = 4096 from the inversion alone
        per_k = counter.real_mults // 16
        inv_mults = 8 * 8**3 + 4 * 8**2 + 3 * 8
        two_gram_and_product = 3 * matmul_cost(8, 8, 8)[0]
        assert per_k == inv_mults + two_gram_and_product
        assert per_k >= 8 * 8**3


class TestSmoothing:
    def test_supported_input_passes_through_exactly(self, rng):
        taps = np.zeros((16, 2, 2), dtype=complex)
        taps[:3] = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
        est = ChannelEstimate(h=np.fft.fft(taps, axis=0), method="ls")
        out = smooth_filter(est, SmoothingParams(4))
        assert out.h is est.h  # projector fixpoint: returned unchanged

    def test_full_length_is_identity(self, rng):
        h = rng.standard_normal((8, 1, 1)) + 1j * rng.standard_normal((8, 1, 1))
        est = ChannelEstimate(h=h, method="ls")
        assert smooth_filter(est, SmoothingParams(8)).h is h

    def test_idempotent_bitwise(self, rng):
        h = rng.standard_normal((64, 2, 2)) + 1j * rng.standard_normal((64, 2, 2))
        est = ChannelEstimate(h=h, method="ls")
        once = smooth_filter(est, SmoothingParams(8))
        twice = smooth_filter(once, SmoothingParams(8))
        assert np.array_equal(once.h, twice.h)

    def test_white_noise_energy_ratio(self, rng):
        k, length = 64, 8
        ratios = []
        for _ in range(100):
            h = rng.standard_normal((k, 1, 1)) + 1j * rng.standard_normal((k, 1, 1))
            out = smooth_filter(ChannelEstimate(h=h, method="ls"), SmoothingParams(length))
            ratios.append(float(np.sum(np.abs(out.h) ** 2) / np.sum(np.abs(h) ** 2)))
        assert abs(np.mean(ratios) - length / k) <= 0.05 * length / k

    def test_rejects_oversized_support(self, rng):
        est = ChannelEstimate(h=np.ones((8, 1, 1), dtype=complex), method="ls")
        with pytest.raises(ParameterError):
            smooth_filter(est, SmoothingParams(9))


class TestCirBuffer:
    def test_push_and_count(self, rng):
        buf = CirBuffer(2, 2, 4, capacity=3)
        assert buf.count == 0
        buffer_push(buf, np.ones((2, 2, 4), dtype=complex))
        assert buf.count == 1

    def test_ring_eviction(self):
        buf = CirBuffer(1, 1, 2, capacity=3)
        for i in range(4):
            buf.push(np.full((1, 1, 2), float(i), dtype=complex))
        assert buf.count == 3
        snap = buf.snapshot_matrix(0, 0)
        assert np.allclose(snap[0], [1.0, 2.0, 3.0])  # oldest (0) evicted

    def test_newest_identified_after_twenty_pushes(self):
        buf = CirBuffer(1, 1, 2, capacity=20)
        for i in range(20):
            buf.push(np.full((1, 1, 2), float(i), dtype=complex))
        assert buf.count == 20
        assert np.allclose(buf.newest(), np.full((1, 1, 2), 19.0))
        assert np.allclose(buf.snapshot_matrix(0, 0)[:, -1], [19.0, 19.0])

    def test_shape_checked(self):
        buf = CirBuffer(1, 1, 2, capacity=2)
        with pytest.raises(SizeMismatchError):
            buf.push(np.ones((1, 1, 3), dtype=complex))

    def test_empty_buffer_errors(self):
        buf = CirBuffer(1, 1, 2, capacity=2)
        with pytest.raises(BufferStateError):
            buf.newest()
        with pytest.raises(BufferStateError):
            pca_denoise(buf, 1)


class TestPcaDenoise:
    def test_identical_noiseless_columns_rank_one(self, rng):
        buf = CirBuffer(1, 2, 5, capacity=10)
        cir = rng.standard_normal((1, 2, 5)) + 1j * rng.standard_normal((1, 2, 5))
        for _ in range(6):
            buf.push(cir)
        out = pca_denoise(buf, 1)
        assert np.max(np.abs(out - cir)) <= 1e-10 * np.max(np.abs(cir))

    def test_full_rank_returns_newest_exactly(self, rng):
        buf = CirBuffer(1, 1, 3, capacity=5)
        last = None
        for _ in range(4):
            last = rng.standard_normal((1, 1, 3)) + 1j * rng.standard_normal((1, 1, 3))
            buf.push(last)
        out = pca_denoise(buf, 3)  # min(L, i) = 3
        assert np.max(np.abs(out - last)) <= 1e-10 * np.max(np.abs(last))

    def test_reconstruction_is_best_rank_approx(self, rng):
        buf = CirBuffer(1, 1, 6, capacity=8)
        for _ in range(8):
            buf.push(rng.standard_normal((1, 1, 6)) + 1j * rng.standard_normal((1, 1, 6)))
        snap = buf.snapshot_matrix(0, 0)
        res = svd(snap)
        lam = 2
        from mimosim.numerics import truncate_rank

        rec = truncate_rank(res, lam)
        residual = np.linalg.norm(snap - rec)
        expect = np.sqrt(np.sum(res.s[lam:] ** 2))
        assert abs(residual - expect) <= 1e-9 * max(expect, 1.0)

    def test_denoises_low_rank_signal_every_trial(self):
        # Rank-3 CIR ensemble + noise at 20 dB SNR: reconstruction error of
        # the newest column never exceeds its input error (100 seeds).
        length, cols, rank = 12, 20, 3
        wins = 0
        for seed in range(100):
            rng = np.random.default_rng(300 + seed)
            basis = rng.standard_normal((length, rank)) + 1j * rng.standard_normal((length, rank))
            buf = CirBuffer(1, 1, length, capacity=cols)
            clean_last = None
            noisy_last = None
            for _ in range(cols):
                coef = rng.standard_normal(rank) + 1j * rng.standard_normal(rank)
                clean = basis @ coef / np.sqrt(2 * rank)
                p_sig = float(np.mean(np.abs(clean) ** 2))
                sigma = np.sqrt(p_sig / 100.0 / 2.0)  # 20 dB SNR
                noisy = clean + sigma * (
                    rng.standard_normal(length) + 1j * rng.standard_normal(length)
                )
                buf.push(noisy.reshape(1, 1, -1))
                clean_last, noisy_last = clean, noisy
            out = pca_denoise(buf, rank)[0, 0]
            if np.linalg.norm(out - clean_last) <= np.linalg.norm(noisy_last - clean_last):
                wins += 1
        assert wins == 100, wins

    def test_lambda_bounds(self, rng):
        buf = CirBuffer(1, 1, 4, capacity=4)
        buf.push(np.ones((1, 1, 4), dtype=complex))
        with pytest.raises(ParameterError):
            pca_denoise(buf, 2)  # only one stored column
        with pytest.raises(ParameterError):
            pca_denoise(buf, 0)


class TestLspcaPipeline:
    def test_noiseless_static_channel_recovered(self, rng):
        k, m_t, m_r, length = 32, 2, 2, 4
        pilot = default_pilot_block(m_t, 2, k)
        taps = np.zeros((m_t, m_r, length), dtype=complex)
        taps[:, :, :3] = rng.standard_normal((m_t, m_r, 3)) + 1j * rng.standard_normal(
            (m_t, m_r, 3)
        )
        h = channel_from_taps(taps, k)
        buf = CirBuffer(m_t, m_r, length, capacity=20)
        for lam in (1, 2):
            est = estimate_lspca(pilot, observe(pilot, h), buf, SmoothingParams(length), lam)
            assert np.max(np.abs(est.h - h)) <= 1e-8 * np.max(np.abs(h)), lam

    def test_cold_buffer_equals_ls_plus_smoothing(self, rng):
        k, m_t, m_r, length = 32, 2, 2, 4
        pilot = default_pilot_block(m_t, 2, k)
        h = random_channel(rng, k, m_t, m_r)
        noise = 0.1 * (rng.standard_normal((k, m_r, 2)) + 1j * rng.standard_normal((k, m_r, 2)))
        y = observe(pilot, h, noise)
        buf = CirBuffer(m_t, m_r, length, capacity=20)
        pipe = estimate_lspca(pilot, y, buf, SmoothingParams(length), 1)
        smoothed = smooth_filter(estimate_ls(pilot, y), SmoothingParams(length))
        assert np.max(np.abs(pipe.h - smoothed.h)) <= 1e-10

    @pytest.mark.parametrize("n", [8, 16])
    def test_op_count_scales_with_antenna_product(self, rng, n):
        # doubling both antenna counts multiplies the count by ~4
        totals = {}
        for m in (n, 2 * n):
            k = 64
            pilot = default_pilot_block(m, m, k)
            h = random_channel(rng, k, m, m)
            buf = CirBuffer(m, m, 16, capacity=20)
            y = observe(pilot, h)
            for _ in range(4):  # warm past the cold-start rank limit
                estimate_lspca(pilot, y, buf, SmoothingParams(16), min(3, buf.count + 1))
            counter = OpCount()
            for _ in range(20):
                estimate_lspca(pilot, y, buf, SmoothingParams(16), 3, counter)
            totals[m] = counter.real_mults
        ratio = totals[2 * n] / totals[n]
        assert abs(ratio - 4.0) <= 0.15 * 4.0, ratio

    def test_mse_ordering_ls_smooth_pca(self, rng):
        # Static channel at 10 dB pilot SNR: raw LS > smoothed > PCA.
        k, m_t, m_r, length = 64, 2, 2, 6
        pilot = default_pilot_block(m_t, 2, k)
        taps = np.zeros((m_t, m_r, length), dtype=complex)
        taps[:, :, :2] = (rng.standard_normal((m_t, m_r, 2))
                          + 1j * rng.standard_normal((m_t, m_r, 2))) / 2.0
        h = channel_from_taps(taps, k)
        sigma = np.sqrt(10 ** (-10 / 10) / 2.0)
        buf = CirBuffer(m_t, m_r, length, capacity=20)
        mse = {"ls": 0.0, "smooth": 0.0, "pca": 0.0}
        blocks = 220
        for _ in range(blocks):
            noise = sigma * (rng.standard_normal((k, m_r, 2))
                             + 1j * rng.standard_normal((k, m_r, 2)))
            y = observe(pilot, h, noise)
            ls = estimate_ls(pilot, y)
            sm = smooth_filter(ls, SmoothingParams(length))
            lam = min(1, buf.count + 1)
            pca = estimate_lspca(pilot, y, buf, SmoothingParams(length), lam)
            mse["ls"] += float(np.mean(np.abs(ls.h - h) ** 2))
            mse["smooth"] += float(np.mean(np.abs(sm.h - h) ** 2))
            mse["pca"] += float(np.mean(np.abs(pca.h - h) ** 2))
        assert mse["ls"] > 2.0 * mse["smooth"], mse
        assert mse["smooth"] > 2.0 * mse["pca"], mse


class TestEstimateDump:
    def test_roundtrip_and_layout(self, tmp_path, rng):
        h = rng.standard_normal((4, 2, 3)) + 1j * rng.standard_normal((4, 2, 3))
        est = ChannelEstimate(h=h, method="lspca3")
        path = tmp_path / "estimate.bin"
        dump_estimate(est, path)
        raw = path.read_bytes()
        import struct

        tag_len = struct.unpack("<I", raw[:4])[0]
        assert raw[4 : 4 + tag_len] == b"lspca3"
        k, m_t, m_r = struct.unpack("<III", raw[4 + tag_len : 16 + tag_len])
        assert (k, m_t, m_r) == (4, 2, 3)
        assert len(raw) == 16 + tag_len + 4 * 2 * 3 * 16
        back = load_estimate(path)
        assert back.method == "lspca3"
        assert np.array_equal(back.h, h)
