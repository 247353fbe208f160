import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from avfusion.audio import (AudioClip, PatchEmbedParams, Spectrogram,
                            frame_signal, log_mel_3d, mel_filterbank,
                            patch_embed, patch_embed_backward, read_wav,
                            speech_spectrogram, write_wav)
from avfusion.checks import check_patch_embed
from avfusion.errors import (ClipTooShort, CorruptHeader, DimMismatch,
                             GridTooFineForInput, MissingForwardCache,
                             UnsupportedFormat)
from avfusion.rng import Rng

SR = 16000


def tone(freq=440.0, seconds=1.0, amplitude=0.5, sr=SR):
    t = np.arange(int(sr * seconds)) / sr
    return AudioClip(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=sr)


class TestWav:
    def test_silence_round_trip(self, tmp_path):
        path = tmp_path / "silence.wav"
        write_wav(path, AudioClip(samples=np.zeros(SR), sample_rate=SR))
        clip = read_wav(path)
        assert clip.sample_rate == SR
        assert len(clip) == SR
        assert np.all(clip.samples == 0.0)

    def test_full_scale_square_wave_stays_in_range(self, tmp_path):
        path = tmp_path / "square.wav"
        square = np.where(np.arange(1000) % 2 == 0, 32767, -32767).astype("<i2")
        payload = square.tobytes()
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE")
            fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, SR, SR * 2, 2, 16))
            fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
        clip = read_wav(path)
        assert np.min(clip.samples) >= -1.0
        assert np.max(clip.samples) < 1.0

    def test_sine_round_trip_error_below_one_lsb(self, tmp_path):
        path = tmp_path / "sine.wav"
        clip = tone()
        write_wav(path, clip)
        back = read_wav(path)
        assert np.max(np.abs(back.samples - clip.samples)) < 1.0 / 32768.0

    def test_stereo_rejected(self, tmp_path):
        path = tmp_path / "stereo.wav"
        payload = b"\x00\x00" * 400
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE")
            fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 2, SR, SR * 4, 4, 16))
            fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
        with pytest.raises(UnsupportedFormat):
            read_wav(path)

    def test_float_format_rejected(self, tmp_path):
        path = tmp_path / "float.wav"
        payload = b"\x00" * 64
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE")
            fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 3, 1, SR, SR * 4, 4, 32))
            fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
        with pytest.raises(UnsupportedFormat):
            read_wav(path)

    def test_corrupt_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.wav"
        path.write_bytes(b"NOTWAVDATA")
        with pytest.raises(CorruptHeader):
            read_wav(path)

    def test_truncated_data_chunk_rejected(self, tmp_path):
        path = tmp_path / "trunc.wav"
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 1000) + b"WAVE")
            fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, SR, SR * 2, 2, 16))
            fh.write(b"data" + struct.pack("<I", 5000) + b"\x00" * 10)
        with pytest.raises(CorruptHeader):
            read_wav(path)

    def test_unsupported_rate_rejected(self, tmp_path):
        path = tmp_path / "rate.wav"
        payload = b"\x00\x00" * 100
        with open(path, "wb") as fh:
            fh.write(b"RIFF" + struct.pack("<I", 36 + len(payload)) + b"WAVE")
            fh.write(b"fmt " + struct.pack("<IHHIIHH", 16, 1, 1, 11025, 22050, 2, 16))
            fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
        with pytest.raises(UnsupportedFormat):
            read_wav(path)


class TestFraming:
    def test_one_second_gives_97_frames(self):
        frames = frame_signal(tone())
        assert frames.shape == (97, 640)

    def test_exactly_one_window(self):
        clip = AudioClip(samples=np.ones(640) * 0.5, sample_rate=SR)
        assert frame_signal(clip).shape[0] == 1

    def test_too_short_raises(self):
        clip = AudioClip(samples=np.zeros(639), sample_rate=SR)
        with pytest.raises(ClipTooShort):
            frame_signal(clip)

    def test_constant_signal_first_frame_is_the_window(self):
        # oracle: periodic Hamming formula 0.54 - 0.46 cos(2 pi t / win)
        clip = AudioClip(samples=np.ones(SR), sample_rate=SR)
        frames = frame_signal(clip)
        t = np.arange(640)
        oracle = 0.54 - 0.46 * np.cos(2 * np.pi * t / 640)
        assert np.max(np.abs(frames[0] - oracle)) < 1e-12

    @given(st.integers(min_value=640, max_value=20000),
           st.integers(min_value=2, max_value=80),
           st.integers(min_value=1, max_value=40))
    @settings(max_examples=40, deadline=None)
    def test_frame_count_formula(self, n, window_ms, hop_ms):
        clip = AudioClip(samples=np.zeros(n), sample_rate=SR)
        win = int(round(SR * window_ms / 1000.0))
        hop = int(round(SR * hop_ms / 1000.0))
        if n < win:
            with pytest.raises(ClipTooShort):
                frame_signal(clip, window_ms, hop_ms)
            return
        frames = frame_signal(clip, window_ms, hop_ms)
        # oracle: count frames with an explicit loop
        count, start = 0, 0
        while start + win <= n:
            count += 1
            start += hop
        assert frames.shape == (count, win)


class TestSpeechSpectrogram:
    def test_shape_one_second(self):
        spec = speech_spectrogram(tone())
        assert (spec.frames, spec.bins) == (97, 200)

    def test_silence_is_all_floor(self):
        spec = speech_spectrogram(AudioClip(samples=np.zeros(SR), sample_rate=SR))
        assert np.all(spec.values == np.log(1e-10))

    def test_pure_1khz_peaks_at_bin_64(self):
        # oracle: bin = 1000 * 1024 / 16000 = 64
        spec = speech_spectrogram(tone(freq=1000.0))
        assert np.all(np.argmax(spec.values, axis=1) == 64)

    def test_translation_by_one_hop_shifts_frames(self):
        rng = Rng(31)
        samples = np.clip(rng.normal_vec(SR, 0.0, 0.2), -1.0, 1.0)
        base = speech_spectrogram(AudioClip(samples=samples, sample_rate=SR))
        shifted = speech_spectrogram(AudioClip(samples=samples[160:], sample_rate=SR))
        assert np.max(np.abs(shifted.values[:-1] - base.values[1:shifted.frames])) < 1e-9


class TestMel:
    def test_cube_shape(self):
        cube = log_mel_3d(tone(), bands=40)
        assert cube.values.shape == (40, 97, 3)

    def test_constant_input_has_zero_deltas(self):
        clip = AudioClip(samples=np.full(SR, 0.25), sample_rate=SR)
        cube = log_mel_3d(clip, bands=40)
        assert np.all(cube.delta == 0.0)
        assert np.all(cube.delta_delta == 0.0)

    def test_filterbank_rows_nonnegative_peaked_and_overlapping(self):
        bank = mel_filterbank(40, 1024, SR)
        assert np.all(bank >= 0.0)
        for b in range(40):
            row = bank[b]
            peak = np.argmax(row)
            # unimodal: nondecreasing up to the peak, nonincreasing after
            assert np.all(np.diff(row[:peak + 1]) >= -1e-12)
            assert np.all(np.diff(row[peak:]) <= 1e-12)
        for b in range(39):
            assert np.any((bank[b] > 0) & (bank[b + 1] > 0))

    def test_filterbank_on_all_ones_gives_row_sums(self):
        bank = mel_filterbank(24, 1024, SR)
        row_sums = bank.sum(axis=1)
        assert np.all(row_sums > 0.0)
        applied = bank @ np.ones(513)
        assert np.max(np.abs(applied - row_sums) / row_sums) < 1e-12

    def test_band_count_below_minimum_rejected(self):
        with pytest.raises(ValueError):
            mel_filterbank(9, 1024, SR)

    def test_mel_scale_against_direct_formula(self):
        # oracle: filter centers follow 2595 log10(1 + f/700) spacing
        bank = mel_filterbank(40, 1024, SR)
        mel_max = 2595.0 * np.log10(1.0 + 8000.0 / 700.0)
        centers_hz = 700.0 * (10.0 ** (np.linspace(0, mel_max, 42)[1:-1] / 2595.0) - 1.0)
        centers_bin = centers_hz * 1024 / SR
        for b in (0, 10, 39):
            peak = np.argmax(bank[b])
            assert abs(peak - centers_bin[b]) <= 1.0


class TestPatchEmbed:
    def test_grid_shape(self):
        rng = Rng(32)
        spec = Spectrogram(values=rng.normal_mat(10, 9))
        params = PatchEmbedParams.init(2, 3, 5, 3, 5, rng)
        fs, _ = patch_embed(spec, params)
        assert (fs.n, fs.dim) == (6, 5)

    def test_identity_projection_returns_flattened_patches(self):
        rng = Rng(33)
        spec = Spectrogram(values=rng.normal_mat(4, 6))
        pixels = 2 * 2  # grid 2x3 over 4x6 -> 2x2 patches
        params = PatchEmbedParams(grid_h=2, grid_w=3, channels=pixels,
                                  projection=np.eye(pixels), bias=np.zeros(pixels))
        fs, _ = patch_embed(spec, params)
        first_patch = spec.values[0:2, 0:2].ravel()
        assert np.array_equal(fs.vectors[0], first_patch)
        last_patch = spec.values[2:4, 4:6].ravel()
        assert np.array_equal(fs.vectors[5], last_patch)

    def test_truncates_remainder_rows_and_cols(self):
        rng = Rng(34)
        spec = Spectrogram(values=rng.normal_mat(7, 7))
        params = PatchEmbedParams.init(2, 2, 3, 3, 4, rng)
        fs, _ = patch_embed(spec, params)
        assert fs.n == 4

    def test_grid_too_fine(self):
        rng = Rng(35)
        spec = Spectrogram(values=rng.normal_mat(3, 3))
        params = PatchEmbedParams.init(5, 5, 1, 1, 2, rng)
        with pytest.raises(GridTooFineForInput):
            patch_embed(spec, params)

    def test_projection_shape_mismatch(self):
        rng = Rng(36)
        spec = Spectrogram(values=rng.normal_mat(8, 8))
        params = PatchEmbedParams(grid_h=2, grid_w=2, channels=3,
                                  projection=np.ones((5, 3)), bias=np.zeros(3))
        with pytest.raises(DimMismatch):
            patch_embed(spec, params)

    @pytest.mark.parametrize("seed", range(10))
    def test_gradcheck(self, seed):
        assert check_patch_embed(seed) < 1e-4

    def test_missing_cache(self):
        with pytest.raises(MissingForwardCache):
            patch_embed_backward(None, np.zeros((1, 1)))
