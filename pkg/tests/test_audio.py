"""WAV and raw-embedding file handling."""

import numpy as np
import pytest
from scipy.io import wavfile

from tfmlp.audio import read_embedding, read_wav, write_wav
from tfmlp.errors import FormatError


def test_float_wav_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    sig = (rng.standard_normal(5000) * 0.25).astype(np.float32)
    p = tmp_path / "a.wav"
    write_wav(p, sig, 16000)
    samples, rate = read_wav(p)
    assert rate == 16000
    np.testing.assert_array_equal(samples, sig)


def test_int16_wav_normalized(tmp_path):
    p = tmp_path / "i.wav"
    wavfile.write(p, 16000, np.array([0, 16384, -32768, 32767], dtype=np.int16))
    samples, rate = read_wav(p)
    assert samples.dtype == np.float32
    np.testing.assert_allclose(samples, [0.0, 0.5, -1.0, 32767 / 32768], atol=1e-7)


def test_stereo_rejected(tmp_path):
    p = tmp_path / "s.wav"
    wavfile.write(p, 16000, np.zeros((100, 2), dtype=np.int16))
    with pytest.raises(FormatError):
        read_wav(p)


def test_empty_rejected(tmp_path):
    p = tmp_path / "e.wav"
    wavfile.write(p, 16000, np.zeros(0, dtype=np.int16))
    with pytest.raises(FormatError):
        read_wav(p)


def test_non_finite_rejected(tmp_path):
    p = tmp_path / "n.wav"
    wavfile.write(p, 16000, np.array([0.0, np.nan, 1.0], dtype=np.float32))
    with pytest.raises(FormatError):
        read_wav(p)


def test_garbage_file_rejected(tmp_path):
    p = tmp_path / "g.wav"
    p.write_bytes(b"not a wav at all")
    with pytest.raises(FormatError):
        read_wav(p)


def test_embedding_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    emb = rng.standard_normal(256).astype(np.float32)
    p = tmp_path / "d.f32"
    emb.tofile(p)
    got = read_embedding(p, 256)
    np.testing.assert_array_equal(got, emb)


def test_embedding_wrong_size_rejected(tmp_path):
    p = tmp_path / "d.f32"
    np.zeros(100, dtype=np.float32).tofile(p)
    with pytest.raises(FormatError):
        read_embedding(p, 256)
