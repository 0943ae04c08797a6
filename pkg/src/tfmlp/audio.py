"""WAV file input/output (mono, 16 kHz pipelines).

Integer PCM is normalized to [-1, 1) float32 on read; writes default to
32-bit float WAV so separated streams round-trip losslessly.
"""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile

from .errors import FormatError

_INT_NORM = {np.int16: 32768.0, np.int32: 2147483648.0}


def read_wav(path):
    """Read a mono WAV file. Returns (float32 samples, sample rate)."""
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise FormatError(f"{path}: not a readable WAV file ({exc})") from None
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None
    if data.ndim == 2:
        if data.shape[1] != 1:
            raise FormatError(f"{path}: expected mono audio, found {data.shape[1]} channels")
        data = data[:, 0]
    if data.size == 0:
        raise FormatError(f"{path}: empty audio stream")
    kind = data.dtype.type
    if kind in _INT_NORM:
        samples = data.astype(np.float32) / _INT_NORM[kind]
    elif kind == np.uint8:
        samples = (data.astype(np.float32) - 128.0) / 128.0
    elif kind in (np.float32, np.float64):
        samples = data.astype(np.float32)
    else:
        raise FormatError(f"{path}: unsupported sample format {data.dtype}")
    if not np.all(np.isfinite(samples)):
        raise FormatError(f"{path}: non-finite samples")
    return samples, int(rate)


def write_wav(path, samples, rate: int):
    """Write float32 mono samples as a 32-bit float WAV file."""
    samples = np.asarray(samples, dtype=np.float32).ravel()
    wavfile.write(path, int(rate), samples)


def read_embedding(path, embed_dim: int):
    """Read a raw little-endian float32 speaker embedding file."""
    try:
        raw = np.fromfile(path, dtype="<f4")
    except (OSError, FileNotFoundError) as exc:
        raise FormatError(f"{path}: cannot read embedding ({exc})") from None
    if raw.size != embed_dim:
        raise FormatError(
            f"{path}: embedding holds {raw.size} floats, the model expects {embed_dim}")
    if not np.all(np.isfinite(raw)):
        raise FormatError(f"{path}: non-finite embedding values")
    return raw.astype(np.float32)
