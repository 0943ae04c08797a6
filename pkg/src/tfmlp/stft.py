"""Streaming STFT analysis and weighted overlap-add synthesis.

Framing follows the engine's 10 ms window / 6 ms hop at 16 kHz
(160/96 samples, 81 bins). A square-root Hann window is used for both
analysis and synthesis; since hop 96 of window 160 is not constant
overlap-add, emitted samples are divided by the accumulated sum of
squared synthesis windows (WOLA normalization).

Internals run in float64 and expose float32 at the module boundary, so
the analysis/synthesis round trip stays well below the reconstruction
tolerance of the rest of the engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FramingError

_NORM_EPS = 1e-12


def make_window(kind: str, length: int):
    """Build an analysis/synthesis window. Only "sqrt-hann" is defined."""
    if kind != "sqrt-hann":
        raise ConfigError(f"unknown window kind {kind!r}")
    if length < 2:
        raise ConfigError("window length must be >= 2")
    n = np.arange(length)
    w = np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / length))
    return w.astype(np.float32)


@dataclass(frozen=True)
class FrameConfig:
    """STFT framing parameters."""

    sample_rate: int = 16000
    win_len: int = 160
    hop_len: int = 96
    fft_size: int = 160
    window_kind: str = "sqrt-hann"

    def __post_init__(self):
        if not (0 < self.hop_len <= self.win_len <= self.fft_size):
            raise ConfigError("need hop_len <= win_len <= fft_size")

    @property
    def bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def warmup_chunks(self) -> int:
        # chunks emitted as zeros until the OLA normalizer is fully populated
        return -(-self.win_len // self.hop_len) - 1

    def window(self):
        return make_window(self.window_kind, self.win_len)

    def to_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate, "win_len": self.win_len,
            "hop_len": self.hop_len, "fft_size": self.fft_size,
            "window_kind": self.window_kind,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


@dataclass
class StftState:
    """Mutable per-stream analysis/synthesis state.

    analysis_buffer: the win_len - hop_len most recent input samples.
    ola_buffer:      (S, win_len) synthesis accumulator per output stream.
    ola_norm:        running window-squared accumulator, shared by streams.
    """

    analysis_buffer: np.ndarray
    ola_buffer: np.ndarray
    ola_norm: np.ndarray
    frames_done: int = 0
    chunks_emitted: int = 0

    @classmethod
    def initial(cls, cfg: FrameConfig, n_streams: int):
        return cls(
            analysis_buffer=np.zeros(cfg.win_len - cfg.hop_len, dtype=np.float64),
            ola_buffer=np.zeros((n_streams, cfg.win_len), dtype=np.float64),
            ola_norm=np.zeros(cfg.win_len, dtype=np.float64),
        )


def stft_step(chunk, state: StftState, cfg: FrameConfig):
    """Analyze one hop of audio into a single spectral frame.

    chunk: (hop_len,) samples. Returns ((2, F) frame with channel 0 the
    real parts and channel 1 the imaginary parts, updated state).
    """
    chunk = np.asarray(chunk)
    if chunk.shape != (cfg.hop_len,):
        raise FramingError(f"expected chunk of {cfg.hop_len} samples, got {chunk.shape}")
    frame_td = np.concatenate([state.analysis_buffer, chunk.astype(np.float64)])
    windowed = frame_td * cfg.window().astype(np.float64)
    spec = np.fft.rfft(windowed, n=cfg.fft_size)
    state.analysis_buffer = frame_td[cfg.hop_len :].copy()
    state.frames_done += 1
    out = np.stack([spec.real, spec.imag]).astype(np.float32)
    return out, state


def istft_step(frame, state: StftState, cfg: FrameConfig):
    """Synthesize one hop of audio per stream from a (2S, F) spectral frame.

    The first half of the channels are real parts, the second half
    imaginary, one pair per output stream. Chunks inside the warmup
    region (normalizer not yet fully accumulated) are emitted as zeros.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2 or frame.shape[0] % 2 or frame.shape[1] != cfg.bins:
        raise FramingError(f"expected (2S, {cfg.bins}) frame, got {frame.shape}")
    n_streams = frame.shape[0] // 2
    if state.ola_buffer.shape[0] != n_streams:
        raise FramingError(
            f"state holds {state.ola_buffer.shape[0]} streams, frame has {n_streams}"
        )
    window = cfg.window().astype(np.float64)

    spec = frame[:n_streams] + 1j * frame[n_streams:]
    frames_td = np.fft.irfft(spec, n=cfg.fft_size, axis=1)[:, : cfg.win_len]
    state.ola_buffer += frames_td * window
    state.ola_norm += window * window

    hop = cfg.hop_len
    norm = state.ola_norm[:hop]
    if state.chunks_emitted < cfg.warmup_chunks:
        out = np.zeros((n_streams, hop), dtype=np.float32)
    else:
        out = (state.ola_buffer[:, :hop] / np.maximum(norm, _NORM_EPS)).astype(np.float32)

    # slide the accumulators forward by one hop
    state.ola_buffer[:, :-hop] = state.ola_buffer[:, hop:]
    state.ola_buffer[:, -hop:] = 0.0
    state.ola_norm[:-hop] = state.ola_norm[hop:]
    state.ola_norm[-hop:] = 0.0
    state.chunks_emitted += 1
    return out, state


def stft_offline(signal, cfg: FrameConfig):
    """Frame a whole signal exactly as the streaming analyzer would.

    signal length must be a multiple of hop_len. Returns (2, F, T).
    """
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.size % cfg.hop_len:
        raise FramingError("offline analysis needs a 1D signal of whole hops")
    lookback = cfg.win_len - cfg.hop_len
    padded = np.concatenate([np.zeros(lookback), signal])
    t_frames = signal.size // cfg.hop_len
    window = cfg.window().astype(np.float64)
    idx = np.arange(cfg.win_len)[None, :] + cfg.hop_len * np.arange(t_frames)[:, None]
    spec = np.fft.rfft(padded[idx] * window, n=cfg.fft_size, axis=1)  # (T, F)
    return np.stack([spec.real.T, spec.imag.T]).astype(np.float32)


def istft_offline(frames, cfg: FrameConfig):
    """Overlap-add a whole (2S, F, T) frame sequence; mirrors the stream.

    Returns (S, T * hop_len) audio with the same warmup zeroing as
    istft_step, so chunked and whole-signal synthesis agree sample for
    sample.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_streams = frames.shape[0] // 2
    t_frames = frames.shape[2]
    window = cfg.window().astype(np.float64)
    hop, win = cfg.hop_len, cfg.win_len

    total = t_frames * hop + win
    acc = np.zeros((n_streams, total), dtype=np.float64)
    norm = np.zeros(total, dtype=np.float64)
    spec = frames[:n_streams] + 1j * frames[n_streams:]
    frames_td = np.fft.irfft(spec, n=cfg.fft_size, axis=1)[:, : cfg.win_len]  # (S, win, T)
    for t in range(t_frames):
        acc[:, t * hop : t * hop + win] += frames_td[:, :, t] * window
        norm[t * hop : t * hop + win] += window * window
    out = acc[:, : t_frames * hop] / np.maximum(norm[: t_frames * hop], _NORM_EPS)
    out[:, : cfg.warmup_chunks * hop] = 0.0
    return out.astype(np.float32)
