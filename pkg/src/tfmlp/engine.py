"""Streaming sessions, per-stage timing, and the profiling harness."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import model as model_mod
from .errors import ConfigError, FramingError
from .model import ConvLstmParams, MixerRepParams, ModelConfig

STAGE_ORDER = ("stft", "encoder", "film", "compress", "mixer", "lstm",
               "decompress", "decoder", "istft")


class _Span:
    __slots__ = ("timer", "stage", "t0")

    def __init__(self, timer, stage):
        self.timer = timer
        self.stage = stage

    def __enter__(self):
        self.t0 = time.perf_counter_ns()
        return self

    def __exit__(self, *exc):
        cur = self.timer._cur
        if cur is not None:
            cur[self.stage] = cur.get(self.stage, 0) + time.perf_counter_ns() - self.t0
        return False


class StageTimer:
    """Accumulates wall time per pipeline stage, chunk by chunk."""

    def __init__(self):
        self.chunks: list[dict] = []
        self._cur: dict | None = None

    def __call__(self, stage: str):
        return _Span(self, stage)

    def begin_chunk(self):
        self._cur = {}

    def end_chunk(self):
        if self._cur is not None:
            self.chunks.append(self._cur)
            self._cur = None


class StreamSession:
    """One audio stream bound to a model: push chunks, collect output."""

    def __init__(self, model, embedding=None):
        if model.config.film_enabled and embedding is None:
            raise ConfigError("this model needs a speaker embedding per session")
        if not model.config.film_enabled and embedding is not None:
            raise ConfigError("embedding given but the model has no conditioning path")
        if embedding is not None:
            embedding = np.asarray(embedding, dtype=np.float32)
            if embedding.shape != (model.config.embed_dim,):
                raise ConfigError(
                    f"embedding shape {embedding.shape} != ({model.config.embed_dim},)")
        self.model = model
        self.embedding = embedding
        self.state = model.init_state()
        self.chunks_processed = 0

    @property
    def hop_len(self) -> int:
        return self.model.frame.hop_len

    def push_chunk(self, chunk, timer=model_mod._NULL_TIMER):
        """Feed hop_len samples; returns (S, hop_len) separated samples."""
        out = self.model.forward_chunk(chunk, self.state, self.embedding, timer)
        self.chunks_processed += 1
        return out

    def reset(self):
        self.state = self.model.init_state()
        self.chunks_processed = 0

    def process(self, signal):
        """Run a whole signal through the stream; output trimmed to input length."""
        signal = np.asarray(signal, dtype=np.float32).ravel()
        if signal.size == 0:
            raise FramingError("empty input signal")
        hop = self.hop_len
        padded = signal
        if padded.size % hop:
            padded = np.pad(padded, (0, hop - padded.size % hop))
        outs = [self.push_chunk(padded[k * hop : (k + 1) * hop])
                for k in range(padded.size // hop)]
        return np.concatenate(outs, axis=1)[:, : signal.size]


# --------------------------------------------------------------------------
# profiling
# --------------------------------------------------------------------------

@dataclass
class StageStats:
    mean_ms: float
    p50_ms: float
    p95_ms: float

    @classmethod
    def of(cls, ms: np.ndarray) -> "StageStats":
        return cls(float(np.mean(ms)), float(np.percentile(ms, 50)),
                   float(np.percentile(ms, 95)))

    def to_dict(self):
        return {"mean_ms": self.mean_ms, "p50_ms": self.p50_ms, "p95_ms": self.p95_ms}


@dataclass
class ProfileReport:
    """Per-stage and per-chunk timing for one model under a steady stream."""

    preset: str
    n_chunks: int
    hop_ms: float
    stages: dict  # stage -> StageStats
    chunk: StageStats
    rtf: float
    stage_series: dict  # stage -> per-chunk ms array
    chunk_series: np.ndarray

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "n_chunks": self.n_chunks,
            "hop_ms": self.hop_ms,
            "rtf": self.rtf,
            "chunk": self.chunk.to_dict(),
            "stages": {k: v.to_dict() for k, v in self.stages.items()},
        }


def profile(model, seconds: float = 10.0, warmup: int = 10, seed: int = 0,
            embedding=None) -> ProfileReport:
    """Stream synthetic audio through the model and time every stage.

    The first `warmup` chunks are excluded from the statistics. RTF is
    mean chunk time over the hop duration; below 1.0 keeps up with the
    stream in real time.
    """
    cfg = model.config
    rng = np.random.default_rng(seed)
    if cfg.film_enabled and embedding is None:
        embedding = rng.standard_normal(cfg.embed_dim).astype(np.float32)
    hop = model.frame.hop_len
    n_chunks = max(int(seconds * model.frame.sample_rate / hop), warmup + 10)
    audio = (rng.standard_normal(n_chunks * hop) * 0.1).astype(np.float32)

    session = StreamSession(model, embedding)
    timer = StageTimer()
    for k in range(n_chunks):
        timer.begin_chunk()
        session.push_chunk(audio[k * hop : (k + 1) * hop], timer=timer)
        timer.end_chunk()

    kept = timer.chunks[warmup:]
    stage_series = {}
    for stage in STAGE_ORDER:
        if any(stage in c for c in kept):
            stage_series[stage] = np.array([c.get(stage, 0) for c in kept]) / 1e6
    chunk_series = np.array([sum(c.values()) for c in kept]) / 1e6
    hop_ms = 1000.0 * hop / model.frame.sample_rate
    return ProfileReport(
        preset=model.preset,
        n_chunks=len(kept),
        hop_ms=hop_ms,
        stages={k: StageStats.of(v) for k, v in stage_series.items()},
        chunk=StageStats.of(chunk_series),
        rtf=float(np.mean(chunk_series)) / hop_ms,
        stage_series=stage_series,
        chunk_series=chunk_series,
    )


# --------------------------------------------------------------------------
# runtime ordering: why this architecture suits small streaming hops
# --------------------------------------------------------------------------

def _mixer_param_count(cfg: ModelConfig) -> int:
    th, ch, fc, c = cfg.token_hidden, cfg.chan_hidden, cfg.f_inner, cfg.C
    per_rep = th * fc + th + fc * th + fc + ch * c + ch + c * ch + c
    return cfg.M * per_rep

def _bidir_param_count(hb: int, cfg: ModelConfig) -> int:
    per_dir = 4 * hb * cfg.C + 4 * hb * hb + 4 * hb
    return 2 * per_dir + cfg.C * 2 * hb + cfg.C

def _match_bidir_hidden(cfg: ModelConfig) -> int:
    """Bidirectional hidden size whose parameter count best matches the mixer."""
    target = _mixer_param_count(cfg)
    return min(range(4, 257), key=lambda hb: abs(_bidir_param_count(hb, cfg) - target))


def _seq_bidir_lstm_stage(x, wf, wb, proj_w, proj_b, hb: int):
    """A same-capacity recurrent alternative to the mixer stage.

    Runs a bidirectional LSTM along the frequency axis, one bin after
    another (the recurrence forbids batching across bins), then projects
    the concatenated hidden states back to C channels.
    """
    c, f_bins = x.shape
    (wx_f, wh_f, b_f), (wx_b, wh_b, b_b) = wf, wb
    hs = np.zeros((2 * hb, f_bins), dtype=np.float32)
    h = np.zeros(hb, dtype=np.float32)
    cc = np.zeros(hb, dtype=np.float32)
    for f in range(f_bins):
        h, cc = _cell(x[:, f], h, cc, wx_f, wh_f, b_f, hb)
        hs[:hb, f] = h
    h[:] = 0.0
    cc[:] = 0.0
    for f in range(f_bins - 1, -1, -1):
        h, cc = _cell(x[:, f], h, cc, wx_b, wh_b, b_b, hb)
        hs[hb:, f] = h
    return proj_w @ hs + proj_b[:, None] + x


def _cell(x_col, h, c, wx, wh, bias, hid):
    from . import ops
    gates = wx @ x_col + wh @ h + bias
    i_g = ops.sigmoid(gates[:hid])
    f_g = ops.sigmoid(gates[hid : 2 * hid])
    g_g = ops.tanh(gates[2 * hid : 3 * hid])
    o_g = ops.sigmoid(gates[3 * hid :])
    c_new = f_g * c + i_g * g_g
    return o_g * ops.tanh(c_new), c_new


def _median_call_ms(fn, n_calls: int) -> float:
    times = np.empty(n_calls)
    for k in range(n_calls):
        t0 = time.perf_counter_ns()
        fn()
        times[k] = time.perf_counter_ns() - t0
    return float(np.median(times)) / 1e6


def runtime_ordering_benchmark(cfg: ModelConfig | None = None, chunks: int = 1000,
                               seed: int = 0) -> dict:
    """Time the two design choices against their conventional counterparts.

    1. the frequency-mixing MLP stage vs a parameter-matched sequential
       bidirectional LSTM over bins, and
    2. one conv-batched LSTM step vs the per-bin loop of a plain cell,

    each as median per-frame wall time over `chunks` calls.
    """
    cfg = cfg or ModelConfig()
    rng = np.random.default_rng(seed)
    f32 = np.float32
    c, fc, h = cfg.C, cfg.f_inner, cfg.H
    lat = rng.standard_normal((c, fc)).astype(f32)

    def u(*shape, fan):
        bound = 1.0 / np.sqrt(fan)
        return rng.uniform(-bound, bound, size=shape).astype(f32)

    reps = [MixerRepParams(
        tok1_w=u(cfg.token_hidden, fc, fan=fc), tok1_b=u(cfg.token_hidden, fan=fc),
        tok2_w=u(fc, cfg.token_hidden, fan=cfg.token_hidden), tok2_b=u(fc, fan=cfg.token_hidden),
        ch1_w=u(cfg.chan_hidden, c, fan=c), ch1_b=u(cfg.chan_hidden, fan=c),
        ch2_w=u(c, cfg.chan_hidden, fan=cfg.chan_hidden), ch2_b=u(c, fan=cfg.chan_hidden),
    ) for _ in range(cfg.M)]

    hb = _match_bidir_hidden(cfg)
    wf = (u(4 * hb, c, fan=c), u(4 * hb, hb, fan=hb), u(4 * hb, fan=c))
    wb = (u(4 * hb, c, fan=c), u(4 * hb, hb, fan=hb), u(4 * hb, fan=c))
    bproj = (u(c, 2 * hb, fan=2 * hb), u(c, fan=2 * hb))

    lstm = ConvLstmParams(wx=u(4 * h, c, fan=c), wh=u(4 * h, h, fan=h),
                          bias=u(4 * h, fan=c), proj_w=u(c, h, fan=h), proj_b=u(c, fan=h))
    h0 = rng.standard_normal((h, fc)).astype(f32) * 0.1
    c0 = rng.standard_normal((h, fc)).astype(f32) * 0.1

    mixer_ms = _median_call_ms(lambda: model_mod.mixer_forward(lat, reps), chunks)
    bidir_ms = _median_call_ms(
        lambda: _seq_bidir_lstm_stage(lat, wf, wb, bproj[0], bproj[1], hb), chunks)
    batched_ms = _median_call_ms(
        lambda: model_mod.conv_batched_lstm_step(lat, lstm, h0, c0), chunks)
    loop_ms = _median_call_ms(
        lambda: model_mod.reference_batched_lstm_step(lat, lstm, h0, c0), chunks)

    return {
        "chunks": chunks,
        "mixer_ms": mixer_ms,
        "seq_bidir_lstm_ms": bidir_ms,
        "mixer_speedup": bidir_ms / mixer_ms,
        "mixer_params": _mixer_param_count(cfg),
        "seq_bidir_params": _bidir_param_count(hb, cfg),
        "seq_bidir_hidden": hb,
        "conv_batched_ms": batched_ms,
        "per_bin_loop_ms": loop_ms,
        "lstm_speedup": loop_ms / batched_ms,
    }
