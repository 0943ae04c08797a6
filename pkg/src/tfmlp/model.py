"""The streaming separation network: encoder, mixer/LSTM blocks, decoder.

Per spectral frame the network runs:

    encoder (causal 3x3 conv, 2 -> C channels)
    [FiLM conditioning on a speaker embedding, target-extraction models]
    [frequency compression, strided conv, optional]
    B blocks of: M x (token-mix MLP + channel-mix MLP, residual)
                 followed by one conv-batched LSTM step (residual)
    [frequency decompression]
    decoder (causal 3x3 transposed conv, C -> 2S channels)

The temporal stage advances one LSTM step per frame for all frequency
bins at once: the gate affine maps are kernel-1 convolutions with the
frequency axis as the sequence axis, so a single batch-1 call covers
every bin. ``reference_batched_lstm_step`` keeps the textbook per-bin
loop as the equivalence oracle for that construction.

Forward passes are written against a small executor interface so the
same graph code runs the float model and every mixed-precision variant;
``FloatExec`` is the plain float32 executor.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import ConfigError, NumericError
from .ops import ConvSpec, relu
from .stft import FrameConfig, StftState, istft_offline, istft_step, stft_offline, stft_step

F32 = np.float32

GATE_ORDER = "ifgo"  # fixed gate layout of every 4H-sized LSTM tensor


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the network."""

    B: int = 6  # block count
    M: int = 2  # mixer repetitions per block
    C: int = 32  # latent channels
    H: int = 32  # LSTM hidden size
    F: int = 81  # frequency bins entering the encoder
    S: int = 2  # output speaker count (2 = separation, 1 = extraction)
    alpha: int = 1  # frequency compression factor
    mixer_expansion: float = 2.375  # MLP hidden ratio, tuned for the stock size
    film_enabled: bool = False
    embed_dim: int = 256

    def __post_init__(self):
        if min(self.B, self.M, self.C, self.H, self.F) < 1:
            raise ConfigError("B, M, C, H, F must all be >= 1")
        if self.S not in (1, 2):
            raise ConfigError("S must be 1 or 2")
        if self.alpha not in (1, 2, 4, 6):
            raise ConfigError("alpha must be one of 1, 2, 4, 6")
        if self.mixer_expansion <= 0:
            raise ConfigError("mixer_expansion must be positive")
        if self.film_enabled and self.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1 when FiLM is enabled")

    @property
    def f_inner(self) -> int:
        """Frequency bins seen by the blocks (after compression)."""
        return -(-self.F // self.alpha)

    @property
    def token_hidden(self) -> int:
        return max(1, round(self.mixer_expansion * self.f_inner))

    @property
    def chan_hidden(self) -> int:
        return max(1, round(self.mixer_expansion * self.C))

    def to_dict(self) -> dict:
        return {
            "B": self.B, "M": self.M, "C": self.C, "H": self.H, "F": self.F,
            "S": self.S, "alpha": self.alpha, "mixer_expansion": self.mixer_expansion,
            "film_enabled": self.film_enabled, "embed_dim": self.embed_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


DEFAULT_BSS = ModelConfig()
DEFAULT_TSE = ModelConfig(S=1, film_enabled=True)


# --------------------------------------------------------------------------
# parameter set
# --------------------------------------------------------------------------

def param_specs(cfg: ModelConfig) -> dict[str, tuple]:
    """Ordered tensor name -> shape for the full parameter set."""
    C, H = cfg.C, cfg.H
    Fc, TH, CH = cfg.f_inner, cfg.token_hidden, cfg.chan_hidden
    specs: dict[str, tuple] = {}
    specs["encoder.w"] = (C, 2, 3, 3)
    specs["encoder.b"] = (C,)
    if cfg.film_enabled:
        specs["film.gamma.w"] = (C, cfg.embed_dim)
        specs["film.gamma.b"] = (C,)
        specs["film.beta.w"] = (C, cfg.embed_dim)
        specs["film.beta.b"] = (C,)
    if cfg.alpha > 1:
        specs["compress.w"] = (C, C, cfg.alpha)
        specs["compress.b"] = (C,)
        specs["decompress.w"] = (C, C, cfg.alpha)
        specs["decompress.b"] = (C,)
    for i in range(cfg.B):
        for j in range(cfg.M):
            base = f"b{i}.m{j}"
            specs[f"{base}.tok1.w"] = (TH, Fc)
            specs[f"{base}.tok1.b"] = (TH,)
            specs[f"{base}.tok2.w"] = (Fc, TH)
            specs[f"{base}.tok2.b"] = (Fc,)
            specs[f"{base}.ch1.w"] = (CH, C)
            specs[f"{base}.ch1.b"] = (CH,)
            specs[f"{base}.ch2.w"] = (C, CH)
            specs[f"{base}.ch2.b"] = (C,)
        specs[f"b{i}.lstm.wx"] = (4 * H, C)
        specs[f"b{i}.lstm.wh"] = (4 * H, H)
        specs[f"b{i}.lstm.bias"] = (4 * H,)
        specs[f"b{i}.lstm.proj.w"] = (C, H)
        specs[f"b{i}.lstm.proj.b"] = (C,)
    specs["decoder.w"] = (C, 2 * cfg.S, 3, 3)
    specs["decoder.b"] = (2 * cfg.S,)
    return specs


def _fan_in(name: str, shape: tuple, cfg: ModelConfig) -> int:
    if name.startswith("encoder"):
        return 2 * 9
    if name.startswith("decoder"):
        return cfg.C * 9
    if name.startswith("film"):
        return cfg.embed_dim
    if name.startswith(("compress", "decompress")):
        return cfg.C * cfg.alpha
    if ".lstm.wx" in name or ".lstm.bias" in name:
        return cfg.C
    if ".lstm.wh" in name:
        return cfg.H
    if ".lstm.proj" in name:
        return cfg.H
    # mixer MLP layers: fan-in is the trailing weight dim
    if name.endswith(".b"):
        return shape[0]
    return shape[-1]


def param_count(cfg: ModelConfig) -> int:
    """Total parameter count, a pure function of the configuration."""
    return sum(int(np.prod(s)) for s in param_specs(cfg).values())


def param_breakdown(cfg: ModelConfig) -> dict[str, int]:
    """Parameter counts grouped by network section."""
    groups: dict[str, int] = {}
    for name, shape in param_specs(cfg).items():
        if name.startswith("b") and ".lstm" in name:
            key = "lstm"
        elif name.startswith("b"):
            key = "mixer"
        else:
            key = name.split(".")[0]
        groups[key] = groups.get(key, 0) + int(np.prod(shape))
    return groups


def activation_edges(cfg: ModelConfig) -> list[str]:
    """Every activation edge of the graph, in forward order."""
    edges = ["act.input", "act.encoder.out"]
    if cfg.film_enabled:
        edges += ["act.emb", "act.film.gamma", "act.film.beta", "act.film.out"]
    if cfg.alpha > 1:
        edges.append("act.compress.out")
    for i in range(cfg.B):
        for j in range(cfg.M):
            base = f"act.b{i}.m{j}"
            edges += [
                f"{base}.tok.hidden", f"{base}.tok.out", f"{base}.tok.res",
                f"{base}.ch.hidden", f"{base}.ch.out", f"{base}.ch.res",
            ]
        base = f"act.b{i}.lstm"
        edges += [
            f"{base}.gx", f"{base}.gh", f"{base}.gates",
            f"{base}.c", f"{base}.h", f"{base}.proj", f"{base}.out",
        ]
    if cfg.alpha > 1:
        edges.append("act.decompress.out")
    edges.append("act.decoder.out")
    return edges


def init_params(cfg: ModelConfig, seed: int) -> dict[str, np.ndarray]:
    """Seeded fan-in-scaled uniform initialization, reproducible across hosts."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in param_specs(cfg).items():
        bound = 1.0 / math.sqrt(_fan_in(name, shape, cfg))
        params[name] = rng.uniform(-bound, bound, size=shape).astype(F32)
    return params


# --------------------------------------------------------------------------
# streaming state
# --------------------------------------------------------------------------

@dataclass
class StreamState:
    """All mutable state of one audio stream."""

    stft: StftState
    enc_hist: np.ndarray  # (2, F, 2) past input frames
    lstm_h: list  # per block: (H, f_inner)
    lstm_c: list
    dec_hist: np.ndarray  # (C, F, 2) past latent frames

    @classmethod
    def initial(cls, cfg: ModelConfig, frame_cfg: FrameConfig):
        return cls(
            stft=StftState.initial(frame_cfg, cfg.S),
            enc_hist=np.zeros((2, cfg.F, 2), dtype=F32),
            lstm_h=[np.zeros((cfg.H, cfg.f_inner), dtype=F32) for _ in range(cfg.B)],
            lstm_c=[np.zeros((cfg.H, cfg.f_inner), dtype=F32) for _ in range(cfg.B)],
            dec_hist=np.zeros((cfg.C, cfg.F, 2), dtype=F32),
        )


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------

class _NullTimer:
    def __call__(self, stage):
        return contextlib.nullcontext()


_NULL_TIMER = _NullTimer()


class FloatExec:
    """Plain float32 executor. Precision-planned executors subclass this
    and override per-node behaviour; anything not overridden runs exactly
    these code paths, which is what makes an all-float plan bit-identical
    to the float model."""

    def __init__(self, params: dict):
        self.params = params

    def param(self, name):
        return self.params[name]

    def edge(self, name, x):
        return x

    def dense(self, wname, bname, x, in_edge, out_edge):
        return ops.linear(x, self.params[wname], self.params[bname])

    def kernel1(self, wname, bname, x, in_edge, out_edge):
        w = self.params[wname]
        b = self.params[bname] if bname else np.zeros(w.shape[0], dtype=F32)
        return ops.conv1d_k1(x, w, b)

    def conv2d(self, wname, bname, window, in_edge, out_edge):
        return ops._conv2d_frame(window, self.params[wname], self.params[bname], 3)

    def deconv2d(self, wname, bname, window, in_edge, out_edge):
        w = self.params[wname][:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
        return ops._conv2d_frame(window, np.ascontiguousarray(w), self.params[bname], 3)

    def compress(self, wname, bname, x, alpha, in_edge, out_edge):
        return ops.freq_compress(x, self.params[wname], self.params[bname], alpha)

    def decompress(self, wname, bname, x, alpha, f_out, in_edge, out_edge):
        return ops.freq_decompress(x, self.params[wname], self.params[bname], alpha, f_out)

    # elementwise ops; `region` selects the precision domain in planned executors
    def add(self, region, a, b):
        return a + b

    def mul(self, region, a, b):
        return a * b

    def sigmoid(self, region, x):
        return ops.sigmoid(x)

    def tanh(self, region, x):
        return ops.tanh(x)


def forward_frame(cfg: ModelConfig, ex: FloatExec, frame, state: StreamState,
                  embedding=None, timer=_NULL_TIMER):
    """Advance the network by one spectral frame.

    frame: (2, F). Returns the (2S, F) output frame; all streaming state
    is updated in place.
    """
    H = cfg.H
    x = ex.edge("act.input", np.asarray(frame, dtype=F32))

    with timer("encoder"):
        window = np.concatenate([state.enc_hist, x[:, :, None]], axis=2)
        state.enc_hist = window[:, :, 1:]
        lat = ex.conv2d("encoder.w", "encoder.b", window, "act.input", "act.encoder.out")
        lat = ex.edge("act.encoder.out", lat)
    cur = "act.encoder.out"

    if cfg.film_enabled:
        if embedding is None:
            raise ConfigError("model is FiLM-conditioned: an embedding is required")
        with timer("film"):
            emb = ex.edge("act.emb", np.asarray(embedding, dtype=F32))
            if emb.shape != (cfg.embed_dim,):
                raise ConfigError(f"embedding shape {emb.shape} != ({cfg.embed_dim},)")
            gam = ex.dense("film.gamma.w", "film.gamma.b", emb[None, :], "act.emb", "act.film.gamma")[0]
            gam = ex.edge("act.film.gamma", gam)
            bet = ex.dense("film.beta.w", "film.beta.b", emb[None, :], "act.emb", "act.film.beta")[0]
            bet = ex.edge("act.film.beta", bet)
            lat = ex.edge("act.film.out", gam[:, None] * lat + bet[:, None])
        cur = "act.film.out"
    elif embedding is not None:
        raise ConfigError("embedding given but the model has no FiLM conditioning")

    if cfg.alpha > 1:
        with timer("compress"):
            lat = ex.compress("compress.w", "compress.b", lat, cfg.alpha, cur, "act.compress.out")
            lat = ex.edge("act.compress.out", lat)
        cur = "act.compress.out"

    for i in range(cfg.B):
        with timer("mixer"):
            for j in range(cfg.M):
                base, abase = f"b{i}.m{j}", f"act.b{i}.m{j}"
                hid = ex.dense(f"{base}.tok1.w", f"{base}.tok1.b", lat, cur, f"{abase}.tok.hidden")
                hid = ex.edge(f"{abase}.tok.hidden", relu(hid))
                tok = ex.dense(f"{base}.tok2.w", f"{base}.tok2.b", hid,
                               f"{abase}.tok.hidden", f"{abase}.tok.out")
                tok = ex.edge(f"{abase}.tok.out", tok)
                lat = ex.edge(f"{abase}.tok.res", lat + tok)

                hid = ex.dense(f"{base}.ch1.w", f"{base}.ch1.b", lat.T,
                               f"{abase}.tok.res", f"{abase}.ch.hidden")
                hid = ex.edge(f"{abase}.ch.hidden", relu(hid))
                chn = ex.dense(f"{base}.ch2.w", f"{base}.ch2.b", hid,
                               f"{abase}.ch.hidden", f"{abase}.ch.out")
                chn = ex.edge(f"{abase}.ch.out", chn)
                lat = ex.edge(f"{abase}.ch.res", lat + chn.T)
                cur = f"{abase}.ch.res"

        with timer("lstm"):
            base, reg = f"b{i}.lstm", f"elem.b{i}.lstm"
            abase = f"act.b{i}.lstm"
            h_prev, c_prev = state.lstm_h[i], state.lstm_c[i]
            gx = ex.edge(f"{abase}.gx", ex.kernel1(f"{base}.wx", None, lat, cur, f"{abase}.gx"))
            gh = ex.edge(f"{abase}.gh", ex.kernel1(f"{base}.wh", None, h_prev, f"{abase}.h", f"{abase}.gh"))
            gates = ex.add(reg, ex.add(reg, gx, gh), ex.param(f"{base}.bias")[:, None])
            gates = ex.edge(f"{abase}.gates", gates)
            i_g = ex.sigmoid(reg, gates[0 * H : 1 * H])
            f_g = ex.sigmoid(reg, gates[1 * H : 2 * H])
            g_g = ex.tanh(reg, gates[2 * H : 3 * H])
            o_g = ex.sigmoid(reg, gates[3 * H : 4 * H])
            c_new = ex.add(reg, ex.mul(reg, f_g, c_prev), ex.mul(reg, i_g, g_g))
            c_new = ex.edge(f"{abase}.c", c_new)
            h_new = ex.mul(reg, o_g, ex.tanh(reg, c_new))
            h_new = ex.edge(f"{abase}.h", h_new)
            proj = ex.edge(f"{abase}.proj",
                           ex.kernel1(f"{base}.proj.w", f"{base}.proj.b", h_new,
                                      f"{abase}.h", f"{abase}.proj"))
            lat = ex.edge(f"{abase}.out", lat + proj)
            state.lstm_h[i], state.lstm_c[i] = h_new, c_new
            cur = f"{abase}.out"

    if cfg.alpha > 1:
        with timer("decompress"):
            lat = ex.decompress("decompress.w", "decompress.b", lat, cfg.alpha, cfg.F,
                                cur, "act.decompress.out")
            lat = ex.edge("act.decompress.out", lat)
        cur = "act.decompress.out"

    with timer("decoder"):
        window = np.concatenate([state.dec_hist, lat[:, :, None]], axis=2)
        state.dec_hist = window[:, :, 1:]
        out = ex.deconv2d("decoder.w", "decoder.b", window, cur, "act.decoder.out")
        out = ex.edge("act.decoder.out", out)
    return out


class StreamingModel:
    """Shared chunk loop: subclasses provide the executor and parameters."""

    config: ModelConfig
    frame: FrameConfig

    def _executor(self):
        raise NotImplementedError

    def init_state(self) -> StreamState:
        return StreamState.initial(self.config, self.frame)

    def param_count(self) -> int:
        return param_count(self.config)

    def forward_chunk(self, chunk, state: StreamState, embedding=None, timer=_NULL_TIMER):
        """Process one hop of audio; returns (S, hop_len) output samples."""
        chunk = np.asarray(chunk, dtype=F32)
        if not np.all(np.isfinite(chunk)):
            raise NumericError("non-finite samples in input chunk")
        with timer("stft"):
            frame, _ = stft_step(chunk, state.stft, self.frame)
        out_frame = forward_frame(self.config, self._executor(), frame, state,
                                  embedding=embedding, timer=timer)
        with timer("istft"):
            audio, _ = istft_step(out_frame, state.stft, self.frame)
        return audio


class FloatModel(StreamingModel):
    """Float32 model: parameters plus the streaming forward pass."""

    def __init__(self, cfg: ModelConfig, params: dict, frame_cfg: FrameConfig | None = None):
        self.config = cfg
        self.frame = frame_cfg or FrameConfig()
        if self.frame.bins != cfg.F:
            raise ConfigError(f"F={cfg.F} does not match framing bins {self.frame.bins}")
        expected = param_specs(cfg)
        missing = expected.keys() - params.keys()
        extra = params.keys() - expected.keys()
        if missing or extra:
            raise ConfigError(f"parameter set mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise ConfigError(f"{name}: shape {params[name].shape} != {shape}")
        self.params = {k: np.asarray(v, dtype=F32) for k, v in params.items()}
        self._exec = FloatExec(self.params)

    @property
    def preset(self) -> str:
        return "fp32"

    def _executor(self):
        return self._exec

    def forward_offline(self, signal, embedding=None):
        """Whole-signal forward pass, vectorized over time.

        An independent realization of the same network used to
        cross-check the chunked path; returns (S, len(signal)) audio.
        """
        cfg, p = self.config, self.params
        frames = stft_offline(signal, self.frame)  # (2, F, T)
        enc_spec = ConvSpec(2, cfg.C, (3, 3))
        lat = ops.conv2d_causal_offline(frames, enc_spec, p["encoder.w"], p["encoder.b"])

        if cfg.film_enabled:
            if embedding is None:
                raise ConfigError("model is FiLM-conditioned: an embedding is required")
            emb = np.asarray(embedding, dtype=F32)
            gam = ops.linear(emb[None, :], p["film.gamma.w"], p["film.gamma.b"])[0]
            bet = ops.linear(emb[None, :], p["film.beta.w"], p["film.beta.b"])[0]
            lat = gam[:, None, None] * lat + bet[:, None, None]
        elif embedding is not None:
            raise ConfigError("embedding given but the model has no FiLM conditioning")

        if cfg.alpha > 1:
            f_c = cfg.f_inner
            pad = f_c * cfg.alpha - cfg.F
            xp = np.pad(lat, ((0, 0), (0, pad), (0, 0)))
            groups = xp.reshape(cfg.C, f_c, cfg.alpha, -1)
            lat = np.einsum("cfkt,ock->oft", groups, p["compress.w"]).astype(F32)
            lat += p["compress.b"][:, None, None]

        H = cfg.H
        for i in range(cfg.B):
            for j in range(cfg.M):
                base = f"b{i}.m{j}"
                hid = np.einsum("hf,cft->cht", p[f"{base}.tok1.w"], lat).astype(F32)
                hid = relu(hid + p[f"{base}.tok1.b"][None, :, None])
                tok = np.einsum("fh,cht->cft", p[f"{base}.tok2.w"], hid).astype(F32)
                lat = lat + tok + p[f"{base}.tok2.b"][None, :, None]
                hid = np.einsum("hc,cft->hft", p[f"{base}.ch1.w"], lat).astype(F32)
                hid = relu(hid + p[f"{base}.ch1.b"][:, None, None])
                chn = np.einsum("ch,hft->cft", p[f"{base}.ch2.w"], hid).astype(F32)
                lat = lat + chn + p[f"{base}.ch2.b"][:, None, None]

            wx, wh = p[f"b{i}.lstm.wx"], p[f"b{i}.lstm.wh"]
            bias = p[f"b{i}.lstm.bias"]
            gx_all = np.einsum("gc,cft->gft", wx, lat).astype(F32)
            h = np.zeros((H, cfg.f_inner), dtype=F32)
            c = np.zeros((H, cfg.f_inner), dtype=F32)
            out_seq = np.empty_like(lat)
            for t in range(lat.shape[2]):
                gates = gx_all[:, :, t] + wh @ h + bias[:, None]
                i_g = ops.sigmoid(gates[0 * H : 1 * H])
                f_g = ops.sigmoid(gates[1 * H : 2 * H])
                g_g = ops.tanh(gates[2 * H : 3 * H])
                o_g = ops.sigmoid(gates[3 * H : 4 * H])
                c = f_g * c + i_g * g_g
                h = o_g * ops.tanh(c)
                out_seq[:, :, t] = (
                    lat[:, :, t] + p[f"b{i}.lstm.proj.w"] @ h + p[f"b{i}.lstm.proj.b"][:, None]
                )
            lat = out_seq

        if cfg.alpha > 1:
            dec = np.einsum("cft,cok->ofkt", lat, p["decompress.w"]).astype(F32)
            dec = dec.reshape(cfg.C, cfg.f_inner * cfg.alpha, -1)[:, : cfg.F]
            lat = dec + p["decompress.b"][:, None, None]

        dec_spec = ConvSpec(cfg.C, 2 * cfg.S, (3, 3), transposed=True)
        out = ops.conv2d_transposed_offline(lat, dec_spec, p["decoder.w"], p["decoder.b"])
        return istft_offline(out, self.frame)


def init_random(cfg: ModelConfig, seed: int, frame_cfg: FrameConfig | None = None) -> FloatModel:
    """Deterministic random model; same seed gives bit-identical parameters."""
    return FloatModel(cfg, init_params(cfg, seed), frame_cfg)


# --------------------------------------------------------------------------
# standalone block operations (public surface + oracle partners)
# --------------------------------------------------------------------------

@dataclass
class ConvLstmParams:
    """Gate and projection tensors of one conv-batched LSTM block."""

    wx: np.ndarray  # (4H, C), gate order i, f, g, o
    wh: np.ndarray  # (4H, H)
    bias: np.ndarray  # (4H,)
    proj_w: np.ndarray  # (C, H)
    proj_b: np.ndarray  # (C,)


def conv_batched_lstm_step(x, p: ConvLstmParams, h, c):
    """One LSTM step over all frequency bins at once.

    x: (C, F') latent frame; h, c: (H, F') states. The gate affine maps
    run as kernel-1 convolutions along frequency, i.e. one matrix product
    covering every bin. Returns (output (C, F'), h', c') where output is
    the hidden projection plus the residual input.
    """
    H = p.wh.shape[1]
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(c))):
        raise NumericError("non-finite LSTM state; reset the stream")
    zeros = np.zeros(4 * H, dtype=F32)
    gates = ops.conv1d_k1(x, p.wx, zeros) + ops.conv1d_k1(h, p.wh, zeros) + p.bias[:, None]
    i_g = ops.sigmoid(gates[0 * H : 1 * H])
    f_g = ops.sigmoid(gates[1 * H : 2 * H])
    g_g = ops.tanh(gates[2 * H : 3 * H])
    o_g = ops.sigmoid(gates[3 * H : 4 * H])
    c_new = f_g * c + i_g * g_g
    h_new = o_g * ops.tanh(c_new)
    out = x + ops.conv1d_k1(h_new, p.proj_w, p.proj_b)
    return out, h_new, c_new


def reference_batched_lstm_step(x, p: ConvLstmParams, h, c):
    """Textbook LSTM cell looped bin by bin; the equivalence oracle.

    Processes each frequency column as an independent batch element
    through a plain cell, including the projection and residual, and
    returns (output (C, F'), h', c') like the batched version.
    """
    H = p.wh.shape[1]
    f_bins = x.shape[1]
    out = np.empty_like(x, dtype=F32)
    h_new = np.empty((H, f_bins), dtype=F32)
    c_new = np.empty((H, f_bins), dtype=F32)
    for f in range(f_bins):
        gates = p.wx @ x[:, f] + p.wh @ h[:, f] + p.bias
        i_g = ops.sigmoid(gates[0 * H : 1 * H])
        f_g = ops.sigmoid(gates[1 * H : 2 * H])
        g_g = ops.tanh(gates[2 * H : 3 * H])
        o_g = ops.sigmoid(gates[3 * H : 4 * H])
        c_new[:, f] = f_g * c[:, f] + i_g * g_g
        h_new[:, f] = o_g * ops.tanh(c_new[:, f])
        out[:, f] = x[:, f] + p.proj_w @ h_new[:, f] + p.proj_b
    return out, h_new, c_new


@dataclass
class MixerRepParams:
    tok1_w: np.ndarray
    tok1_b: np.ndarray
    tok2_w: np.ndarray
    tok2_b: np.ndarray
    ch1_w: np.ndarray
    ch1_b: np.ndarray
    ch2_w: np.ndarray
    ch2_b: np.ndarray


def mixer_forward(lat, reps: list[MixerRepParams]):
    """Frequency/channel mixing on a single (C, F') frame.

    Each repetition: a token MLP shared across channels mixes along
    frequency, then a channel MLP shared across bins mixes along
    channels, both with residual adds and ReLU hidden layers.
    """
    for r in reps:
        tok = ops.linear(relu(ops.linear(lat, r.tok1_w, r.tok1_b)), r.tok2_w, r.tok2_b)
        lat = lat + tok
        chn = ops.linear(relu(ops.linear(lat.T, r.ch1_w, r.ch1_b)), r.ch2_w, r.ch2_b)
        lat = lat + chn.T
    return lat


@dataclass
class FilmParams:
    gamma_w: np.ndarray
    gamma_b: np.ndarray
    beta_w: np.ndarray
    beta_b: np.ndarray


def film_apply(lat, embedding, p: FilmParams):
    """Per-channel scale-and-shift conditioning computed from an embedding."""
    emb = np.asarray(embedding, dtype=F32)
    if not np.all(np.isfinite(emb)):
        raise NumericError("non-finite embedding")
    gam = ops.linear(emb[None, :], p.gamma_w, p.gamma_b)[0]
    bet = ops.linear(emb[None, :], p.beta_w, p.beta_b)[0]
    return (gam[:, None] * lat + bet[:, None]).astype(F32)


def encode(frame, weights, bias, history):
    """Causal 3x3 encoder step: (2, F) frame -> ((C, F) latent, new history)."""
    spec = ConvSpec(weights.shape[1], weights.shape[0], (3, 3))
    return ops.conv2d_causal(frame, spec, weights, bias, history)


def decode(lat, weights, bias, history):
    """Causal 3x3 transposed decoder step: (C, F) -> ((2S, F) frame, new history)."""
    spec = ConvSpec(weights.shape[0], weights.shape[1], (3, 3), transposed=True)
    return ops.conv2d_transposed_step(lat, spec, weights, bias, history)
