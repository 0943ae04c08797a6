"""Mixed-precision execution: bf16 rounding, int8/int16 kernels, presets.

Precision is described by a plan that assigns one storage type to every
node of the graph: each weight tensor, each activation edge, and each
elementwise region (the LSTM cell-update chain of every block). Plans
come from named presets:

    fp32                       everything float32
    int8                       int8 weights and activations end to end
    mix-lstm                   int8, but the LSTM cell math and states in bf16
    mix-lstm-fpconv            mix-lstm with bf16 encoder/decoder convolutions
    mix-lstm-fpconv-mixmlp     ... and int16 MLP activations in odd blocks
    mix-lstm-fpconv-fullmlp    ... and int16 MLP activations in every block

Quantization scheme (uniform affine):
  - weights: symmetric per output channel, int8, zero_point 0, the -128
    code unused (clamp at +/-127)
  - activations: asymmetric per tensor, scale = (max-min)/(qmax-qmin),
    zero_point = round(qmin - min/scale) clamped to the code range
  - rounding is round-half-to-even everywhere; scales floor at 1e-8
  - int8 x int8 products accumulate in int32 (asserted); kernels with
    int16 activations accumulate in int64

The integer kernels compute y = requant(acc + bias_i32) where
bias_i32 = round(bias / (s_in * s_w)), so a float simulation of a layer
must fold the bias the same way to land within 1 LSB.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import ops
from .dtypes import DType, bf16_round
from .errors import ConfigError, NumericError
from .model import (FloatExec, FloatModel, ModelConfig, StreamingModel,
                    activation_edges, forward_frame, param_specs)
from .stft import FrameConfig, stft_step

F32 = np.float32

PRESETS = (
    "fp32",
    "int8",
    "mix-lstm",
    "mix-lstm-fpconv",
    "mix-lstm-fpconv-mixmlp",
    "mix-lstm-fpconv-fullmlp",
)

SCALE_FLOOR = 1e-8

# weight tensors whose output-channel axis is not the leading one
_OUT_AXIS = {"decoder.w": 1, "decompress.w": 1}


@dataclass(frozen=True)
class QuantParams:
    """Uniform affine quantizer: real = (code - zero_point) * scale."""

    scale: float
    zero_point: int = 0
    bits: int = 8
    symmetric: bool = False

    def __post_init__(self):
        if self.bits not in (8, 16):
            raise ConfigError("only 8- and 16-bit activations/weights are supported")
        if self.scale <= 0:
            raise ConfigError("scale must be positive")

    @property
    def qmin(self) -> int:
        # symmetric quantizers keep the code range sign-balanced
        return -(1 << (self.bits - 1)) + (1 if self.symmetric else 0)

    @property
    def qmax(self) -> int:
        return (1 << (self.bits - 1)) - 1

    @property
    def np_dtype(self):
        return np.int8 if self.bits == 8 else np.int16


def act_qparams(lo: float, hi: float, bits: int = 8) -> QuantParams:
    """Asymmetric per-tensor quantizer covering the observed range."""
    lo, hi = float(lo), float(hi)
    if hi < lo:
        raise ConfigError(f"bad range [{lo}, {hi}]")
    qmin, qmax = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    if lo == 0.0 and hi == 0.0:
        return QuantParams(SCALE_FLOOR, 0, bits, False)
    scale = max((hi - lo) / (qmax - qmin), SCALE_FLOOR)
    zp = int(np.clip(np.round(qmin - lo / scale), qmin, qmax))
    return QuantParams(scale, zp, bits, False)


def weight_scales(w: np.ndarray, out_axis: int = 0) -> np.ndarray:
    """Symmetric per-output-channel int8 scales.

    Held at float32 precision (computed in float64) so a container
    round trip through f32 storage reproduces them bit-exactly.
    """
    reduce_axes = tuple(a for a in range(w.ndim) if a != out_axis)
    mx = np.max(np.abs(w.astype(np.float64)), axis=reduce_axes)
    scales = np.maximum(mx / 127.0, SCALE_FLOOR)
    return scales.astype(np.float32).astype(np.float64)


def quantize_weights(w: np.ndarray, scales: np.ndarray, out_axis: int = 0) -> np.ndarray:
    shape = [1] * w.ndim
    shape[out_axis] = -1
    q = np.round(w.astype(np.float64) / scales.reshape(shape))
    return np.clip(q, -127, 127).astype(np.int8)


def quantize(x, qp: QuantParams):
    q = np.round(np.asarray(x, dtype=np.float64) / qp.scale) + qp.zero_point
    return np.clip(q, qp.qmin, qp.qmax).astype(qp.np_dtype)


def dequantize(q, qp: QuantParams):
    return ((np.asarray(q, dtype=np.float64) - qp.zero_point) * qp.scale).astype(F32)


def fake_quant(x, qp: QuantParams):
    """Round-trip x through the quantizer's grid (float in, float out)."""
    q = np.round(np.asarray(x, dtype=np.float64) / qp.scale) + qp.zero_point
    q = np.clip(q, qp.qmin, qp.qmax)
    return ((q - qp.zero_point) * qp.scale).astype(F32)


_I32_MIN, _I32_MAX = -(1 << 31), (1 << 31) - 1


def _check_i32(acc):
    # int8 x int8 kernels promise int32 accumulators; C*k <= 512 taps of
    # 127*255 products stays well inside, but assert rather than assume
    if acc.size and (acc.min() < _I32_MIN or acc.max() > _I32_MAX):
        raise NumericError("int32 accumulator overflow in int8 kernel")


def int8_conv1d_k1(q_x, in_qp: QuantParams, q_w, w_scales, bias_i32, out_qp: QuantParams):
    """Kernel-1 integer convolution along frequency, int8 in / int8 out.

    q_x: (C_in, F) int8 codes under in_qp; q_w: (C_out, C_in) int8 with
    per-channel w_scales; bias_i32: (C_out,) pre-folded as
    round(b / (in_scale * w_scale)). Returns (C_out, F) int8 codes under
    out_qp. Accumulation is exact in int32.
    """
    if q_x.dtype != np.int8 or q_w.dtype != np.int8:
        raise ConfigError("int8_conv1d_k1 expects int8 inputs and weights")
    acc = q_w.astype(np.int64) @ (q_x.astype(np.int64) - in_qp.zero_point)
    _check_i32(acc)
    if bias_i32 is not None:
        acc = acc + bias_i32[:, None]
        _check_i32(acc)
    mult = (in_qp.scale * np.asarray(w_scales, dtype=np.float64) / out_qp.scale)[:, None]
    q_y = np.round(acc * mult) + out_qp.zero_point
    return np.clip(q_y, out_qp.qmin, out_qp.qmax).astype(np.int8)


def _int_affine(q_x, in_qp: QuantParams, q_w, w_scales, bias_i32, out_qp):
    """Generic integer affine: q_x (N, K) codes, q_w (M, K) int8.

    Returns float32 (N, M): requantized-then-dequantized when out_qp is a
    QuantParams, plain scaled floats when out_qp is None.
    """
    acc = (q_x.astype(np.int64) - in_qp.zero_point) @ q_w.astype(np.int64).T
    if in_qp.bits == 8:
        _check_i32(acc)
    if bias_i32 is not None:
        acc = acc + bias_i32
    mult = np.asarray(w_scales, dtype=np.float64) * in_qp.scale  # (M,)
    if out_qp is None:
        return (acc * mult).astype(F32)
    q_y = np.clip(np.round(acc * (mult / out_qp.scale)) + out_qp.zero_point,
                  out_qp.qmin, out_qp.qmax)
    return ((q_y - out_qp.zero_point) * out_qp.scale).astype(F32)


# --------------------------------------------------------------------------
# plans
# --------------------------------------------------------------------------

def region_names(cfg: ModelConfig) -> list[str]:
    return [f"elem.b{i}.lstm" for i in range(cfg.B)]


def preset_dtypes(cfg: ModelConfig, preset: str) -> dict[str, DType]:
    """Node -> storage type table for a named preset."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
    weights = list(param_specs(cfg))
    edges = activation_edges(cfg)
    regions = region_names(cfg)
    if preset == "fp32":
        return {n: DType.F32 for n in weights + edges + regions}

    d: dict[str, DType] = {}
    for n in weights:
        d[n] = DType.F32 if n.endswith((".b", ".bias")) else DType.I8
    for e in edges:
        d[e] = DType.I8
    for r in regions:
        d[r] = DType.F32
    if preset == "int8":
        return d

    # the mix-lstm family: cell math, states, and gate sums move to bf16
    for i in range(cfg.B):
        d[f"elem.b{i}.lstm"] = DType.BF16
        d[f"b{i}.lstm.bias"] = DType.BF16
        for leaf in ("gx", "gh", "gates", "c", "h", "proj"):
            d[f"act.b{i}.lstm.{leaf}"] = DType.BF16
    if preset == "mix-lstm":
        return d

    for n in ("encoder.w", "encoder.b", "decoder.w", "decoder.b"):
        d[n] = DType.BF16
    for e in ("act.input", "act.encoder.out", "act.decoder.out"):
        d[e] = DType.BF16
    if preset == "mix-lstm-fpconv":
        return d

    # odd blocks counted from one, i.e. internal indices 0, 2, 4, ...
    wide = range(0, cfg.B, 2) if preset.endswith("mixmlp") else range(cfg.B)
    for i in wide:
        for j in range(cfg.M):
            for leaf in ("tok.hidden", "tok.out", "tok.res",
                         "ch.hidden", "ch.out", "ch.res"):
                d[f"act.b{i}.m{j}.{leaf}"] = DType.I16
    return d


@dataclass
class PrecisionPlan:
    """A complete precision assignment plus calibrated activation ranges."""

    preset: str
    dtypes: dict[str, DType]
    ranges: dict[str, tuple[float, float]] = field(default_factory=dict)

    def validate(self, cfg: ModelConfig):
        expected = set(param_specs(cfg)) | set(activation_edges(cfg)) | set(region_names(cfg))
        got = set(self.dtypes)
        if got != expected:
            missing, extra = expected - got, got - expected
            raise ConfigError(
                f"plan does not cover the graph: missing={sorted(missing)[:4]} extra={sorted(extra)[:4]}")
        for name, dt in self.dtypes.items():
            if dt == DType.I32:
                raise ConfigError(f"{name}: int32 is an accumulator type, not a storage type")
            if dt == DType.I16 and not name.startswith("act."):
                raise ConfigError(f"{name}: int16 is activation-only")
        if self.has_int:
            missing = [e for e in activation_edges(cfg) if e not in self.ranges]
            if missing:
                raise ConfigError(f"plan with integer nodes needs calibrated ranges; missing {missing[:4]}")

    @property
    def has_int(self) -> bool:
        return any(dt in (DType.I8, DType.I16) for dt in self.dtypes.values())

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "dtypes": {k: v.name.lower() for k, v in self.dtypes.items()},
            "ranges": {k: [float(lo), float(hi)] for k, (lo, hi) in self.ranges.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrecisionPlan":
        try:
            dtypes = {k: DType[v.upper()] for k, v in d["dtypes"].items()}
            ranges = {k: (float(v[0]), float(v[1])) for k, v in d.get("ranges", {}).items()}
            return cls(preset=d["preset"], dtypes=dtypes, ranges=ranges)
        except (KeyError, AttributeError, TypeError) as exc:
            raise ConfigError(f"malformed precision plan: {exc}") from None


# --------------------------------------------------------------------------
# calibration
# --------------------------------------------------------------------------

class RangeObserver:
    """Running per-edge min/max over observed float activations."""

    def __init__(self):
        self.lo: dict[str, float] = {}
        self.hi: dict[str, float] = {}

    def record(self, name: str, x):
        x = np.asarray(x)
        if not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite activation at {name} during calibration")
        lo, hi = float(x.min()), float(x.max())
        self.lo[name] = min(lo, self.lo.get(name, lo))
        self.hi[name] = max(hi, self.hi.get(name, hi))

    def ranges(self) -> dict[str, tuple[float, float]]:
        return {k: (self.lo[k], self.hi[k]) for k in self.lo}


class ObservingExec(FloatExec):
    """Float executor that records every edge's value range."""

    def __init__(self, params, observer: RangeObserver):
        super().__init__(params)
        self.observer = observer

    def edge(self, name, x):
        self.observer.record(name, x)
        return x


def observe_ranges(fmodel: FloatModel, signals, embeddings=None) -> dict:
    """Run calibration audio through the float model, recording edge ranges.

    signals: iterable of 1-D float arrays (padded to whole hops). If the
    model is FiLM-conditioned and no embeddings are given, seeded unit
    normal embeddings stand in.
    """
    cfg = fmodel.config
    obs = RangeObserver()
    # stream state (LSTM h/c, conv history) starts at zero; the padding
    # of partial chunks is zero too, so every grid must cover it
    for e in activation_edges(cfg):
        obs.record(e, np.zeros(1, dtype=F32))
    ex = ObservingExec(fmodel.params, obs)
    rng = np.random.default_rng(2024)
    hop = fmodel.frame.hop_len
    for idx, sig in enumerate(signals):
        sig = np.asarray(sig, dtype=F32).ravel()
        if sig.size % hop:
            sig = np.pad(sig, (0, hop - sig.size % hop))
        emb = None
        if cfg.film_enabled:
            if embeddings is not None:
                emb = np.asarray(embeddings[idx], dtype=F32)
            else:
                emb = rng.standard_normal(cfg.embed_dim).astype(F32)
        state = fmodel.init_state()
        for k in range(sig.size // hop):
            frame, _ = stft_step(sig[k * hop : (k + 1) * hop], state.stft, fmodel.frame)
            forward_frame(cfg, ex, frame, state, embedding=emb)
    return obs.ranges()


def calibrate(fmodel: FloatModel, preset: str, signals, embeddings=None) -> PrecisionPlan:
    """Build a complete plan for `preset`, calibrated on the given audio."""
    dtypes = preset_dtypes(fmodel.config, preset)
    plan = PrecisionPlan(preset=preset, dtypes=dtypes)
    if plan.has_int:
        plan.ranges = observe_ranges(fmodel, signals, embeddings)
    plan.validate(fmodel.config)
    return plan


# --------------------------------------------------------------------------
# planned execution
# --------------------------------------------------------------------------

class QuantExec(FloatExec):
    """Executor that runs each node at its planned precision.

    Float32-assigned nodes fall through to FloatExec untouched, which is
    what makes an all-float plan bit-identical to the float model.
    """

    def __init__(self, cfg: ModelConfig, params, qweights, plan: PrecisionPlan):
        super().__init__(params)
        self.cfg = cfg
        self.plan = plan
        self.qweights = qweights  # wname -> (int8 codes, per-channel f64 scales)
        self._edge_qp: dict = {}
        self._in_qp: dict = {}
        self._bias: dict = {}
        self._wmat: dict = {}

    # precision lookups -----------------------------------------------------
    def _dt(self, node) -> DType:
        return self.plan.dtypes[node]

    def edge_qp(self, edge) -> QuantParams:
        qp = self._edge_qp.get(edge)
        if qp is None:
            bits = 16 if self._dt(edge) == DType.I16 else 8
            lo, hi = self.plan.ranges[edge]
            qp = self._edge_qp[edge] = act_qparams(lo, hi, bits)
        return qp

    def input_qp(self, edge) -> QuantParams:
        """Quantizer for an integer kernel's input coming from `edge`."""
        dt = self._dt(edge)
        if dt in (DType.I8, DType.I16):
            # the producer already snapped to this grid, so requantizing
            # with the same parameters is exact
            return self.edge_qp(edge)
        qp = self._in_qp.get(edge)
        if qp is None:
            lo, hi = self.plan.ranges[edge]
            qp = self._in_qp[edge] = act_qparams(lo, hi, 8)
        return qp

    def _folded_bias(self, wname, bname, in_qp):
        key = (wname, bname)
        out = self._bias.get(key)
        if out is None:
            if bname is None:
                out = None
            else:
                _, scales = self.qweights[wname]
                b = self.params[bname].astype(np.float64)
                out = np.round(b / (in_qp.scale * scales)).astype(np.int64)
            self._bias[key] = out
        return out

    def _weight_mat(self, wname):
        """Integer weights reshaped to (rows, K) for the matmul core."""
        mat = self._wmat.get(wname)
        if mat is None:
            qw, scales = self.qweights[wname]
            if wname == "decoder.w":
                # gather form of the scatter decoder: flip taps, swap axes
                qw = np.ascontiguousarray(qw[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
                rows = qw.reshape(qw.shape[0], -1)
            elif wname == "decompress.w":
                # (C_in, C_out, alpha) -> one row per (out bin group) pair
                rows = np.ascontiguousarray(qw.transpose(1, 2, 0)).reshape(-1, qw.shape[0])
                scales = np.repeat(scales, qw.shape[2])
            else:
                rows = qw.reshape(qw.shape[0], -1)
            mat = self._wmat[wname] = (rows, scales)
        return mat

    def _out_qp(self, out_edge):
        return self.edge_qp(out_edge) if self._dt(out_edge) in (DType.I8, DType.I16) else None

    def _finish(self, y, out_edge):
        # integer kernels already dequantize; bf16 targets round here
        if self._dt(out_edge) == DType.BF16:
            return bf16_round(y)
        return y

    # parameters ------------------------------------------------------------
    def param(self, name):
        # bf16-assigned tensors are pre-rounded at plan application
        return self.params[name]

    # edges -----------------------------------------------------------------
    def edge(self, name, x):
        dt = self._dt(name)
        if dt == DType.F32:
            return x
        if dt == DType.BF16:
            return bf16_round(x)
        return fake_quant(x, self.edge_qp(name))

    # affine layers ----------------------------------------------------------
    def _bf16_affine(self, fn, wname, bname, x, *args):
        y = fn(bf16_round(x), self.params[wname],
               self.params[bname] if bname else np.zeros(self.params[wname].shape[0], dtype=F32),
               *args)
        return bf16_round(y)

    def dense(self, wname, bname, x, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().dense(wname, bname, x, in_edge, out_edge)
        if dt == DType.BF16:
            return self._bf16_affine(ops.linear, wname, bname, x)
        in_qp = self.input_qp(in_edge)
        qw, scales = self.qweights[wname]
        y = _int_affine(quantize(x, in_qp), in_qp, qw, scales,
                        self._folded_bias(wname, bname, in_qp), self._out_qp(out_edge))
        return self._finish(y, out_edge)

    def kernel1(self, wname, bname, x, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().kernel1(wname, bname, x, in_edge, out_edge)
        if dt == DType.BF16:
            y = ops.conv1d_k1(bf16_round(x), self.params[wname],
                              self.params[bname] if bname
                              else np.zeros(self.params[wname].shape[0], dtype=F32))
            return bf16_round(y)
        in_qp = self.input_qp(in_edge)
        qw, scales = self.qweights[wname]
        bias = self._folded_bias(wname, bname, in_qp)
        out_qp = self._out_qp(out_edge)
        if in_qp.bits == 8 and out_qp is not None and out_qp.bits == 8:
            q_y = int8_conv1d_k1(quantize(x, in_qp), in_qp, qw, scales,
                                 np.zeros(qw.shape[0], dtype=np.int64) if bias is None else bias,
                                 out_qp)
            return dequantize(q_y, out_qp)
        y = _int_affine(quantize(x, in_qp).T, in_qp, qw, scales, bias, out_qp).T
        return self._finish(y, out_edge)

    def conv2d(self, wname, bname, window, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().conv2d(wname, bname, window, in_edge, out_edge)
        if dt == DType.BF16:
            return self._bf16_affine(ops._conv2d_frame, wname, bname, window, 3)
        return self._int_conv(wname, bname, window, in_edge, out_edge, gathered=False)

    def deconv2d(self, wname, bname, window, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().deconv2d(wname, bname, window, in_edge, out_edge)
        if dt == DType.BF16:
            w = self.params[wname][:, :, ::-1, ::-1].transpose(1, 0, 2, 3)
            y = ops._conv2d_frame(bf16_round(window), np.ascontiguousarray(w),
                                  self.params[bname], 3)
            return bf16_round(y)
        return self._int_conv(wname, bname, window, in_edge, out_edge, gathered=True)

    def _int_conv(self, wname, bname, window, in_edge, out_edge, gathered):
        in_qp = self.input_qp(in_edge)
        wmat, scales = self._weight_mat(wname)
        q_win = quantize(window, in_qp)
        pad = 1  # (k_f - 1) // 2 for the 3x3 kernels of this graph
        q_pad = np.pad(q_win, ((0, 0), (pad, pad), (0, 0)),
                       constant_values=in_qp.zero_point)
        patches = np.lib.stride_tricks.sliding_window_view(q_pad, 3, axis=1)
        patches = patches.transpose(1, 0, 3, 2)  # (F, C_in, k_f, k_t)
        q_x = patches.reshape(patches.shape[0], -1)
        bias = self._folded_bias(wname, bname, in_qp)
        y = _int_affine(q_x, in_qp, wmat, scales, bias, self._out_qp(out_edge)).T
        return self._finish(y, out_edge)

    def compress(self, wname, bname, x, alpha, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().compress(wname, bname, x, alpha, in_edge, out_edge)
        if dt == DType.BF16:
            return self._bf16_affine(ops.freq_compress, wname, bname, x, alpha)
        in_qp = self.input_qp(in_edge)
        qw, scales = self.qweights[wname]
        q_x = quantize(x, in_qp)
        f_c = -(-q_x.shape[1] // alpha)
        q_pad = np.pad(q_x, ((0, 0), (0, f_c * alpha - q_x.shape[1])),
                       constant_values=in_qp.zero_point)
        groups = q_pad.reshape(q_x.shape[0], f_c, alpha).transpose(1, 0, 2).reshape(f_c, -1)
        wmat = qw.reshape(qw.shape[0], -1)  # (C_out, C_in * alpha)
        bias = self._folded_bias(wname, bname, in_qp)
        y = _int_affine(groups, in_qp, wmat, scales, bias, self._out_qp(out_edge)).T
        return self._finish(y, out_edge)

    def decompress(self, wname, bname, x, alpha, f_out, in_edge, out_edge):
        dt = self._dt(wname)
        if dt == DType.F32:
            return super().decompress(wname, bname, x, alpha, f_out, in_edge, out_edge)
        if dt == DType.BF16:
            return self._bf16_affine(ops.freq_decompress, wname, bname, x, alpha, f_out)
        in_qp = self.input_qp(in_edge)
        wmat, scales = self._weight_mat(wname)  # (C_out * alpha, C_in)
        # bias enters after the (f, k) unfold so each output bin sees it once
        y = _int_affine(quantize(x, in_qp).T, in_qp, wmat, scales, None, None)
        c_out = self.cfg.C
        y = y.reshape(-1, c_out, alpha).transpose(1, 0, 2).reshape(c_out, -1)[:, :f_out]
        y = y + self.params[bname][:, None]
        out_qp = self._out_qp(out_edge)
        if out_qp is not None:
            return fake_quant(y, out_qp)
        return self._finish(y.astype(F32), out_edge)

    # elementwise ------------------------------------------------------------
    def _elem(self, region, y):
        if self._dt(region) == DType.BF16:
            return bf16_round(y)
        return y

    def add(self, region, a, b):
        return self._elem(region, a + b)

    def mul(self, region, a, b):
        return self._elem(region, a * b)

    def sigmoid(self, region, x):
        return self._elem(region, ops.sigmoid(x))

    def tanh(self, region, x):
        return self._elem(region, ops.tanh(x))


class QuantizedModel(StreamingModel):
    """A model executing under a precision plan.

    params holds every float tensor (biases always; weights assigned
    f32 or bf16, the latter pre-rounded). qweights holds int8 codes and
    per-channel scales for integer-assigned weights.
    """

    def __init__(self, cfg: ModelConfig, plan: PrecisionPlan, params: dict,
                 qweights: dict, frame_cfg: FrameConfig | None = None):
        plan.validate(cfg)
        self.config = cfg
        self.frame = frame_cfg or FrameConfig()
        if self.frame.bins != cfg.F:
            raise ConfigError(f"F={cfg.F} does not match framing bins {self.frame.bins}")
        for name in param_specs(cfg):
            dt = plan.dtypes[name]
            if dt == DType.I8:
                if name not in qweights:
                    raise ConfigError(f"missing integer weights for {name}")
            elif name not in params:
                raise ConfigError(f"missing float tensor {name}")
        self.plan = plan
        self.params = params
        self.qweights = qweights
        self._exec = QuantExec(cfg, params, qweights, plan)

    @property
    def preset(self) -> str:
        return self.plan.preset

    def _executor(self):
        return self._exec


def apply_plan(fmodel: FloatModel, plan: PrecisionPlan) -> QuantizedModel:
    """Materialize a float model under a precision plan."""
    plan.validate(fmodel.config)
    params: dict = {}
    qweights: dict = {}
    for name, arr in fmodel.params.items():
        dt = plan.dtypes[name]
        if dt == DType.I8:
            axis = _OUT_AXIS.get(name, 0)
            scales = weight_scales(arr, axis)
            qweights[name] = (quantize_weights(arr, scales, axis), scales)
        elif dt == DType.BF16:
            params[name] = bf16_round(arr)
        else:
            params[name] = arr
    return QuantizedModel(fmodel.config, plan, params, qweights, fmodel.frame)


def quantize_model(fmodel: FloatModel, preset: str, signals, embeddings=None) -> QuantizedModel:
    """Calibrate on the given audio and apply the preset in one step."""
    return apply_plan(fmodel, calibrate(fmodel, preset, signals, embeddings))
