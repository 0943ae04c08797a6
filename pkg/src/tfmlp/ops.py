"""Float numeric kernels: convolutions, affine maps, activations.

Array layout conventions used throughout the engine:

* spectral frames:   (channels, freq) for a single time step
* frame sequences:   (channels, freq, time), row-major
* conv weights:      (out_ch, in_ch, k_freq, k_time)
* deconv weights:    (in_ch, out_ch, k_freq, k_time), scatter-add semantics

Time is always causal: a kernel of temporal size ``k_t`` sees the current
frame plus ``k_t - 1`` history frames and nothing from the future. The
frequency axis is padded symmetrically with zeros so stride-1 kernels
preserve the bin count.

All kernels are pure functions; streaming state (conv history) is passed
in and returned explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

F32 = np.float32


@dataclass(frozen=True)
class ConvSpec:
    """Shape contract for a 2D convolution over (freq, time)."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]  # (k_f, k_t)
    stride: tuple[int, int] = (1, 1)
    transposed: bool = False

    def __post_init__(self):
        k_f, k_t = self.kernel
        if min(self.in_channels, self.out_channels, k_f, k_t) < 1:
            raise ConfigError(f"invalid conv spec: {self}")
        if self.stride != (1, 1):
            raise ConfigError("only stride (1, 1) 2D convolutions are supported")

    @property
    def history_frames(self) -> int:
        # causal padding in time: k_t - 1 past frames, zero future frames
        return self.kernel[1] - 1

    def check_weights(self, weights, bias):
        k_f, k_t = self.kernel
        wshape = (
            (self.in_channels, self.out_channels, k_f, k_t)
            if self.transposed
            else (self.out_channels, self.in_channels, k_f, k_t)
        )
        if weights.shape != wshape:
            raise ConfigError(f"conv weights {weights.shape} do not match spec {wshape}")
        if bias.shape != (self.out_channels,):
            raise ConfigError(f"conv bias {bias.shape} != ({self.out_channels},)")


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"non-finite values in {what}")


def conv2d_causal(x, spec: ConvSpec, weights, bias, history):
    """One streaming step of a causal 2D convolution.

    x: (C_in, F) current frame. history: (C_in, F, k_t-1) past frames,
    oldest first (zeros at stream start). Returns ((C_out, F), new history).
    Frequency is zero-padded (k_f-1)//2 per side so the bin count is kept.
    """
    spec.check_weights(weights, bias)
    k_f, k_t = spec.kernel
    c_in, f_bins = x.shape
    if c_in != spec.in_channels:
        raise ConfigError(f"input channels {c_in} != spec {spec.in_channels}")
    if history.shape != (c_in, f_bins, k_t - 1):
        raise ConfigError(f"history shape {history.shape} != {(c_in, f_bins, k_t - 1)}")
    _check_finite(x, "conv2d_causal input")

    window = np.concatenate([history, x[:, :, None]], axis=2)  # (C_in, F, k_t)
    out = _conv2d_frame(window, weights, bias, k_f)
    new_history = window[:, :, 1:].copy() if k_t > 1 else history
    return out, new_history


def _conv2d_frame(window, weights, bias, k_f):
    """Convolve a (C_in, F, k_t) window down to one (C_out, F) output frame."""
    pad = (k_f - 1) // 2
    w_in = np.pad(window, ((0, 0), (pad, pad), (0, 0)))
    # (C_in, F, k_f, k_t): sliding view over the padded frequency axis
    patches = np.lib.stride_tricks.sliding_window_view(w_in, k_f, axis=1)
    patches = patches.transpose(0, 1, 3, 2)  # (C_in, F, k_f, k_t)
    out = np.einsum("cfkt,ockt->of", patches, weights, optimize=True) + bias[:, None]
    return out.astype(F32, copy=False)


def conv2d_causal_offline(x_seq, spec: ConvSpec, weights, bias):
    """Whole-sequence causal conv: x_seq (C_in, F, T) -> (C_out, F, T)."""
    spec.check_weights(weights, bias)
    k_f, k_t = spec.kernel
    pad_f = (k_f - 1) // 2
    xp = np.pad(x_seq, ((0, 0), (pad_f, pad_f), (k_t - 1, 0)))
    pf = np.lib.stride_tricks.sliding_window_view(xp, k_f, axis=1)
    pt = np.lib.stride_tricks.sliding_window_view(pf, k_t, axis=2)
    # pt: (C_in, F, T, k_f, k_t)
    out = np.einsum("cftkj,ockj->oft", pt, weights, optimize=True)
    out += bias[:, None, None]
    return out.astype(F32, copy=False)


def conv2d_transposed_step(x, spec: ConvSpec, weights, bias, history):
    """One streaming step of a causal transposed 2D convolution.

    Scatter semantics: y[o, f+df, t+dt] += x[c, f, t] * w[c, o, df, dt].
    Emitting output frame t means gathering x[:, :, t-dt] for dt in
    [0, k_t), so the step needs k_t-1 past *input* frames. The transposed
    frequency axis grows by k_f-1 bins; the center F bins are kept, which
    is the adjoint of the encoder's symmetric padding.
    """
    spec.check_weights(weights, bias)
    k_f, k_t = spec.kernel
    c_in, f_bins = x.shape
    if history.shape != (c_in, f_bins, k_t - 1):
        raise ConfigError(f"history shape {history.shape} != {(c_in, f_bins, k_t - 1)}")
    _check_finite(x, "transposed conv input")

    window = np.concatenate([history, x[:, :, None]], axis=2)  # (C_in, F, k_t)
    # gather form of the scatter: flip both kernel axes, then run a plain
    # correlation with symmetric frequency padding
    w_g = weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3)  # (C_out, C_in, k_f, k_t)
    out = _conv2d_frame(window, np.ascontiguousarray(w_g), bias, k_f)
    new_history = window[:, :, 1:].copy() if k_t > 1 else history
    return out, new_history


def conv2d_transposed_offline(x_seq, spec: ConvSpec, weights, bias):
    """Whole-sequence transposed conv by true scatter-add (oracle-friendly).

    x_seq (C_in, F, T) -> (C_out, F, T): full scatter output is
    (F + k_f - 1, T + k_t - 1); the center F bins and first T frames are
    returned, matching the streaming step exactly.
    """
    spec.check_weights(weights, bias)
    k_f, k_t = spec.kernel
    c_in, f_bins, t_frames = x_seq.shape
    full = np.zeros((spec.out_channels, f_bins + k_f - 1, t_frames + k_t - 1), dtype=np.float64)
    for df in range(k_f):
        for dt in range(k_t):
            # w[c, o, df, dt] applied to every (f, t) position at once
            contrib = np.einsum("cft,co->oft", x_seq, weights[:, :, df, dt])
            full[:, df : df + f_bins, dt : dt + t_frames] += contrib
    pad = (k_f - 1) // 2
    out = full[:, pad : pad + f_bins, :t_frames] + bias[:, None, None]
    return out.astype(F32)


def conv1d_k1(x, weights, bias):
    """Kernel-1 1D convolution along frequency: out[:, f] = W @ x[:, f] + b.

    x: (C_in, F), weights: (C_out, C_in), bias: (C_out,). Every frequency
    column is an independent affine map, which is what makes a single
    batched step over all bins possible.
    """
    if x.ndim != 2 or weights.ndim != 2 or weights.shape[1] != x.shape[0]:
        raise ConfigError(
            f"conv1d_k1 channel mismatch: input {x.shape}, weights {weights.shape}"
        )
    if bias.shape != (weights.shape[0],):
        raise ConfigError(f"conv1d_k1 bias {bias.shape} != ({weights.shape[0]},)")
    return (weights @ x + bias[:, None]).astype(F32, copy=False)


def linear(x, weights, bias):
    """Affine map over the trailing dim: (.., N) @ (M, N)^T + (M,) -> (.., M)."""
    if x.shape[-1] != weights.shape[1]:
        raise ConfigError(f"linear dim mismatch: input {x.shape}, weights {weights.shape}")
    if bias.shape != (weights.shape[0],):
        raise ConfigError(f"linear bias {bias.shape} != ({weights.shape[0]},)")
    return (x @ weights.T + bias).astype(F32, copy=False)


def relu(x):
    return np.maximum(x, 0)


def sigmoid(x):
    # evaluated via exp on the negative half-line; saturates cleanly
    out = np.empty_like(x, dtype=F32)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tanh(x):
    return np.tanh(x).astype(F32, copy=False)


ACTIVATIONS = {"relu": relu, "sigmoid": sigmoid, "tanh": tanh}


def activation(x, kind: str):
    try:
        fn = ACTIVATIONS[kind]
    except KeyError:
        raise ConfigError(f"unknown activation {kind!r}") from None
    return fn(np.asarray(x, dtype=F32))


def freq_compress(x, weights, bias, alpha: int):
    """Strided conv along frequency: (C, F) -> (C_out, ceil(F/alpha)).

    Kernel size equals the stride, so bins are grouped into disjoint
    width-alpha windows (the last window is zero-padded).
    """
    c_in, f_bins = x.shape
    c_out = weights.shape[0]
    if weights.shape != (c_out, c_in, alpha):
        raise ConfigError(f"compress weights {weights.shape} != {(c_out, c_in, alpha)}")
    f_c = -(-f_bins // alpha)
    xp = np.pad(x, ((0, 0), (0, f_c * alpha - f_bins)))
    groups = xp.reshape(c_in, f_c, alpha)
    out = np.einsum("cfk,ock->of", groups, weights) + bias[:, None]
    return out.astype(F32, copy=False)


def freq_decompress(x, weights, bias, alpha: int, f_out: int):
    """Transposed stride-alpha conv along frequency: (C, F_c) -> (C_out, f_out)."""
    c_in, f_c = x.shape
    c_out = weights.shape[1]
    if weights.shape != (c_in, c_out, alpha):
        raise ConfigError(f"decompress weights {weights.shape} != {(c_in, c_out, alpha)}")
    if f_out > f_c * alpha:
        raise ConfigError(f"cannot decompress {f_c} bins to {f_out} with alpha {alpha}")
    # stride == kernel: each output bin receives exactly one (f, k) product
    out = np.einsum("cf,cok->ofk", x, weights).reshape(c_out, f_c * alpha)
    out = out[:, :f_out] + bias[:, None]
    return out.astype(F32, copy=False)
