"""Self-check suites runnable from the CLI (exit 3 on any breach).

Each suite checks one load-bearing numerical property against an
independent reference implementation and returns a pass/fail result
with the measured margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import VerificationError
from .model import (ConvLstmParams, ModelConfig, conv_batched_lstm_step,
                    init_random, reference_batched_lstm_step)
from .quant import act_qparams, fake_quant, int8_conv1d_k1, quantize, weight_scales, quantize_weights
from .stft import FrameConfig, StftState, istft_step, stft_step

F32 = np.float32


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def suite_lstm_oracle(seed: int = 0, draws: int = 25) -> SuiteResult:
    """Batched-over-bins LSTM step vs the per-bin reference cell."""
    rng = np.random.default_rng(seed)
    c, h, f = 32, 32, 81
    worst = 0.0
    for _ in range(draws):
        p = ConvLstmParams(
            wx=rng.standard_normal((4 * h, c)).astype(F32) * 0.2,
            wh=rng.standard_normal((4 * h, h)).astype(F32) * 0.2,
            bias=rng.standard_normal(4 * h).astype(F32) * 0.1,
            proj_w=rng.standard_normal((c, h)).astype(F32) * 0.2,
            proj_b=rng.standard_normal(c).astype(F32) * 0.1,
        )
        x = rng.standard_normal((c, f)).astype(F32)
        h0 = rng.standard_normal((h, f)).astype(F32) * 0.5
        c0 = rng.standard_normal((h, f)).astype(F32) * 0.5
        out_a, h_a, c_a = conv_batched_lstm_step(x, p, h0, c0)
        out_b, h_b, c_b = reference_batched_lstm_step(x, p, h0, c0)
        worst = max(worst,
                    float(np.abs(out_a - out_b).max()),
                    float(np.abs(h_a - h_b).max()),
                    float(np.abs(c_a - c_b).max()))
    return SuiteResult("lstm-oracle", worst < 1e-6,
                       f"max |delta| {worst:.2e} over {draws} draws (tol 1e-6)")


def suite_stft_roundtrip(seed: int = 0) -> SuiteResult:
    """Chunked analysis/synthesis reconstructs the signal interior."""
    cfg = FrameConfig()
    rng = np.random.default_rng(seed)
    n = cfg.sample_rate  # one second
    sig = rng.standard_normal(n).astype(F32)
    state = StftState.initial(cfg, 1)
    outs = []
    for k in range(n // cfg.hop_len):
        frame, _ = stft_step(sig[k * cfg.hop_len : (k + 1) * cfg.hop_len], state, cfg)
        audio, _ = istft_step(frame, state, cfg)
        outs.append(audio[0])
    out = np.concatenate(outs)
    delay = cfg.win_len - cfg.hop_len  # algorithmic latency of the synthesis path
    lo, hi = cfg.win_len, out.size - cfg.win_len
    err = out[lo:hi] - sig[lo - delay : hi - delay]
    rel = float(np.sqrt(np.mean(err**2) / np.mean(sig**2)))
    return SuiteResult("stft-roundtrip", rel < 1e-6,
                       f"interior relative RMS {rel:.2e} (tol 1e-6)")


def suite_stream_offline(seed: int = 0, seconds: float = 1.0) -> SuiteResult:
    """Chunk-by-chunk forward equals whole-signal forward."""
    model = init_random(ModelConfig(), seed)
    rng = np.random.default_rng(seed + 1)
    hop = model.frame.hop_len
    n = int(seconds * model.frame.sample_rate) // hop * hop
    sig = (rng.standard_normal(n) * 0.1).astype(F32)
    state = model.init_state()
    chunks = [model.forward_chunk(sig[k * hop : (k + 1) * hop], state)
              for k in range(n // hop)]
    streamed = np.concatenate(chunks, axis=1)
    offline = model.forward_offline(sig)
    worst = float(np.abs(streamed - offline[:, :streamed.shape[1]]).max())
    return SuiteResult("stream-offline", worst < 1e-5,
                       f"max |delta| {worst:.2e} over {seconds:.0f}s (tol 1e-5)")


def suite_causality(seed: int = 0) -> SuiteResult:
    """Perturbing chunk k leaves all chunks before k bit-identical."""
    model = init_random(ModelConfig(), seed)
    rng = np.random.default_rng(seed + 2)
    hop = model.frame.hop_len
    n_chunks = 50
    sig = (rng.standard_normal(n_chunks * hop) * 0.1).astype(F32)

    def run(s):
        state = model.init_state()
        return [model.forward_chunk(s[k * hop : (k + 1) * hop], state).tobytes()
                for k in range(n_chunks)]

    base = run(sig)
    for k in (5, 25, 49):
        bumped = sig.copy()
        bumped[k * hop : (k + 1) * hop] += rng.standard_normal(hop).astype(F32)
        got = run(bumped)
        if got[:k] != base[:k]:
            return SuiteResult("causality", False,
                               f"past output changed when chunk {k} was perturbed")
        if got[k] == base[k]:
            return SuiteResult("causality", False,
                               f"perturbing chunk {k} had no effect at all")
    return SuiteResult("causality", True,
                       "chunks before k bit-identical for k in {5, 25, 49}")


def suite_quant_lsb(seed: int = 0, layers: int = 30) -> SuiteResult:
    """Integer kernel output within 1 LSB of the fake-quant float simulation."""
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(layers):
        c_in = int(rng.integers(4, 64))
        c_out = int(rng.integers(4, 64))
        f = int(rng.integers(8, 96))
        x = (rng.standard_normal((c_in, f)) * rng.uniform(0.2, 3.0)).astype(F32)
        w = (rng.standard_normal((c_out, c_in)) * rng.uniform(0.05, 1.0)).astype(F32)
        b = (rng.standard_normal(c_out) * 0.1).astype(F32)
        in_qp = act_qparams(x.min(), x.max(), 8)
        scales = weight_scales(w)
        qw = quantize_weights(w, scales)
        # the simulation mirrors integer bias folding
        bias_i32 = np.round(b.astype(np.float64) / (in_qp.scale * scales)).astype(np.int64)
        x_dq = fake_quant(x, in_qp).astype(np.float64)
        w_dq = qw.astype(np.float64) * scales[:, None]
        y_real = w_dq @ x_dq + (bias_i32 * in_qp.scale * scales)[:, None]
        out_qp = act_qparams(y_real.min(), y_real.max(), 8)
        q_sim = quantize(y_real, out_qp).astype(np.int64)
        q_int = int8_conv1d_k1(quantize(x, in_qp), in_qp, qw, scales, bias_i32, out_qp).astype(np.int64)
        worst = max(worst, int(np.abs(q_int - q_sim).max()))
    return SuiteResult("quant-lsb", worst <= 1,
                       f"max integer/simulation gap {worst} LSB over {layers} layers (tol 1)")


SUITES = (suite_lstm_oracle, suite_stft_roundtrip, suite_stream_offline,
          suite_causality, suite_quant_lsb)


def run_all(seed: int = 0) -> list[SuiteResult]:
    return [fn(seed) for fn in SUITES]


def run_or_raise(seed: int = 0) -> list[SuiteResult]:
    results = run_all(seed)
    failures = [r for r in results if not r.passed]
    if failures:
        raise VerificationError("; ".join(r.line() for r in failures))
    return results
