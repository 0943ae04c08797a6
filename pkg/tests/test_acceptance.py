"""Acceptance gate: twelve numbered criteria, one pass line each.

Each test prints a single "PASS criterion N: ..." line on success so a
verbose run reads as a checklist. Tolerances are pinned; do not loosen.
"""

import json

import numpy as np

from tfmlp import cli
from tfmlp.audio import read_wav, write_wav
from tfmlp.container import save_model
from tfmlp.engine import runtime_ordering_benchmark
from tfmlp.metrics import pit_score, si_sdr
from tfmlp.model import (
    DEFAULT_BSS,
    DEFAULT_TSE,
    ConvLstmParams,
    conv_batched_lstm_step,
    param_count,
    reference_batched_lstm_step,
)
from tfmlp.quant import (
    PRESETS,
    PrecisionPlan,
    act_qparams,
    apply_plan,
    dequantize,
    fake_quant,
    int8_conv1d_k1,
    observe_ranges,
    preset_dtypes,
    quantize,
    quantize_weights,
    weight_scales,
)
from tfmlp.stft import FrameConfig, StftState, istft_step, stft_step

F32 = np.float32


def _stream(model, signal, embedding=None):
    state = model.init_state()
    hop = model.frame.hop_len
    outs = [
        model.forward_chunk(signal[k * hop : (k + 1) * hop], state, embedding)
        for k in range(len(signal) // hop)
    ]
    return np.concatenate(outs, axis=1)


def test_criterion_01_conv_batched_lstm_equivalence():
    c = h = 32
    f = 81
    worst = 0.0
    rng = np.random.default_rng(101)
    for _ in range(100):
        # weight magnitudes near the init distribution U(+-1/sqrt(fan_in))
        p = ConvLstmParams(
            wx=rng.standard_normal((4 * h, c)).astype(F32) * 0.3,
            wh=rng.standard_normal((4 * h, h)).astype(F32) * 0.3,
            bias=rng.standard_normal(4 * h).astype(F32) * 0.1,
            proj_w=rng.standard_normal((c, h)).astype(F32) * 0.3,
            proj_b=rng.standard_normal(c).astype(F32) * 0.1,
        )
        x = rng.standard_normal((c, f)).astype(F32)
        h0 = rng.standard_normal((h, f)).astype(F32) * 0.5
        c0 = rng.standard_normal((h, f)).astype(F32) * 0.5
        out_a, h_a, c_a = conv_batched_lstm_step(x, p, h0, c0)
        out_b, h_b, c_b = reference_batched_lstm_step(x, p, h0, c0)
        for got, want in ((out_a, out_b), (h_a, h_b), (c_a, c_b)):
            worst = max(worst, float(np.abs(got - want).max()))
    assert worst < 1e-6
    print(f"PASS criterion 1: conv-batched LSTM == reference over 100 draws, "
          f"max |delta| {worst:.2e} < 1e-6")


def test_criterion_02_stft_perfect_reconstruction():
    cfg = FrameConfig()
    win, hop = cfg.win_len, cfg.hop_len
    delay = win - hop
    rng = np.random.default_rng(202)
    sig = rng.standard_normal(16000).astype(F32)

    state = StftState.initial(cfg, n_streams=1)
    chunks = []
    for k in range(len(sig) // hop):
        frame, state = stft_step(sig[k * hop : (k + 1) * hop], state, cfg)
        audio, state = istft_step(frame, state, cfg)
        chunks.append(audio[0])
    out = np.concatenate(chunks)

    lo, hi = win, len(sig) - win
    err = out[lo:hi] - sig[lo - delay : hi - delay]
    rel = float(np.sqrt(np.mean(err**2)) / np.sqrt(np.mean(sig**2)))
    assert rel < 1e-6
    print(f"PASS criterion 2: 1 s streaming analysis/synthesis at 160/96, "
          f"interior error {rel:.2e} relative RMS < 1e-6")


def test_criterion_03_streaming_equals_offline(bss_model):
    rng = np.random.default_rng(303)
    sig = rng.standard_normal(334 * 96).astype(F32) * 0.3  # 2 s, whole hops
    streamed = _stream(bss_model, sig)
    offline = bss_model.forward_offline(sig)
    delta = float(np.abs(streamed - offline[:, : streamed.shape[1]]).max())
    assert delta < 1e-5
    print(f"PASS criterion 3: 2 s chunk-wise vs whole-signal forward, "
          f"max |delta| {delta:.2e} < 1e-5")


def test_criterion_04_causality(bss_model):
    hop = bss_model.frame.hop_len
    n_chunks = 50
    rng = np.random.default_rng(404)
    sig = rng.standard_normal(n_chunks * hop).astype(F32) * 0.3

    def run(signal):
        state = bss_model.init_state()
        return [bss_model.forward_chunk(signal[k * hop : (k + 1) * hop], state)
                for k in range(n_chunks)]

    base = run(sig)
    for k in (5, 25, 49):
        bumped = sig.copy()
        bumped[k * hop : (k + 1) * hop] += rng.standard_normal(hop).astype(F32)
        other = run(bumped)
        for j in range(k):
            assert base[j].tobytes() == other[j].tobytes(), (k, j)
        assert any(base[j].tobytes() != other[j].tobytes()
                   for j in range(k, n_chunks))
    print("PASS criterion 4: perturbing chunk k in {5,25,49} of 50 leaves "
          "chunks < k bit-identical")


def test_criterion_05_parameter_counts():
    bss, tse = param_count(DEFAULT_BSS), param_count(DEFAULT_TSE)
    assert abs(bss - 493_000) / 493_000 <= 0.15
    assert abs(tse - 509_000) / 509_000 <= 0.15
    print(f"PASS criterion 5: parameter counts {bss} (target 493K) and "
          f"{tse} (target 509K), both within 15%")


def test_criterion_06_model_size_budget(int8_model, tmp_path):
    path = tmp_path / "int8.tfmlp"
    save_model(int8_model, path)
    size = path.stat().st_size
    assert size <= 600_000
    assert size <= 1_500_000
    print(f"PASS criterion 6: int8 container {size} bytes "
          f"<= 600000 (and <= 1.5 MB hard cap)")


def test_criterion_07_int8_kernel_lsb_fidelity():
    rng = np.random.default_rng(707)
    worst = 0
    for _ in range(100):
        c_in = int(rng.integers(2, 64))
        c_out = int(rng.integers(2, 64))
        f = int(rng.integers(1, 128))
        x = rng.uniform(-2.0, 2.0, (c_in, f)).astype(F32)
        w = rng.standard_normal((c_out, c_in)).astype(F32) * 0.5
        b = rng.standard_normal(c_out).astype(F32) * 0.2
        in_qp = act_qparams(float(x.min()), float(x.max()))
        s_w = weight_scales(w)
        q_w = quantize_weights(w, s_w)
        bias_i32 = np.round(b.astype(np.float64) / (in_qp.scale * s_w)).astype(np.int64)
        x_dq = dequantize(quantize(x, in_qp), in_qp).astype(np.float64)
        y_real = (q_w.astype(np.float64) * s_w[:, None]) @ x_dq \
            + (bias_i32 * in_qp.scale * s_w)[:, None]
        out_qp = act_qparams(float(y_real.min()), float(y_real.max()))
        got = int8_conv1d_k1(quantize(x, in_qp), in_qp, q_w, s_w, bias_i32, out_qp)
        want = quantize(y_real, out_qp)
        worst = max(worst, int(np.abs(got.astype(int) - want.astype(int)).max()))
    assert worst <= 1
    print(f"PASS criterion 7: int8 kernel within {worst} LSB of fake-quant "
          f"simulation over 100 random layers")


def test_criterion_08_fake_quant_properties():
    rng = np.random.default_rng(808)
    for _ in range(50):
        scale = float(10 ** rng.uniform(-5, 1))
        zp = int(rng.integers(-128, 128))
        qp = act_qparams(scale * (-128 - zp), scale * (127 - zp))
        x = rng.uniform(-200 * scale, 200 * scale, 256).astype(F32)

        once = fake_quant(x, qp)
        np.testing.assert_array_equal(fake_quant(once, qp), once)  # idempotent

        order = np.sort(x)
        fq = fake_quant(order, qp)
        assert np.all(np.diff(fq) >= 0)  # monotone

        lo, hi = qp.scale * (qp.qmin - qp.zero_point), qp.scale * (qp.qmax - qp.zero_point)
        interior = x[(x > lo) & (x < hi)]
        if interior.size:
            assert np.abs(fake_quant(interior, qp) - interior).max() <= qp.scale / 2 + 1e-7

        sym = weight_scales(x.reshape(1, -1))
        q_sym = quantize_weights(x.reshape(1, -1), sym) * sym
        q_neg = quantize_weights(-x.reshape(1, -1), sym) * sym
        np.testing.assert_allclose(q_neg, -q_sym, atol=1e-12)  # odd symmetry
    print("PASS criterion 8: fake_quant idempotence, monotonicity, "
          "half-LSB error bound, and sign symmetry hold")


def test_criterion_09_preset_completeness(bss_model, calib_signal):
    ranges = observe_ranges(bss_model, [calib_signal])
    for preset in PRESETS:
        plan = PrecisionPlan(preset, preset_dtypes(DEFAULT_BSS, preset), dict(ranges))
        plan.validate(DEFAULT_BSS)  # raises on any unassigned node

    fp32 = apply_plan(bss_model, PrecisionPlan(
        "fp32", preset_dtypes(DEFAULT_BSS, "fp32"), dict(ranges)))
    rng = np.random.default_rng(909)
    sig = rng.standard_normal(9600).astype(F32) * 0.3
    np.testing.assert_array_equal(_stream(fp32, sig), _stream(bss_model, sig))
    print(f"PASS criterion 9: all {len(PRESETS)} presets build complete plans; "
          f"all-f32 plan is forward-bit-identical")


def test_criterion_10_si_sdr_correctness():
    rng = np.random.default_rng(1010)
    ref = rng.standard_normal(4000)
    # noise level chosen so even the smallest |c| keeps the scaled noise
    # power far above the log-ratio epsilon floor
    est = ref + 0.5 * rng.standard_normal(4000)
    base = si_sdr(ref, est)
    worst = max(abs(si_sdr(ref, float(c) * est) - base)
                for c in (0.01, 0.5, 3.0, 1e4, -1.0, -0.02))
    assert worst < 1e-9

    # epsilon floor keeps the closed-form 0 dB case a hair below zero
    assert abs(si_sdr(np.array([1.0, 0.0]), np.array([1.0, 1.0]))) < 1e-11

    refs = rng.standard_normal((2, 4000))
    ests = refs + 0.1 * rng.standard_normal((2, 4000))
    perm, score = pit_score(refs, ests)
    perm_sw, score_sw = pit_score(refs, ests[::-1])
    assert perm == (0, 1) and perm_sw == (1, 0)
    assert abs(score - score_sw) < 1e-9
    print(f"PASS criterion 10: scale invariance to {worst:.1e} dB, "
          f"[1,0]/[1,1] -> 0 dB, PIT symmetric")


def test_criterion_11_runtime_ordering():
    r = runtime_ordering_benchmark(chunks=1000, seed=0)
    assert r["mixer_speedup"] >= 2.0, r
    assert r["lstm_speedup"] >= 2.0, r
    print(f"PASS criterion 11: mixer {r['mixer_speedup']:.1f}x vs per-bin "
          f"bidir LSTM ({r['mixer_params']} vs {r['seq_bidir_params']} params), "
          f"conv-batched LSTM {r['lstm_speedup']:.1f}x vs per-bin loop, "
          f"median over 1000 chunks")


def test_criterion_12_cli_smoke(tmp_path):
    bss = tmp_path / "bss.tfmlp"
    tse = tmp_path / "tse.tfmlp"
    assert cli.main(["init-random", "--seed", "1", "--out", str(bss)]) == 0
    assert cli.main(["init-random", "--task", "tse", "--seed", "1", "--out", str(tse)]) == 0

    rng = np.random.default_rng(12)
    mix = tmp_path / "mix.wav"
    n = 8000  # 0.5 s
    write_wav(mix, (rng.standard_normal(n) * 0.1).astype(F32), 16000)
    calib_dir = tmp_path / "calib"
    calib_dir.mkdir()
    write_wav(calib_dir / "c.wav", (rng.standard_normal(4800) * 0.1).astype(F32), 16000)

    quantized = {}
    for preset in PRESETS:
        out = tmp_path / f"{preset}.tfmlp"
        assert cli.main([
            "quantize", "--model", str(bss), "--preset", preset,
            "--calib", str(calib_dir), "--out", str(out),
        ]) == 0, preset
        quantized[preset] = out

    for model_path in (bss, quantized["int8"]):
        prefix = tmp_path / f"sep_{model_path.stem}_"
        assert cli.main([
            "separate", "--model", str(model_path), "--in", str(mix),
            "--out-prefix", str(prefix),
        ]) == 0
        for i in (1, 2):
            samples, rate = read_wav(f"{prefix}{i}.wav")
            assert rate == 16000 and samples.shape == (n,)
            assert np.all(np.isfinite(samples))

    emb = tmp_path / "emb.f32"
    rng.standard_normal(256).astype(F32).tofile(emb)
    target = tmp_path / "target.wav"
    assert cli.main([
        "extract", "--model", str(tse), "--in", str(mix),
        "--embedding", str(emb), "--out", str(target),
    ]) == 0
    samples, rate = read_wav(target)
    assert rate == 16000 and samples.shape == (n,)

    assert cli.main(["verify"]) == 0
    print(f"PASS criterion 12: init-random -> quantize ({len(PRESETS)} presets) "
          f"-> separate/extract produced valid WAVs of correct length; verify exit 0")
