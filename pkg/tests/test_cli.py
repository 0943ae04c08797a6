"""End-to-end command-line behavior, including the exit-code contract."""

import json

import numpy as np
import pytest

from tfmlp import cli
from tfmlp.audio import read_wav, write_wav
from tfmlp.container import inspect_container, save_model
from tfmlp.model import DEFAULT_BSS, FloatModel, init_params
from tfmlp.verify import SuiteResult


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def bss_path(work):
    p = work / "bss.tfmlp"
    assert cli.main(["init-random", "--seed", "3", "--out", str(p)]) == 0
    return p


@pytest.fixture(scope="module")
def tse_path(work):
    p = work / "tse.tfmlp"
    assert cli.main(["init-random", "--task", "tse", "--seed", "3", "--out", str(p)]) == 0
    return p


@pytest.fixture(scope="module")
def mix_wav(work):
    rng = np.random.default_rng(0)
    sig = (rng.standard_normal(11200) * 0.1).astype(np.float32)  # 0.7 s
    p = work / "mix.wav"
    write_wav(p, sig, 16000)
    return p


@pytest.fixture(scope="module")
def emb_file(work):
    p = work / "dvec.f32"
    np.random.default_rng(1).standard_normal(256).astype(np.float32).tofile(p)
    return p


class TestInitRandom:
    def test_reports_param_count(self, bss_path, capsys):
        cli.main(["init-random", "--seed", "3", "--out", str(bss_path)])
        out = capsys.readouterr().out
        assert "494208 parameters" in out

    def test_same_seed_reproduces_file(self, work):
        a, b = work / "a.tfmlp", work / "b.tfmlp"
        cli.main(["init-random", "--seed", "11", "--out", str(a)])
        cli.main(["init-random", "--seed", "11", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_frame_block(self, work):
        cfg = work / "cfg.json"
        cfg.write_text(json.dumps({
            "B": 2, "C": 16, "H": 16, "F": 81,
            "frame": {"sample_rate": 16000, "win_len": 160, "hop_len": 96,
                      "fft_size": 160},
        }))
        out = work / "small.tfmlp"
        assert cli.main(["init-random", "--config", str(cfg), "--out", str(out)]) == 0
        info = inspect_container(out)
        assert info["config"]["B"] == 2 and info["config"]["C"] == 16

    def test_invalid_json_is_exit_2(self, work):
        bad = work / "bad.json"
        bad.write_text("{not json")
        assert cli.main(["init-random", "--config", str(bad), "--out", str(work / "x")]) == 2

    def test_invalid_field_is_exit_1(self, work):
        bad = work / "badcfg.json"
        bad.write_text(json.dumps({"S": 3}))
        assert cli.main(["init-random", "--config", str(bad), "--out", str(work / "x")]) == 1


class TestSeparate:
    def test_writes_one_wav_per_speaker(self, bss_path, mix_wav, work, capsys):
        prefix = work / "spk"
        assert cli.main([
            "separate", "--model", str(bss_path), "--in", str(mix_wav),
            "--out-prefix", str(prefix),
        ]) == 0
        in_samples, rate = read_wav(mix_wav)
        for i in (1, 2):
            samples, out_rate = read_wav(f"{prefix}{i}.wav")
            assert out_rate == rate
            assert samples.shape == in_samples.shape
        printed = capsys.readouterr().out
        assert f"{prefix}1.wav" in printed and f"{prefix}2.wav" in printed

    def test_rejects_conditioned_model(self, tse_path, mix_wav, work):
        code = cli.main([
            "separate", "--model", str(tse_path), "--in", str(mix_wav),
            "--out-prefix", str(work / "bad"),
        ])
        assert code == 1

    def test_missing_model_is_exit_2(self, mix_wav, work):
        code = cli.main([
            "separate", "--model", str(work / "ghost.tfmlp"), "--in", str(mix_wav),
            "--out-prefix", str(work / "g"),
        ])
        assert code == 2

    def test_missing_wav_is_exit_2(self, bss_path, work):
        code = cli.main([
            "separate", "--model", str(bss_path), "--in", str(work / "ghost.wav"),
            "--out-prefix", str(work / "g"),
        ])
        assert code == 2

    def test_zero_wav_zero_bias_model_gives_zero_wavs(self, work):
        params = init_params(DEFAULT_BSS, seed=0)
        for name in params:
            if name.endswith(".b") or name.endswith("bias"):
                params[name] = np.zeros_like(params[name])
        mpath = work / "zb.tfmlp"
        save_model(FloatModel(DEFAULT_BSS, params), mpath)
        zwav = work / "zero.wav"
        write_wav(zwav, np.zeros(9600, dtype=np.float32), 16000)
        prefix = work / "zspk"
        assert cli.main([
            "separate", "--model", str(mpath), "--in", str(zwav),
            "--out-prefix", str(prefix),
        ]) == 0
        for i in (1, 2):
            samples, _ = read_wav(f"{prefix}{i}.wav")
            np.testing.assert_array_equal(samples, 0)


class TestExtract:
    def test_writes_target(self, tse_path, mix_wav, emb_file, work):
        out = work / "target.wav"
        assert cli.main([
            "extract", "--model", str(tse_path), "--in", str(mix_wav),
            "--embedding", str(emb_file), "--out", str(out),
        ]) == 0
        samples, rate = read_wav(out)
        assert rate == 16000
        assert samples.shape == read_wav(mix_wav)[0].shape

    def test_rejects_separation_model(self, bss_path, mix_wav, emb_file, work):
        code = cli.main([
            "extract", "--model", str(bss_path), "--in", str(mix_wav),
            "--embedding", str(emb_file), "--out", str(work / "t.wav"),
        ])
        assert code == 1

    def test_short_embedding_is_exit_2(self, tse_path, mix_wav, work):
        short = work / "short.f32"
        np.zeros(100, dtype=np.float32).tofile(short)
        code = cli.main([
            "extract", "--model", str(tse_path), "--in", str(mix_wav),
            "--embedding", str(short), "--out", str(work / "t.wav"),
        ])
        assert code == 2


class TestQuantize:
    def test_with_calibration_dir(self, bss_path, mix_wav, work, capsys):
        out = work / "q.tfmlp"
        assert cli.main([
            "quantize", "--model", str(bss_path), "--preset", "int8",
            "--calib", str(mix_wav.parent), "--out", str(out),
        ]) == 0
        info = inspect_container(out)
        assert info["preset"] == "int8"
        assert "int8" in capsys.readouterr().out

    def test_rejects_already_quantized(self, work):
        q = work / "q.tfmlp"
        code = cli.main([
            "quantize", "--model", str(q), "--preset", "int8",
            "--out", str(work / "qq.tfmlp"),
        ])
        assert code == 1

    def test_unknown_preset_is_usage_error(self, bss_path, work):
        code = cli.main([
            "quantize", "--model", str(bss_path), "--preset", "int4",
            "--out", str(work / "x.tfmlp"),
        ])
        assert code == 1


class TestProfileCmd:
    def test_json_output_parses(self, bss_path, capsys):
        assert cli.main([
            "profile", "--model", str(bss_path), "--seconds", "1", "--json",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["preset"] == "fp32"
        assert payload["rtf"] > 0
        assert set(payload["stages"]) >= {"stft", "encoder", "mixer", "lstm"}

    def test_report_dir_written(self, bss_path, work, capsys):
        rep = work / "rep"
        assert cli.main([
            "profile", "--model", str(bss_path), "--seconds", "1",
            "--report-dir", str(rep),
        ]) == 0
        for name in ("profile.csv", "profile.json",
                     "profile_stages.png", "profile_chunk_times.png"):
            assert (rep / name).exists(), name

    def test_zero_seconds_is_exit_1(self, bss_path):
        assert cli.main(["profile", "--model", str(bss_path), "--seconds", "0"]) == 1


class TestInspectCmd:
    def test_prints_breakdown_and_estimates(self, bss_path, capsys):
        assert cli.main(["inspect", str(bss_path)]) == 0
        out = capsys.readouterr().out
        assert "parameters:   494208" in out
        for group in ("encoder", "mixer", "lstm", "decoder"):
            assert group in out
        assert "mix-lstm-fpconv-fullmlp" in out  # size estimate table

    def test_missing_file_is_exit_2(self, work):
        assert cli.main(["inspect", str(work / "ghost.tfmlp")]) == 2

    def test_corrupt_file_is_exit_2(self, work):
        bad = work / "corrupt.tfmlp"
        bad.write_bytes(b"TFMLPNET" + b"\xff" * 32)
        assert cli.main(["inspect", str(bad)]) == 2


class TestVerifyCmd:
    def test_failure_is_exit_3(self, monkeypatch, capsys):
        fake = [SuiteResult("lstm-oracle", False, "max delta 1.0")]
        monkeypatch.setattr(cli.verify_mod, "run_all", lambda seed: fake)
        assert cli.main(["verify"]) == 3
        assert "FAIL" in capsys.readouterr().out


class TestUsage:
    def test_help_is_exit_0(self):
        assert cli.main(["--help"]) == 0

    def test_unknown_command_is_exit_1(self):
        assert cli.main(["frobnicate"]) == 1

    def test_missing_required_option_is_exit_1(self):
        assert cli.main(["separate"]) == 1
