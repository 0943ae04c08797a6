"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration problems, 2 unreadable
or malformed files, 3 numeric verification failures.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click
import numpy as np

from . import verify as verify_mod
from .audio import read_embedding, read_wav, write_wav
from .container import (estimate_container_bytes, inspect_container,
                        load_model, save_model)
from .engine import StreamSession, profile as run_profile
from .errors import (ConfigError, DomainError, FormatError, FramingError,
                     NumericError, VerificationError)
from .model import FloatModel, ModelConfig, init_random, param_breakdown
from .quant import PRESETS, quantize_model
from .report import render_text, write_report_dir
from .stft import FrameConfig


@click.group()
def cli():
    """Real-time speech separation: streaming inference, quantization, profiling."""


def _load(path):
    if not os.path.exists(path):
        raise FormatError(f"{path}: no such file")
    return load_model(path)


def _check_rate(rate, model, path):
    want = model.frame.sample_rate
    if rate != want:
        raise FormatError(f"{path}: sample rate {rate} Hz, the model runs at {want} Hz")


@cli.command()
@click.option("--model", "model_path", required=True, help="model container")
@click.option("--in", "in_path", required=True, help="mono input WAV")
@click.option("--out-prefix", required=True, help="output files get 1..S appended")
def separate(model_path, in_path, out_prefix):
    """Split a mixture into its speaker streams."""
    model = _load(model_path)
    if model.config.film_enabled:
        raise ConfigError("this model is embedding-conditioned; use `extract`")
    samples, rate = read_wav(in_path)
    _check_rate(rate, model, in_path)
    out = StreamSession(model).process(samples)
    for i in range(out.shape[0]):
        path = f"{out_prefix}{i + 1}.wav"
        write_wav(path, out[i], rate)
        click.echo(path)


@cli.command()
@click.option("--model", "model_path", required=True, help="model container")
@click.option("--in", "in_path", required=True, help="mono input WAV")
@click.option("--embedding", "emb_path", required=True,
              help="speaker embedding, raw little-endian float32")
@click.option("--out", "out_path", required=True, help="output WAV")
def extract(model_path, in_path, emb_path, out_path):
    """Pull one target speaker out of a mixture, guided by an embedding."""
    model = _load(model_path)
    if not model.config.film_enabled:
        raise ConfigError("this model has no conditioning path; use `separate`")
    samples, rate = read_wav(in_path)
    _check_rate(rate, model, in_path)
    emb = read_embedding(emb_path, model.config.embed_dim)
    out = StreamSession(model, emb).process(samples)
    write_wav(out_path, out[0], rate)
    click.echo(out_path)


@cli.command("profile")
@click.option("--model", "model_path", required=True)
@click.option("--seconds", default=10.0, show_default=True)
@click.option("--json", "as_json", is_flag=True, help="machine-readable output")
@click.option("--report-dir", default=None,
              help="also write profile.csv, profile.json, and PNG figures here")
@click.option("--seed", default=0, show_default=True)
def profile_cmd(model_path, seconds, as_json, report_dir, seed):
    """Time every pipeline stage under a steady synthetic stream."""
    if seconds < 1.0:
        raise ConfigError("need at least one second of audio to profile")
    model = _load(model_path)
    report = run_profile(model, seconds=seconds, seed=seed)
    if as_json:
        click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(render_text(report))
    if report_dir:
        files = write_report_dir(report, report_dir)
        for p in [files["csv"], files["json"], *files["figures"]]:
            click.echo(p)


def _calibration_signals(calib_dir, model, seed):
    if calib_dir is None:
        # no calibration audio given: fall back to seeded noise segments
        rng = np.random.default_rng(seed)
        n = 2 * model.frame.sample_rate
        return [(rng.standard_normal(n) * 0.1).astype(np.float32) for _ in range(2)]
    paths = sorted(Path(calib_dir).glob("*.wav"))
    if not paths:
        raise FormatError(f"{calib_dir}: no .wav files to calibrate on")
    signals = []
    for p in paths:
        samples, rate = read_wav(p)
        _check_rate(rate, model, p)
        signals.append(samples)
    return signals


@cli.command()
@click.option("--model", "model_path", required=True, help="float model container")
@click.option("--preset", required=True, type=click.Choice(PRESETS))
@click.option("--calib", "calib_dir", default=None,
              help="directory of calibration WAVs (default: seeded noise)")
@click.option("--out", "out_path", required=True)
@click.option("--seed", default=0, show_default=True)
def quantize(model_path, preset, calib_dir, out_path, seed):
    """Calibrate and save a mixed-precision build of a float model."""
    model = _load(model_path)
    if not isinstance(model, FloatModel):
        raise ConfigError(f"{model_path} is already quantized ({model.preset}); start from a float model")
    signals = _calibration_signals(calib_dir, model, seed)
    qmodel = quantize_model(model, preset, signals)
    save_model(qmodel, out_path)
    click.echo(f"{out_path} ({os.path.getsize(out_path)} bytes, preset {preset})")


@cli.command()
@click.option("--seed", default=0, show_default=True)
def verify(seed):
    """Run the numerical self-check suites; exit 3 on any breach."""
    results = verify_mod.run_all(seed)
    for r in results:
        click.echo(r.line())
    if not all(r.passed for r in results):
        raise VerificationError("one or more verification suites failed")


@cli.command("init-random")
@click.option("--config", "config_path", default=None,
              help="JSON file of model fields (optional `frame` block)")
@click.option("--task", type=click.Choice(["bss", "tse"]), default="bss",
              show_default=True, help="stock configuration when no --config is given")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True)
def init_random_cmd(config_path, task, seed, out_path):
    """Create a reproducible randomly initialized model container."""
    frame = None
    if config_path:
        try:
            with open(config_path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise FormatError(f"{config_path}: no such file") from None
        except json.JSONDecodeError as exc:
            raise FormatError(f"{config_path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise FormatError(f"{config_path}: expected a JSON object")
        if "frame" in doc:
            frame = FrameConfig.from_dict(doc["frame"])
        cfg = ModelConfig.from_dict(doc)
    elif task == "tse":
        cfg = ModelConfig(S=1, film_enabled=True)
    else:
        cfg = ModelConfig()
    model = init_random(cfg, seed, frame)
    save_model(model, out_path)
    click.echo(f"{out_path} ({model.param_count()} parameters, seed {seed})")


@cli.command()
@click.argument("model_path")
def inspect(model_path):
    """Show a container's configuration, tensors, and size breakdown."""
    if not os.path.exists(model_path):
        raise FormatError(f"{model_path}: no such file")
    info = inspect_container(model_path)
    cfg = ModelConfig.from_dict(info["config"])
    click.echo(f"preset:       {info['preset']}")
    click.echo(f"config:       {json.dumps(info['config'], sort_keys=True)}")
    click.echo(f"framing:      {json.dumps(info['frame'], sort_keys=True)}")
    click.echo(f"gate order:   {info['gate_order']}")
    click.echo(f"parameters:   {info['param_count']}")
    for group, count in sorted(param_breakdown(cfg).items()):
        click.echo(f"  {group:<12}{count}")
    click.echo(f"tensor bytes: {info['tensor_bytes']}")
    click.echo(f"file bytes:   {info['file_bytes']}")
    click.echo("estimated container bytes per preset:")
    for preset, size in estimate_container_bytes(cfg).items():
        click.echo(f"  {preset:<26}~{size}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ConfigError, FramingError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (FormatError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (NumericError, VerificationError, DomainError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
