"""Streaming speech separation and target-speaker extraction.

A frame-synchronous inference engine (10 ms windows, 6 ms hops) built on
numpy: a conv encoder/decoder around frequency-mixing MLP blocks and
conv-batched LSTMs, with calibrated mixed-precision execution (float32,
bf16, int8, int16) and a single-file model container.
"""

from .dtypes import DType, bf16_round
from .engine import ProfileReport, StageTimer, StreamSession, profile, runtime_ordering_benchmark
from .errors import (ConfigError, DomainError, FormatError, FramingError,
                     NumericError, SchemaError, TfmlpError, VerificationError)
from .metrics import pit_score, si_sdr, si_sdr_improvement
from .model import (DEFAULT_BSS, DEFAULT_TSE, ConvLstmParams, FilmParams,
                    FloatModel, MixerRepParams, ModelConfig, StreamState,
                    conv_batched_lstm_step, film_apply, init_random,
                    mixer_forward, param_count, reference_batched_lstm_step)
from .quant import (PRESETS, PrecisionPlan, QuantizedModel, QuantParams,
                    apply_plan, calibrate, fake_quant, int8_conv1d_k1,
                    preset_dtypes, quantize_model)
from .stft import FrameConfig, StftState, istft_step, stft_step
from .container import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "DType", "bf16_round",
    "ProfileReport", "StageTimer", "StreamSession", "profile", "runtime_ordering_benchmark",
    "TfmlpError", "ConfigError", "FramingError", "NumericError", "FormatError",
    "SchemaError", "DomainError", "VerificationError",
    "si_sdr", "si_sdr_improvement", "pit_score",
    "ModelConfig", "FloatModel", "StreamState", "init_random", "param_count",
    "DEFAULT_BSS", "DEFAULT_TSE", "ConvLstmParams", "MixerRepParams", "FilmParams",
    "conv_batched_lstm_step", "reference_batched_lstm_step", "mixer_forward", "film_apply",
    "PRESETS", "PrecisionPlan", "QuantParams", "QuantizedModel",
    "apply_plan", "calibrate", "fake_quant", "int8_conv1d_k1", "preset_dtypes", "quantize_model",
    "FrameConfig", "StftState", "stft_step", "istft_step",
    "save_model", "load_model",
    "__version__",
]
