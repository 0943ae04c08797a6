"""Single-file model container.

Layout (all integers little-endian):

    bytes 0..7    magic "TFMLPNET"
    u32           format version (currently 1)
    u64           length of the JSON header
    ...           UTF-8 JSON: config, framing, preset, gate order, and
                  the precision plan (null for plain float models)
    u32           tensor count
    per tensor:   u16 name length + name bytes
                  u8 dtype code (f32=0, bf16=1, i8=2, i16=3, i32=4)
                  u8 rank + u32 dims
                  u64 payload offset + u64 byte length
                  u8 quantized flag; if set, u32 scale count + f32 scales
                  (symmetric per-output-channel int8 scales)
    payload       row-major little-endian tensor bytes, in directory order

bf16 tensors are stored as raw u16 codes (the upper half of the float32
bit pattern) and rehydrated to float32 on load.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .dtypes import CODE_DTYPE, DTYPE_CODE, DType, bf16_to_u16, u16_to_bf16
from .errors import FormatError, SchemaError
from .model import GATE_ORDER, FloatModel, ModelConfig, param_specs
from .quant import PrecisionPlan, QuantizedModel
from .stft import FrameConfig

MAGIC = b"TFMLPNET"
VERSION = 1

_STORE_NP = {
    DType.F32: np.dtype("<f4"),
    DType.BF16: np.dtype("<u2"),
    DType.I8: np.dtype("i1"),
    DType.I16: np.dtype("<i2"),
    DType.I32: np.dtype("<i4"),
}


def _header_json(model) -> dict:
    plan = model.plan.to_dict() if isinstance(model, QuantizedModel) else None
    return {
        "format_version": VERSION,
        "preset": model.preset,
        "gate_order": GATE_ORDER,
        "config": model.config.to_dict(),
        "frame": model.frame.to_dict(),
        "plan": plan,
    }


def save_model(model, path):
    """Write a float or quantized model to a single container file."""
    if not isinstance(model, (FloatModel, QuantizedModel)):
        raise FormatError(f"cannot serialize {type(model).__name__}")
    header = json.dumps(_header_json(model), sort_keys=True).encode("utf-8")

    entries = []  # (name, dtype, shape, payload bytes, scales | None)
    for name in param_specs(model.config):
        if isinstance(model, QuantizedModel) and name in model.qweights:
            qw, scales = model.qweights[name]
            entries.append((name, DType.I8, qw.shape, qw.astype("i1").tobytes(),
                            scales.astype("<f4")))
        else:
            arr = model.params[name]
            dt = DType.F32
            if isinstance(model, QuantizedModel) and model.plan.dtypes[name] == DType.BF16:
                dt = DType.BF16
                payload = bf16_to_u16(arr).astype("<u2").tobytes()
            else:
                payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            entries.append((name, dt, arr.shape, payload, None))

    directory = bytearray()
    offset = 0
    for name, dt, shape, payload, scales in entries:
        nb = name.encode("utf-8")
        directory += struct.pack("<H", len(nb)) + nb
        directory += struct.pack("<BB", DTYPE_CODE[dt], len(shape))
        directory += struct.pack(f"<{len(shape)}I", *shape)
        directory += struct.pack("<QQ", offset, len(payload))
        if scales is None:
            directory += struct.pack("<B", 0)
        else:
            directory += struct.pack("<BI", 1, scales.size) + scales.tobytes()
        offset += len(payload)

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(entries)))
        fh.write(bytes(directory))
        for _, _, _, payload, _ in entries:
            fh.write(payload)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated file while reading {what}", offset=self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt), what))
        return vals[0] if len(vals) == 1 else vals


def _read_directory(r: _Reader, n_tensors: int):
    tensors = []
    for k in range(n_tensors):
        what = f"tensor {k}"
        name_len = r.unpack("<H", f"{what} name length")
        name = r.take(name_len, f"{what} name").decode("utf-8", errors="replace")
        code, ndim = r.unpack("<BB", f"{name} dtype/rank")
        if code not in CODE_DTYPE:
            raise FormatError(f"unknown dtype code {code} for {name}", offset=r.pos - 2)
        dt = CODE_DTYPE[code]
        shape = tuple(r.unpack(f"<{ndim}I", f"{name} dims")) if ndim != 1 else (r.unpack("<I", f"{name} dims"),)
        if ndim == 0:
            shape = ()
        offset, nbytes = r.unpack("<QQ", f"{name} span")
        expected = int(np.prod(shape, dtype=np.int64)) * _STORE_NP[dt].itemsize
        if nbytes != expected:
            raise FormatError(
                f"{name}: byte length {nbytes} does not match shape {shape} ({expected})",
                offset=r.pos - 16)
        qflag = r.unpack("<B", f"{name} quant flag")
        scales = None
        if qflag == 1:
            n_scales = r.unpack("<I", f"{name} scale count")
            scales = np.frombuffer(r.take(4 * n_scales, f"{name} scales"), dtype="<f4").copy()
        elif qflag != 0:
            raise FormatError(f"{name}: bad quantization flag {qflag}", offset=r.pos - 1)
        tensors.append({"name": name, "dtype": dt, "shape": shape,
                        "offset": offset, "nbytes": nbytes, "scales": scales})
    return tensors


def _parse(path):
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data)
    if r.take(8, "magic") != MAGIC:
        raise FormatError("bad magic; not a model container", offset=0)
    version = r.unpack("<I", "version")
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}", offset=8)
    jlen = r.unpack("<Q", "header length")
    raw = r.take(jlen, "JSON header")
    try:
        meta = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SchemaError(f"malformed JSON header: {exc}", offset=20) from None
    n_tensors = r.unpack("<I", "tensor count")
    tensors = _read_directory(r, n_tensors)
    payload_start = r.pos
    payload_len = len(data) - payload_start
    for t in tensors:
        if t["offset"] + t["nbytes"] > payload_len:
            raise FormatError(f"{t['name']}: payload span exceeds file", offset=payload_start)
    return meta, tensors, data, payload_start


def _meta_objects(meta):
    for key in ("config", "frame", "preset", "gate_order"):
        if key not in meta:
            raise SchemaError(f"JSON header is missing {key!r}")
    if meta["gate_order"] != GATE_ORDER:
        raise SchemaError(f"unsupported gate order {meta['gate_order']!r}")
    try:
        cfg = ModelConfig.from_dict(meta["config"])
        frame = FrameConfig.from_dict(meta["frame"])
    except (TypeError, KeyError) as exc:
        raise SchemaError(f"bad config block: {exc}") from None
    return cfg, frame


def load_model(path):
    """Read a container back into a FloatModel or QuantizedModel."""
    meta, tensors, data, payload_start = _parse(path)
    cfg, frame = _meta_objects(meta)

    params, qweights = {}, {}
    for t in tensors:
        start = payload_start + t["offset"]
        raw = data[start : start + t["nbytes"]]
        arr = np.frombuffer(raw, dtype=_STORE_NP[t["dtype"]]).reshape(t["shape"])
        if t["dtype"] == DType.BF16:
            params[t["name"]] = u16_to_bf16(arr.astype(np.uint16))
        elif t["dtype"] == DType.I8 and t["scales"] is not None:
            qweights[t["name"]] = (arr.astype(np.int8),
                                   t["scales"].astype(np.float64))
        else:
            params[t["name"]] = arr.astype(np.float32)

    if meta.get("plan") is None:
        return FloatModel(cfg, params, frame)
    plan = PrecisionPlan.from_dict(meta["plan"])
    if plan.preset != meta.get("preset"):
        raise SchemaError("preset in header disagrees with the stored plan")
    return QuantizedModel(cfg, plan, params, qweights, frame)


def estimate_container_bytes(cfg: ModelConfig) -> dict:
    """Approximate on-disk size per preset, from shapes alone."""
    from .quant import _OUT_AXIS, preset_dtypes, PRESETS

    specs = param_specs(cfg)
    out = {}
    for preset in PRESETS:
        dtypes = preset_dtypes(cfg, preset)
        total = 24 + 700  # fixed header + JSON config block
        if preset != "fp32":
            # plan dtypes and calibrated ranges dominate the JSON block
            total += sum(len(n) + 12 for n in dtypes) + 1400
        for name, shape in specs.items():
            n = int(np.prod(shape))
            total += len(name) + 27  # directory entry
            dt = dtypes[name]
            if dt == DType.I8:
                total += n + 5 + 4 * shape[_OUT_AXIS.get(name, 0)]
            elif dt == DType.BF16:
                total += 2 * n + 1
            else:
                total += 4 * n + 1
        out[preset] = total
    return out


def inspect_container(path) -> dict:
    """Header, tensor table, and size summary without building a model."""
    meta, tensors, data, payload_start = _parse(path)
    cfg, frame = _meta_objects(meta)
    from .model import param_count
    table = [
        {
            "name": t["name"], "dtype": t["dtype"].name.lower(),
            "shape": list(t["shape"]), "bytes": int(t["nbytes"]),
            "per_channel_scales": 0 if t["scales"] is None else int(t["scales"].size),
        }
        for t in tensors
    ]
    return {
        "preset": meta["preset"],
        "gate_order": meta["gate_order"],
        "config": cfg.to_dict(),
        "frame": frame.to_dict(),
        "param_count": param_count(cfg),
        "tensors": table,
        "tensor_bytes": sum(t["bytes"] for t in table),
        "file_bytes": len(data),
    }
