"""Logical element types and the bfloat16 emulation primitive.

Tensors are plain numpy arrays; the ``DType`` tag records the *logical*
precision for serialization and precision planning. bfloat16 is emulated on
float32 storage: values are rounded to the nearest bfloat16-representable
float32 after each operation that runs at bf16 precision, which keeps
results bit-reproducible across hosts without a native 16-bit type.
"""

from __future__ import annotations

import enum

import numpy as np


class DType(enum.Enum):
    F32 = "f32"
    BF16 = "bf16"
    I8 = "i8"
    I16 = "i16"
    I32 = "i32"


# On-disk element size in bytes. bf16 payloads are stored as the upper
# 16 bits of the float32 pattern, hence 2.
DTYPE_SIZE = {
    DType.F32: 4,
    DType.BF16: 2,
    DType.I8: 1,
    DType.I16: 2,
    DType.I32: 4,
}

NUMPY_DTYPE = {
    DType.F32: np.float32,
    DType.BF16: np.float32,  # emulated storage
    DType.I8: np.int8,
    DType.I16: np.int16,
    DType.I32: np.int32,
}

DTYPE_CODE = {dt: i for i, dt in enumerate(DType)}
CODE_DTYPE = {i: dt for dt, i in DTYPE_CODE.items()}


def bf16_round(x):
    """Round float32 values to the nearest bfloat16, ties to even.

    Accepts scalars or arrays; returns float32 with the low 16 mantissa
    bits cleared. Idempotent. NaN/Inf pass through as quiet NaN / Inf.
    """
    a = np.asarray(x, dtype=np.float32)
    u = a.view(np.uint32)
    # round-to-nearest-even on the truncated half: add 0x7FFF plus the
    # LSB of the surviving part, then truncate
    rounded = (u + 0x7FFF + ((u >> 16) & 1)) & 0xFFFF0000
    rounded = rounded.astype(np.uint32)
    # keep NaN payloads quiet instead of letting the carry turn them into Inf
    nan_mask = np.isnan(a)
    if np.any(nan_mask):
        rounded = np.where(nan_mask, (u & 0x80000000) | np.uint32(0x7FC00000), rounded)
    out = rounded.view(np.float32)
    if np.isscalar(x) or np.ndim(x) == 0:
        return np.float32(out[()])
    return out


def bf16_to_u16(x):
    """Pack bf16-rounded float32 values into uint16 bit patterns."""
    a = bf16_round(np.asarray(x, dtype=np.float32))
    return (a.view(np.uint32) >> 16).astype(np.uint16)


def u16_to_bf16(u):
    """Unpack uint16 bf16 bit patterns into float32 values."""
    u = np.asarray(u, dtype=np.uint16)
    return (u.astype(np.uint32) << 16).view(np.float32)
