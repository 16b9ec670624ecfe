"""Model checkpoint file: magic ``SQRM``, versioned, little-endian float32.

Layout (all integers little-endian):

    bytes 0..3   magic b"SQRM"
    u32          format version (1)
    u32          architecture-descriptor length in bytes
    bytes        architecture descriptor, UTF-8 JSON
    u32          tensor count
    per tensor:  u16 name length, name (UTF-8),
                 u8 ndim, ndim x u32 dims,
                 float32 LE data, row-major

Tensors cover all trainable parameters plus batch-norm running statistics.
Files are written to a temporary sibling and renamed into place so an
interrupted run never leaves a partial checkpoint.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .model import CnnModel, ModelConfig

MAGIC = b"SQRM"
FORMAT_VERSION = 1


def _arch_descriptor(config: ModelConfig) -> dict:
    return {
        "input_hw": list(config.input_hw),
        "conv_channels": list(config.conv_channels),
        "kernel": config.kernel,
        "fc_units": list(config.fc_units),
        "n_classes": config.n_classes,
        "head": config.head,
        "bn_eps": config.bn_eps,
        "bn_momentum": config.bn_momentum,
    }


def config_from_descriptor(desc: dict) -> ModelConfig:
    return ModelConfig(
        input_hw=tuple(desc["input_hw"]),
        conv_channels=tuple(desc["conv_channels"]),
        kernel=int(desc["kernel"]),
        fc_units=tuple(desc["fc_units"]),
        n_classes=int(desc["n_classes"]),
        head=str(desc["head"]),
        bn_eps=float(desc["bn_eps"]),
        bn_momentum=float(desc["bn_momentum"]),
    )


def save_model(model: CnnModel, path) -> None:
    arch = json.dumps(_arch_descriptor(model.config), sort_keys=True).encode("utf-8")
    state = model.state_dict()
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", FORMAT_VERSION)
    blob += struct.pack("<I", len(arch))
    blob += arch
    blob += struct.pack("<I", len(state))
    for name in sorted(state):
        tensor = np.ascontiguousarray(state[name], dtype="<f4")
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", tensor.ndim)
        blob += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        blob += tensor.tobytes()
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(bytes(blob))
    os.replace(tmp, path)


def load_model(path, dtype=np.float32) -> CnnModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    offset = 4
    (version,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    (arch_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    desc = json.loads(data[offset : offset + arch_len].decode("utf-8"))
    offset += arch_len
    (n_tensors,) = struct.unpack_from("<I", data, offset)
    offset += 4

    state: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", data, offset)
        offset += 1
        dims = struct.unpack_from(f"<{ndim}I", data, offset)
        offset += 4 * ndim
        count = int(np.prod(dims)) if ndim else 1
        tensor = np.frombuffer(data, dtype="<f4", count=count, offset=offset).reshape(dims)
        offset += 4 * count
        state[name] = tensor.astype(dtype)

    model = CnnModel(config_from_descriptor(desc), seed=0, dtype=dtype)
    model.load_state_dict(state)
    return model
