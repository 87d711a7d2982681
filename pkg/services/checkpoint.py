"""
Binary network checkpoints.

Layout (little-endian):
    b"CATN" | u32 version | u32 layer count
    i64 rng seed | u32 input ndim | u32 × ndim input shape
    per layer:  u8 kind | u32 in_dim, out_dim, in_ch, out_ch, kernel, stride (0 = unset)
    per parametrized layer, weight then bias:  u32 ndim | u32 × ndim shape | f64 × size
"""

import logging
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from models.layer import LayerSpec
from models.network import Network
from utils.errors import FormatError, TruncatedFileError
from utils.tensor_core import freeze

logger = logging.getLogger(__name__)

MAGIC = b"CATN"
VERSION = 1
KIND_CODES = {"dense": 1, "relu": 2, "conv2d": 3, "maxpool2d": 4, "flatten": 5}
KIND_NAMES = {code: kind for kind, code in KIND_CODES.items()}
LAYER_FIELDS = ("in_dim", "out_dim", "in_ch", "out_ch", "kernel", "stride")


def _read(f: BinaryIO, size: int, what: str) -> bytes:
    data = f.read(size)
    if len(data) != size:
        raise TruncatedFileError(f"checkpoint ended while reading {what} ({len(data)} of {size} bytes)")
    return data


def _unpack(f: BinaryIO, fmt: str, what: str):
    return struct.unpack(fmt, _read(f, struct.calcsize(fmt), what))


def save_network(net: Network, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(net.layers)))
        f.write(struct.pack("<qI", net.rng_seed, len(net.input_shape)))
        f.write(struct.pack(f"<{len(net.input_shape)}I", *net.input_shape))
        for spec in net.layers:
            values = [getattr(spec, name) or 0 for name in LAYER_FIELDS]
            f.write(struct.pack("<B6I", KIND_CODES[spec.kind], *values))
        for i, spec in enumerate(net.layers):
            if not spec.has_params:
                continue
            for name in (f"{i}.weight", f"{i}.bias"):
                blob = net.params[name]
                f.write(struct.pack(f"<I{blob.ndim}I", blob.ndim, *blob.shape))
                f.write(np.ascontiguousarray(blob, dtype="<f8").tobytes())
    logger.info(f"💾 Saved checkpoint to {path}")
    return path


def load_network(path: Union[str, Path]) -> Network:
    path = Path(path)
    with open(path, "rb") as f:
        magic = _read(f, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"{path} is not a network checkpoint (magic {magic!r})")
        version, layer_count = _unpack(f, "<II", "header")
        if version != VERSION:
            raise FormatError(f"unsupported checkpoint version {version} in {path}")
        rng_seed, ndim = _unpack(f, "<qI", "header")
        input_shape = _unpack(f, f"<{ndim}I", "input shape")

        layers = []
        for _ in range(layer_count):
            code, *values = _unpack(f, "<B6I", "layer spec")
            if code not in KIND_NAMES:
                raise FormatError(f"unknown layer kind code {code} in {path}")
            fields = {name: value for name, value in zip(LAYER_FIELDS, values) if value}
            layers.append(LayerSpec(kind=KIND_NAMES[code], **fields))

        params = {}
        for i, spec in enumerate(layers):
            if not spec.has_params:
                continue
            for name in (f"{i}.weight", f"{i}.bias"):
                (blob_ndim,) = _unpack(f, "<I", f"{name} rank")
                shape = _unpack(f, f"<{blob_ndim}I", f"{name} shape")
                size = int(np.prod(shape))
                data = np.frombuffer(_read(f, 8 * size, name), dtype="<f8")
                params[name] = freeze(data.astype(np.float64).reshape(shape))

        if f.read(1):
            raise FormatError(f"trailing bytes after the last parameter block in {path}")

    return Network(layers=tuple(layers), params=params, input_shape=tuple(input_shape), rng_seed=rng_seed)
