"""Binary checkpoint format for sequence classifiers.

Layout: the 4-byte magic ``RTCK``, a little-endian uint32 format version,
a uint32 header length, a UTF-8 JSON header (model config, label list,
parameter names and shapes, free-form metadata) and then every parameter
as little-endian float32 in header order.
"""

import json
import struct

import numpy as np

from ..errors import ConfigError
from .autograd import Tensor
from .model import ModelConfig, SequenceClassifier

MAGIC = b"RTCK"
VERSION = 1


class CheckpointError(ConfigError):
    pass


def save_checkpoint(model, path, metadata=None):
    names = list(model.params)
    header = {
        "config": model.config.as_dict(),
        "labels": model.labels,
        "params": [[n, list(model.params[n].data.shape)] for n in names],
        "metadata": metadata or {},
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(raw)))
        fh.write(raw)
        for n in names:
            fh.write(np.ascontiguousarray(model.params[n].data, dtype="<f4").tobytes())


def load_checkpoint(path):
    """Return ``(model, metadata)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC or len(blob) < 12:
        raise CheckpointError(f"{path}: not a classifier checkpoint")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    offset = 12 + hlen
    params = {}
    for name, shape in header["params"]:
        count = int(np.prod(shape)) if shape else 1
        if offset + 4 * count > len(blob):
            raise CheckpointError(f"{path}: trailing or missing payload bytes")
        arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(shape)
        offset += 4 * count
        params[name] = Tensor(arr.astype(np.float64), True, name)
    if offset != len(blob):
        raise CheckpointError(f"{path}: trailing or missing payload bytes")
    cfg = ModelConfig(**header["config"])
    return SequenceClassifier(cfg, params, header["labels"]), header["metadata"]
