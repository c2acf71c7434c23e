"""Versioned model checkpoints: a JSON header followed by raw tensor bytes.

Layout:

    bytes 0..3   magic ``CKPT``
    bytes 4..7   format version, little-endian uint32
    bytes 8..11  header length in bytes, little-endian uint32
    header       UTF-8 JSON: kind, config, extras, tensor manifest
    payload      tensor data, little-endian, in manifest order

Everything needed to rebuild the model lives in the header, so a loader can
refuse an incompatible file before touching the payload.  Tensors are stored
as numpy arrays; torch state dicts convert on the way in and out.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np
import torch

from .errors import DataError

MAGIC = b"CKPT"
VERSION = 1

_HEAD = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    kind: str
    config: dict
    extras: dict
    state: dict

    def state_dict(self, dtype=None):
        out = {}
        for name, arr in self.state.items():
            t = torch.from_numpy(arr.copy())
            if dtype is not None and t.is_floating_point():
                t = t.to(dtype)
            out[name] = t
        return out


def save_checkpoint(path, kind, config, state_dict, extras=None):
    tensors = []
    blobs = []
    for name, value in state_dict.items():
        arr = value.detach().cpu().numpy() if torch.is_tensor(value) else np.asarray(value)
        arr = np.ascontiguousarray(arr)
        le = arr.dtype.newbyteorder("<")
        tensors.append(
            {"name": name, "shape": list(arr.shape), "dtype": le.str}
        )
        blobs.append(arr.astype(le, copy=False).tobytes())
    header = json.dumps(
        {
            "kind": kind,
            "config": config,
            "extras": extras or {},
            "tensors": tensors,
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEAD.size)
        if len(head) < _HEAD.size:
            raise DataError("checkpoint file truncated: %s" % path)
        magic, version, header_len = _HEAD.unpack(head)
        if magic != MAGIC:
            raise DataError("not a checkpoint file: %s" % path)
        if version != VERSION:
            raise DataError(
                "checkpoint version %d unsupported (expected %d)" % (version, VERSION)
            )
        header = json.loads(fh.read(header_len).decode("utf-8"))
        state = {}
        for spec in header["tensors"]:
            dtype = np.dtype(spec["dtype"])
            shape = tuple(spec["shape"])
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = fh.read(count * dtype.itemsize)
            if len(raw) != count * dtype.itemsize:
                raise DataError("checkpoint payload truncated: %s" % path)
            state[spec["name"]] = np.frombuffer(raw, dtype=dtype).reshape(shape).copy()
    return Checkpoint(
        kind=header["kind"],
        config=header["config"],
        extras=header["extras"],
        state=state,
    )
