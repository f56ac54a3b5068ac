"""Serializable model artifact: the unit of model synchronization.

Container layout (little-endian):

    magic b"HSMA" | format u16 | header_len u32 | header JSON | payload

The header JSON carries the network config, artifact version, source window
and the sha256 of the payload; the payload is the parameter tensors as
float64 in :data:`hybridstream.lstm.TENSOR_ORDER`. The checksum is verified
on deserialization.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .lstm import TENSOR_ORDER, ModelParams, NetworkConfig

MAGIC = b"HSMA"
FORMAT_VERSION = 1


class ArtifactError(ValueError):
    pass


class ChecksumError(ArtifactError):
    pass


def _payload_bytes(params: ModelParams) -> bytes:
    return b"".join(t.astype("<f8").tobytes() for t in params.tensors().values())


def payload_checksum(params: ModelParams) -> str:
    return hashlib.sha256(_payload_bytes(params)).hexdigest()


@dataclass(frozen=True)
class ModelArtifact:
    params: ModelParams
    version: int
    trained_on_window: int | None = None
    checksum: str = field(default="")

    def __post_init__(self) -> None:
        if self.version < 0:
            raise ValueError("artifact version must be >= 0")
        if not self.checksum:
            object.__setattr__(self, "checksum", payload_checksum(self.params))

    @property
    def config(self) -> NetworkConfig:
        return self.params.config


def serialize(artifact: ModelArtifact) -> bytes:
    payload = _payload_bytes(artifact.params)
    header = {
        "config": _config_dict(artifact.config),
        "version": artifact.version,
        "trained_on_window": artifact.trained_on_window,
        "checksum": hashlib.sha256(payload).hexdigest(),
        "tensors": [[name, list(getattr(artifact.params, name).shape)] for name in TENSOR_ORDER],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<HI", FORMAT_VERSION, len(header_bytes)) + header_bytes + payload


def deserialize(data: bytes) -> ModelArtifact:
    if len(data) < 10 or data[:4] != MAGIC:
        raise ArtifactError("not a model artifact (bad magic)")
    fmt, header_len = struct.unpack("<HI", data[4:10])
    if fmt != FORMAT_VERSION:
        raise ArtifactError(f"unsupported artifact format {fmt}")
    header_end = 10 + header_len
    if len(data) < header_end:
        raise ArtifactError("truncated artifact header")
    try:
        header = json.loads(data[10:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"corrupt artifact header: {exc}") from None

    payload = data[header_end:]
    digest = hashlib.sha256(payload).hexdigest()
    if digest != header.get("checksum"):
        raise ChecksumError("artifact payload checksum mismatch")

    config = NetworkConfig(**header["config"])
    tensors: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in header["tensors"]:
        size = int(np.prod(shape)) if shape else 1
        raw = payload[offset * 8 : (offset + size) * 8]
        if len(raw) != size * 8:
            raise ArtifactError("truncated artifact payload")
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
        offset += size
    if offset * 8 != len(payload):
        raise ArtifactError("artifact payload has trailing bytes")

    params = ModelParams(config=config, **tensors)
    return ModelArtifact(
        params=params,
        version=int(header["version"]),
        trained_on_window=header.get("trained_on_window"),
        checksum=digest,
    )


def _config_dict(config: NetworkConfig) -> dict:
    return {
        "input_dim": config.input_dim,
        "seq_len": config.seq_len,
        "lstm_units": config.lstm_units,
        "dense_units": config.dense_units,
        "output_units": config.output_units,
        "seed": config.seed,
    }
