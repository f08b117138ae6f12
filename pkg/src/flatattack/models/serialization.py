"""Versioned single-file binary format for MLP classifiers.

Layout (all little-endian):

    magic           8 bytes   b"FLATMLP\\0"
    version         <H        FORMAT_VERSION
    activation      <B        0 tanh, 1 softplus, 2 relu
    reserved        <B        0
    train_accuracy  <d        NaN when the model was never trained
    id_length       <H        followed by the UTF-8 model id
    n_layers        <H        followed by n_layers x <II (out, in)
    parameters      <f8       per layer: weight row-major, then bias

Nothing follows the parameters; trailing bytes are an error.
"""

import hashlib
import logging
import math
import struct
from pathlib import Path

import numpy as np

from flatattack.errors import FlatAttackError, ModelFormatError
from flatattack.models.mlp import Activation, Layer, MlpClassifier

logger = logging.getLogger(__name__)

MAGIC = b"FLATMLP\x00"
FORMAT_VERSION = 1
MODEL_SUFFIX = ".mlp"

_ACTIVATION_TAGS = {Activation.TANH: 0, Activation.SOFTPLUS: 1, Activation.RELU: 2}
_TAG_ACTIVATIONS = {tag: act for act, tag in _ACTIVATION_TAGS.items()}
_F64 = np.dtype("<f8")


def encode_model(model: MlpClassifier) -> bytes:
    model_id = model.model_id.encode("utf-8")
    acc = math.nan if model.train_accuracy is None else float(model.train_accuracy)
    parts = [
        MAGIC,
        struct.pack("<HBBd", FORMAT_VERSION, _ACTIVATION_TAGS[model.activation], 0, acc),
        struct.pack("<H", len(model_id)),
        model_id,
        struct.pack("<H", len(model.layers)),
    ]
    for layer in model.layers:
        parts.append(struct.pack("<II", layer.out_dim, layer.in_dim))
    for layer in model.layers:
        parts.append(np.ascontiguousarray(layer.weight, dtype=_F64).tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype=_F64).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int, field: str) -> bytes:
        if self.offset + size > len(self.data):
            raise ModelFormatError(
                f"file truncated while reading {field} "
                f"(need {size} bytes at offset {self.offset}, have {len(self.data) - self.offset})",
                field=field,
            )
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, field: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), field))


def decode_model(data: bytes) -> MlpClassifier:
    """Parse bytes produced by ``encode_model``; no partial model on failure."""
    r = _Reader(data)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise ModelFormatError("not a FLATATTACK model file (bad magic)", field="magic")
    version, tag, _reserved, acc = r.unpack("<HBBd", "header")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}", field="version")
    if tag not in _TAG_ACTIVATIONS:
        raise ModelFormatError(f"unknown activation tag {tag}", field="activation")
    (id_len,) = r.unpack("<H", "id_length")
    try:
        model_id = r.take(id_len, "model_id").decode("utf-8")
    except UnicodeDecodeError as e:
        raise ModelFormatError("model id is not valid UTF-8", field="model_id") from e
    (n_layers,) = r.unpack("<H", "n_layers")
    if n_layers == 0:
        raise ModelFormatError("model has no layers", field="n_layers")
    shapes = [r.unpack("<II", f"shape[{i}]") for i in range(n_layers)]

    layers = []
    for i, (out_dim, in_dim) in enumerate(shapes):
        w = np.frombuffer(r.take(out_dim * in_dim * 8, f"weight[{i}]"), dtype=_F64)
        b = np.frombuffer(r.take(out_dim * 8, f"bias[{i}]"), dtype=_F64)
        layers.append(Layer(weight=w.reshape(out_dim, in_dim).astype(np.float64), bias=b.astype(np.float64)))
    if r.offset != len(data):
        raise ModelFormatError(f"{len(data) - r.offset} trailing bytes after parameters", field="trailer")

    try:
        return MlpClassifier(
            layers=tuple(layers),
            activation=_TAG_ACTIVATIONS[tag],
            model_id=model_id,
            train_accuracy=None if math.isnan(acc) else acc,
        )
    except FlatAttackError as e:
        raise ModelFormatError(f"inconsistent layer table: {e}", field="shape") from e


def model_hash(model: MlpClassifier) -> str:
    """SHA-256 of the encoded model, used in run manifests."""
    return hashlib.sha256(encode_model(model)).hexdigest()


def save_model(model: MlpClassifier, path: Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_model(model))
    except OSError as e:
        raise FlatAttackError(f"could not write model: {e}", context={"path": str(path)}) from e
    logger.debug("Saved model %s to %s", model.model_id, path)


def load_model(path: Path) -> MlpClassifier:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise FlatAttackError(f"could not read model: {e}", context={"path": str(path)}) from e
    try:
        return decode_model(data)
    except ModelFormatError as e:
        e.context.setdefault("path", str(path))
        raise


def load_zoo_dir(directory: Path) -> dict[str, MlpClassifier]:
    """Load every ``*.mlp`` file in a directory, keyed by model id (sorted)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FlatAttackError(f"model directory not found: {directory}", context={"path": str(directory)})
    models = [load_model(p) for p in sorted(directory.glob(f"*{MODEL_SUFFIX}"))]
    return {m.model_id: m for m in sorted(models, key=lambda m: m.model_id)}
