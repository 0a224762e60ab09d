"""Model files.

Layout (all integers little-endian)::

    8 bytes   magic b"DAGPARSE"
    4 bytes   format version (uint32)
    8 bytes   header length H (uint64)
    H bytes   UTF-8 JSON header, keys sorted
    ...       float64 arrays, in header order, C order, little-endian

The header holds the model kind, training config, vocabulary with counts,
edge labels and the name and shape of every array. Writing the same model
twice gives identical bytes.
"""
from __future__ import annotations

import json
import struct
from typing import Dict, List, Tuple

import numpy as np

from .perceptron import AveragedPerceptron
from .training import Parser, TrainConfig
from .vocab import Vocabulary

MAGIC = b"DAGPARSE"
VERSION = 1


class ModelFormatError(ValueError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


def _arrays(parser: Parser) -> Tuple[List[Tuple[str, np.ndarray]], dict]:
    extra: dict = {}
    arrays: List[Tuple[str, np.ndarray]] = []
    if parser.kind == "neural":
        arrays += [(f"param:{k}", v) for k, v in sorted(parser.neural.params.items())]
    else:
        p = parser.perceptron
        features = sorted(p.weights)
        extra["features"] = features
        w = np.vstack([p.weights[f] for f in features]) if features else np.zeros((0, p.n_actions))
        arrays.append(("perceptron", w))
    arrays += [(f"opt:{k}", v) for k, v in sorted(parser.optimizer_state.items())]
    return arrays, extra


def save_model(parser: Parser, path) -> None:
    arrays, extra = _arrays(parser)
    header = {
        "kind": parser.kind,
        "config": parser.config.to_dict(),
        "vocabulary": parser.vocab.to_dict(),
        "labels": parser.labels,
        "use_lstm": parser.config.use_lstm,
        "arrays": [[name, list(a.shape)] for name, a in arrays],
        **extra,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQ", VERSION, len(blob)))
        f.write(blob)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path) -> Parser:
    with open(path, "rb") as f:
        data = f.read()
    if data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    try:
        version, size = struct.unpack_from("<IQ", data, len(MAGIC))
    except struct.error:
        raise ModelFormatError(f"{path}: truncated header") from None
    if version != VERSION:
        raise VersionMismatchError(f"{path}: model format version {version}, expected {VERSION}")
    start = len(MAGIC) + struct.calcsize("<IQ")
    try:
        header = json.loads(data[start:start + size].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ModelFormatError(f"{path}: corrupt header ({e})") from None
    offset = start + size
    arrays: Dict[str, np.ndarray] = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise ModelFormatError(f"{path}: truncated array {name}")
        arrays[name] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise ModelFormatError(f"{path}: {len(data) - offset} trailing bytes")

    config = TrainConfig.from_dict(header["config"])
    vocab = Vocabulary.from_dict(header["vocabulary"])
    parser = Parser(header["kind"], vocab, header["labels"], config)
    if parser.kind == "neural":
        params = {k[len("param:"):]: v for k, v in arrays.items() if k.startswith("param:")}
        if set(params) != set(parser.neural.params):
            raise ModelFormatError(f"{path}: parameter set does not match the configuration")
        for k, v in params.items():
            if v.shape != parser.neural.params[k].shape:
                raise ModelFormatError(f"{path}: parameter {k} has shape {v.shape}")
        parser.neural.params = params
    else:
        w = arrays["perceptron"]
        p = AveragedPerceptron(len(parser.actions))
        p.weights = {f: w[i].copy() for i, f in enumerate(header.get("features", []))}
        parser.perceptron = p
    parser.optimizer_state = {k[len("opt:"):]: v for k, v in arrays.items() if k.startswith("opt:")}
    return parser
