"""Pre-trained word vectors in the word2vec text format."""
from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from .vocab import Vocabulary


class VectorFormatError(ValueError):
    pass


def load_pretrained_vectors(path, vocab: Vocabulary, dim: int, limit: int = 250000,
                            base: Optional[np.ndarray] = None,
                            seed: int = 0) -> Tuple[np.ndarray, int]:
    """Word embedding table with rows for known words taken from ``path``.

    The file starts with a "count dimension" line, followed by one word and
    its values per line, most frequent first; only the first ``limit``
    vectors are read. Words not covered keep their row of ``base`` (random
    if not given). Returns the table and the number of rows taken from file.
    """
    size = vocab.size("w")
    if base is None:
        base = np.random.default_rng(seed).normal(0.0, 1.0 / np.sqrt(dim), size=(size, dim))
    table = base.copy()
    found = 0
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise VectorFormatError(f"{path}: first line must be '<count> <dimension>'")
        file_dim = int(header[1])
        if file_dim != dim:
            raise VectorFormatError(f"{path}: vectors have dimension {file_dim}, model expects {dim}")
        for lineno, line in enumerate(f, start=2):
            if lineno - 1 > limit:
                break
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) != dim + 1:
                raise VectorFormatError(f"{path}: line {lineno} has {len(parts) - 1} values, expected {dim}")
            row = vocab.lookup("w", parts[0])
            if row:
                table[row] = np.array(parts[1:], dtype=float)
                found += 1
    return table, found
