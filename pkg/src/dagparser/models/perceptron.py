"""Averaged multiclass perceptron over sparse string features."""
from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..features import FeatureVector

# numeric channels are bucketed so a linear model can use them
NUMERIC_CAP = 6


def sparse_features(fv: FeatureVector) -> List[str]:
    out = ["bias"]
    out += [f"{k}={v}" for k, v in fv.categorical.items()]
    for k, v in fv.numeric.items():
        if k == "node_ratio":
            out.append(f"{k}={min(int(v * 4), 12)}")
        else:
            out.append(f"{k}={min(int(v), NUMERIC_CAP)}")
    s0w, s1w = fv.categorical.get("s0.w"), fv.categorical.get("s1.w")
    s0u, s1u, b0u = (fv.categorical.get(k) for k in ("s0.u", "s1.u", "b0.u"))
    out.append(f"s0u|s1u={s0u}|{s1u}")
    out.append(f"s0u|b0u={s0u}|{b0u}")
    out.append(f"s0w|s1w={s0w}|{s1w}")
    out.append(f"s0u|s1u|a0={s0u}|{s1u}|{fv.categorical.get('a0.A')}")
    return out


class AveragedPerceptron:
    """Weights per feature are vectors over the action set.

    Averaging uses lazy timestamps: ``totals[f]`` holds the sum of the
    weight snapshots of ``f`` up to ``stamps[f]``.
    """

    def __init__(self, n_actions: int):
        self.n_actions = n_actions
        self.weights: Dict[str, np.ndarray] = {}
        self.totals: Dict[str, np.ndarray] = {}
        self.stamps: Dict[str, int] = {}
        self.instances = 0

    def scores(self, features: Iterable[str]) -> np.ndarray:
        out = np.zeros(self.n_actions)
        for f in features:
            w = self.weights.get(f)
            if w is not None:
                out += w
        return out

    def update(self, features: Sequence[str], good: Optional[int], bad: Optional[int]) -> None:
        """Process one training instance; moves weights only if ``good != bad``."""
        c = self.instances + 1
        if good is not None and bad is not None and good != bad:
            for f in features:
                w = self.weights.get(f)
                if w is None:
                    w = self.weights[f] = np.zeros(self.n_actions)
                    self.totals[f] = np.zeros(self.n_actions)
                    self.stamps[f] = c - 1
                self.totals[f] += (c - 1 - self.stamps[f]) * w
                self.stamps[f] = c - 1
                w[good] += 1.0
                w[bad] -= 1.0
        self.instances = c

    def averaged(self) -> Dict[str, np.ndarray]:
        """Mean of the weights after each processed instance."""
        n = self.instances
        if n == 0:
            return {f: w.copy() for f, w in self.weights.items()}
        return {f: (self.totals[f] + (n - self.stamps[f]) * w) / n for f, w in self.weights.items()}

    def average(self) -> None:
        """Replace the weights by their average; stops further training."""
        self.weights = self.averaged()
        self.totals = {f: np.zeros(self.n_actions) for f in self.weights}
        self.stamps = {f: 0 for f in self.weights}
        self.instances = 0
