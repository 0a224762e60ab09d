"""Per-channel symbol tables with frequency counts."""
from __future__ import annotations

from typing import Dict, Iterable, List, Optional

UNKNOWN = "<unk>"


class FrozenVocabularyError(RuntimeError):
    pass


class Vocabulary:
    """Index 0 of every channel is reserved for unknown or absent symbols."""

    def __init__(self):
        self.symbols: Dict[str, List[str]] = {}
        self.index: Dict[str, Dict[str, int]] = {}
        self.counts: Dict[str, Dict[str, int]] = {}
        self.frozen = False

    def add_channel(self, channel: str) -> None:
        if channel not in self.symbols:
            self.symbols[channel] = [UNKNOWN]
            self.index[channel] = {UNKNOWN: 0}
            self.counts[channel] = {}

    def add(self, channel: str, symbol: Optional[str], count: int = 1) -> None:
        if self.frozen:
            raise FrozenVocabularyError("vocabulary is frozen")
        self.add_channel(channel)
        if not symbol:
            return
        if symbol not in self.index[channel]:
            self.index[channel][symbol] = len(self.symbols[channel])
            self.symbols[channel].append(symbol)
        self.counts[channel][symbol] = self.counts[channel].get(symbol, 0) + count

    def update(self, channel: str, symbols: Iterable[Optional[str]]) -> None:
        for s in symbols:
            self.add(channel, s)

    def freeze(self) -> "Vocabulary":
        self.frozen = True
        return self

    def lookup(self, channel: str, symbol: Optional[str]) -> int:
        if symbol is None:
            return 0
        return self.index.get(channel, {}).get(symbol, 0)

    def count(self, channel: str, symbol: Optional[str]) -> int:
        return self.counts.get(channel, {}).get(symbol, 0)

    def size(self, channel: str) -> int:
        return len(self.symbols.get(channel, [UNKNOWN]))

    def channels(self) -> List[str]:
        return sorted(self.symbols)

    def to_dict(self) -> dict:
        return {ch: [[s, self.counts[ch].get(s, 0)] for s in self.symbols[ch][1:]]
                for ch in sorted(self.symbols)}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        v = cls()
        for ch, entries in data.items():
            v.add_channel(ch)
            for s, c in entries:
                v.add(ch, s, c)
        return v.freeze()

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()
