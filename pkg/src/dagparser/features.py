"""Classifier features of a parser state.

Each feature is a (source, channel) pair: the source picks a node, an edge
between two nodes, a past action or the whole graph; the channel picks a
property of it. Non-terminals are represented by a head terminal found by
walking down the graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .dag import HEAD, DagGraph, Node, gap_profile
from .transitions import ParserState

HEAD_PRIORITY = ("parataxis", "conj", "advcl", "xcomp")
SEPARATORS = frozenset([",", ";", ":", "—", "–", "-", "(", ")", '"', "'"])
PREFIX_LENGTH = 1
SUFFIX_LENGTH = 3
SHAPE_RUN = 4

LEXICAL = frozenset("wmt^$")
NUMERIC = frozenset(["h", "q", "x", "y", "P", "C", "I", "E", "M", "N", "node_ratio"])
# channels read off a node's head terminal
TOKEN_CHANNELS = ("w", "m", "u", "t", "#", "^", "$")

_CHILD_SOURCES = ("s0l", "s0r", "s1l", "s1r", "s0ll", "s0lr", "s0rl", "s0rr",
                  "s1ll", "s1lr", "s1rl", "s1rr")
_PARENT_SOURCES = ("s0L", "s0R", "s1L", "s1R", "b0L", "b0R")

# legal channels per source
TABLE: Dict[str, str] = {
    "s0": "wmtuepT#^$xhqyPCIEMN",
    "s1": "wmtueT#^$xhyN",
    "s2": "wmtueT#^$xhy",
    "s3": "wmtueT#^$xhyN",
    "b0": "wmtuT#^$hPCIEMN",
    "b1": "wmtuT#^$",
    "b2": "wmtuT#^$",
    "b3": "wmtuT#^$",
    **{s: "wme#^$" for s in _CHILD_SOURCES + _PARENT_SOURCES},
    "s0>s1": "x",
    "s0>b0": "xe",
    "s1>s0": "x",
    "b0>s0": "xe",
    "a0": "eA",
    "a1": "eA",
}
NODE_SOURCES = tuple(s for s in TABLE if "." not in s and ">" not in s and s[0] in "sb")
EDGE_SOURCES = ("s0>s1", "s0>b0", "s1>s0", "b0>s0")
ACTION_SOURCES = ("a0", "a1")
GLOBAL = "node_ratio"
# channels that are never produced here (named entities) but keep their slot
ABSENT = frozenset("NT")


class NoTerminal(ValueError):
    pass


@dataclass(frozen=True)
class FeatureTemplate:
    source: str
    channel: str

    def __post_init__(self):
        if self.source == "global":
            if self.channel != GLOBAL:
                raise ValueError(f"global source has only {GLOBAL}")
        elif self.channel not in TABLE.get(self.source, ""):
            raise ValueError(f"illegal feature {self.source}.{self.channel}")

    @property
    def numeric(self) -> bool:
        return self.channel in NUMERIC or (self.channel == "x" and ">" in self.source)

    def __str__(self) -> str:
        return GLOBAL if self.source == "global" else f"{self.source}.{self.channel}"


def templates(delexicalized: bool = False) -> List[FeatureTemplate]:
    out = [FeatureTemplate(src, ch) for src, chans in TABLE.items() for ch in chans
           if not (delexicalized and ch in LEXICAL)]
    return out + [FeatureTemplate("global", GLOBAL)]


@dataclass
class FeatureVector:
    categorical: Dict[str, str] = field(default_factory=dict)
    numeric: Dict[str, float] = field(default_factory=dict)
    # text position of each node source's head terminal (None when absent)
    terminals: Dict[str, Optional[int]] = field(default_factory=dict)

    def dump(self) -> str:
        lines = [f"{k}={v}" for k, v in sorted(self.categorical.items())]
        lines += [f"{k}={v:g}" for k, v in sorted(self.numeric.items())]
        return "\n".join(lines) + "\n"


def word_shape(text: str) -> str:
    out: List[str] = []
    run = 0
    for ch in text:
        c = "X" if ch.isupper() else "x" if ch.islower() else "d" if ch.isdigit() else ch
        run = run + 1 if out and out[-1] == c else 1
        if run <= SHAPE_RUN:
            out.append(c)
    return "".join(out)


def _children(g: DagGraph, node: Node, remote: Optional[bool] = None) -> List[int]:
    kids = [e.child for e in node.outgoing if remote is None or e.remote == remote]
    return sorted(kids, key=lambda c: (g[c].swap_index, c))


def head_terminal(g: DagGraph, node: int) -> int:
    """Descend from ``node`` by ``head`` edges, then by label priority, then
    to the leftmost child, until a terminal is reached."""
    seen = set()
    while not g[node].is_terminal:
        if node in seen:
            raise NoTerminal(f"cycle below node {node}")
        seen.add(node)
        n = g[node]
        primary = [e for e in n.outgoing if not e.remote]
        nxt = next((e.child for e in primary if e.label == HEAD), None)
        if nxt is None:
            for label in HEAD_PRIORITY:
                nxt = next((e.child for e in primary if e.label == label), None)
                if nxt is not None:
                    break
        if nxt is None:
            kids = _children(g, n, remote=False) or _children(g, n, remote=True)
            if not kids:
                raise NoTerminal(f"node {node} has no terminal below it")
            nxt = kids[0]
        node = nxt
    return node


def first_incoming_label(node: Node) -> Optional[str]:
    primary = [e for e in node.incoming if not e.remote]
    if primary:
        return primary[0].label
    return node.incoming[0].label if node.incoming else None


class Extractor:
    """Feature extraction; ``delexicalized`` drops word, lemma, fine tag,
    prefix and suffix channels."""

    def __init__(self, delexicalized: bool = False):
        self.delexicalized = delexicalized

    def _nodes(self, state: ParserState) -> Dict[str, Optional[int]]:
        g = state.graph
        stack, buffer = state.stack, state.buffer
        src: Dict[str, Optional[int]] = {}
        for i in range(4):
            src[f"s{i}"] = stack[-1 - i] if len(stack) > i else None
            src[f"b{i}"] = buffer[i] if len(buffer) > i else None

        def ends(node, remote_parents=False):
            if node is None:
                return None, None
            if remote_parents:
                items = sorted((e.parent for e in g[node].incoming),
                               key=lambda p: (g[p].swap_index, p))
            else:
                items = _children(g, g[node])
            return (items[0], items[-1]) if items else (None, None)

        for s in ("s0", "s1"):
            l, r = ends(src[s])
            src[s + "l"], src[s + "r"] = l, r
            for side, child in (("l", l), ("r", r)):
                ll, rr = ends(child)
                src[s + side + "l"], src[s + side + "r"] = ll, rr
        for s in ("s0", "s1", "b0"):
            src[s + "L"], src[s + "R"] = ends(src[s], remote_parents=True)
        return src

    def extract(self, state: ParserState) -> FeatureVector:
        g = state.graph
        fv = FeatureVector()
        cat, num = fv.categorical, fv.numeric
        src = self._nodes(state)
        heads: Dict[str, Optional[int]] = {}
        for s in NODE_SOURCES:
            node = src[s]
            term = None
            if node is not None:
                try:
                    term = head_terminal(g, node)
                except NoTerminal:
                    term = None
            heads[s] = term
            fv.terminals[s] = None if term is None else g[term].position
            chans = TABLE[s]
            if node is None:
                continue
            n = g[node]
            if term is not None:
                t = g[term]
                values = {"w": t.text, "m": t.lemma, "u": t.upos, "t": t.xpos,
                          "#": word_shape(t.text) if t.text else "",
                          "^": t.text[:PREFIX_LENGTH], "$": t.text[-SUFFIX_LENGTH:]}
                for ch, v in values.items():
                    if ch in chans and v and not (self.delexicalized and ch in LEXICAL):
                        cat[f"{s}.{ch}"] = v
            if "e" in chans:
                label = first_incoming_label(n)
                if label is not None:
                    cat[f"{s}.e"] = label
            if "h" in chans:
                num[f"{s}.h"] = float(g.height(node))
            if "x" in chans or "y" in chans:
                gap_type, gap_sum = gap_profile(g.terminal_yield(node))
                num[f"{s}.x"] = float(gap_type)
                num[f"{s}.y"] = float(gap_sum)
            if "P" in chans:
                num[f"{s}.P"] = float(len(n.incoming))
                num[f"{s}.C"] = float(len(n.outgoing))
                num[f"{s}.I"] = 0.0
                num[f"{s}.E"] = float(sum(e.remote for e in n.outgoing))
                num[f"{s}.M"] = float(sum(e.remote for e in n.incoming))

        if src["s0"] is not None and src["s1"] is not None:
            count = self._separators(state, heads["s0"], heads["s1"])
            cat["s0.p"] = "1" if count else "0"
            num["s0.q"] = float(count)

        for name in EDGE_SOURCES:
            a, b = (src[x] for x in name.split(">"))
            edge = None
            if a is not None and b is not None:
                edge = next((e for e in g[a].outgoing if e.child == b), None)
            num[f"{name}.x"] = 0.0 if edge is None else 1.0
            if edge is not None and "e" in TABLE[name]:
                cat[f"{name}.e"] = edge.label

        for i, name in enumerate(ACTION_SOURCES):
            if len(state.history) > i:
                t = state.history[-1 - i]
                cat[f"{name}.A"] = t.kind
                if t.label is not None:
                    cat[f"{name}.e"] = t.label

        n_term = sum(1 for n in g.nodes if n.is_terminal)
        num[GLOBAL] = (len(g.nodes) - n_term) / n_term if n_term else 0.0
        return fv

    @staticmethod
    def _separators(state: ParserState, a: Optional[int], b: Optional[int]) -> int:
        if a is None or b is None:
            return 0
        g = state.graph
        lo, hi = sorted((g[a].position, g[b].position))
        return sum(1 for t in g.terminals if lo < t.position < hi and t.text in SEPARATORS)


def extract(state: ParserState, delexicalized: bool = False) -> FeatureVector:
    return Extractor(delexicalized).extract(state)
