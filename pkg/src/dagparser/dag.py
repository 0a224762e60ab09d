"""Rooted labeled DAG over sentence tokens, with primary and remote edges.

Primary edges form a tree; remote edges add reentrancy. Every node carries a
swap index, kept as an exact ``Fraction``.

Debug text format (``to_text``/``from_text``), one tab-separated record per
line after a ``# dag v1`` header; other ``#`` lines are ignored::

    node  ID  root|nonterminal  SWAP_INDEX
    node  ID  terminal  SWAP_INDEX  POSITION  FORM  LEMMA  UPOS  XPOS  [FEATS  MISC]
    edge  PARENT  CHILD  LABEL  primary|remote

Node ids are dense and in order; empty text fields are written as ``_``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

ROOT = "root"
TERMINAL = "terminal"
NONTERMINAL = "nonterminal"

HEAD = "head"


class GraphError(ValueError):
    pass


class CycleError(GraphError):
    pass


class DuplicatePrimaryParentError(GraphError):
    pass


class EdgeToRootError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


@dataclass(frozen=True)
class Edge:
    parent: int
    child: int
    label: str
    remote: bool = False


@dataclass
class Node:
    id: int
    kind: str
    swap_index: Fraction
    position: int = 0  # 1-based text position, terminals only
    text: str = ""
    lemma: str = ""
    upos: str = ""
    xpos: str = ""
    feats: str = ""
    misc: str = ""
    outgoing: List[Edge] = field(default_factory=list)
    incoming: List[Edge] = field(default_factory=list)

    @property
    def is_terminal(self) -> bool:
        return self.kind == TERMINAL

    @property
    def is_root(self) -> bool:
        return self.kind == ROOT

    @property
    def primary_parent(self) -> Optional[Edge]:
        for e in self.incoming:
            if not e.remote:
                return e
        return None

    @property
    def head_edge(self) -> Optional[Edge]:
        for e in self.outgoing:
            if e.label == HEAD and not e.remote:
                return e
        return None


class DagGraph:
    """Mutable DAG. Node ids are dense integers in creation order."""

    def __init__(self):
        self.nodes: List[Node] = []
        self.edges: List[Edge] = []
        self.root: Optional[int] = None

    # construction

    def add_node(
        self,
        kind: str,
        swap_index=0,
        position: int = 0,
        text: str = "",
        lemma: str = "",
        upos: str = "",
        xpos: str = "",
        feats: str = "",
        misc: str = "",
    ) -> int:
        if kind not in (ROOT, TERMINAL, NONTERMINAL):
            raise ValueError(f"unknown node kind {kind!r}")
        if kind == ROOT and self.root is not None:
            raise GraphError("graph already has a root")
        node = Node(len(self.nodes), kind, Fraction(swap_index), position, text, lemma, upos, xpos,
                    feats, misc)
        self.nodes.append(node)
        if kind == ROOT:
            self.root = node.id
        return node.id

    def add_terminal(self, position: int, text: str = "", lemma: str = "", upos: str = "", xpos: str = "",
                     feats: str = "", misc: str = "") -> int:
        return self.add_node(TERMINAL, position, position, text, lemma, upos, xpos, feats, misc)

    def check_edge(self, parent: int, child: int, label: str, remote: bool = False) -> None:
        """Raise the GraphError that adding this edge would cause, if any."""
        c = self.nodes[child]
        if c.is_root:
            raise EdgeToRootError(f"edge into root {child}")
        if not remote and c.primary_parent is not None:
            raise DuplicatePrimaryParentError(f"node {child} already has a primary parent")
        for e in c.incoming:
            if e.parent == parent and e.label == label and e.remote == remote:
                raise DuplicateEdgeError(f"duplicate edge {parent}->{child} {label}")
        if self.has_path(child, parent):
            raise CycleError(f"edge {parent}->{child} would close a cycle")

    def add_edge(self, parent: int, child: int, label: str, remote: bool = False) -> Edge:
        self.check_edge(parent, child, label, remote)
        edge = Edge(parent, child, label, remote)
        self.edges.append(edge)
        self.nodes[parent].outgoing.append(edge)
        self.nodes[child].incoming.append(edge)
        return edge

    def copy(self) -> "DagGraph":
        g = DagGraph()
        g.root = self.root
        g.nodes = [
            Node(n.id, n.kind, n.swap_index, n.position, n.text, n.lemma, n.upos, n.xpos, n.feats, n.misc)
            for n in self.nodes
        ]
        for e in self.edges:
            g.edges.append(e)
            g.nodes[e.parent].outgoing.append(e)
            g.nodes[e.child].incoming.append(e)
        return g

    # queries

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node: int) -> Node:
        return self.nodes[node]

    @property
    def terminals(self) -> List[Node]:
        return [n for n in self.nodes if n.is_terminal]

    @property
    def nonterminals(self) -> List[Node]:
        """Non-terminal nodes, the root included."""
        return [n for n in self.nodes if not n.is_terminal]

    def has_path(self, u: int, v: int) -> bool:
        """Directed path u ~> v over all edges; reflexive."""
        if u == v:
            return True
        seen = {u}
        todo = [u]
        while todo:
            for e in self.nodes[todo.pop()].outgoing:
                if e.child == v:
                    return True
                if e.child not in seen:
                    seen.add(e.child)
                    todo.append(e.child)
        return False

    def primary_children(self, node: int) -> Iterator[int]:
        return (e.child for e in self.nodes[node].outgoing if not e.remote)

    def height(self, node: int) -> int:
        """Longest downward chain of primary edges."""
        best = 0
        todo = [(node, 0)]
        while todo:
            n, depth = todo.pop()
            best = max(best, depth)
            todo.extend((c, depth + 1) for c in self.primary_children(n))
        return best

    def terminal_yield(self, node: int) -> List[int]:
        """Sorted text positions of terminals under ``node`` via primary edges."""
        out = []
        todo = [node]
        while todo:
            n = self.nodes[todo.pop()]
            if n.is_terminal:
                out.append(n.position)
            todo.extend(self.primary_children(n.id))
        return sorted(out)

    def gap_profile(self, node: int) -> Tuple[int, int]:
        return gap_profile(self.terminal_yield(node))

    def head_terminal_of(self, node: int) -> Optional[int]:
        """Terminal reached by following outgoing head edges, if any."""
        seen = set()
        while not self.nodes[node].is_terminal:
            if node in seen:
                return None
            seen.add(node)
            e = self.nodes[node].head_edge
            if e is None:
                return None
            node = e.child
        return node

    def is_acyclic(self) -> bool:
        indeg = [0] * len(self.nodes)
        for e in self.edges:
            indeg[e.child] += 1
        todo = [i for i, d in enumerate(indeg) if d == 0]
        seen = 0
        while todo:
            n = todo.pop()
            seen += 1
            for e in self.nodes[n].outgoing:
                indeg[e.child] -= 1
                if indeg[e.child] == 0:
                    todo.append(e.child)
        return seen == len(self.nodes)

    def invariant_violations(self) -> List[str]:
        """Every broken structural invariant, for tests and debugging."""
        problems = []
        roots = [n.id for n in self.nodes if n.is_root]
        if len(roots) != 1 or roots[0] != self.root:
            problems.append(f"expected exactly one root, found {roots}")
        for n in self.nodes:
            primary = [e for e in n.incoming if not e.remote]
            if len(primary) > 1:
                problems.append(f"node {n.id} has {len(primary)} primary parents")
            if n.is_root and n.incoming:
                problems.append("root has incoming edges")
            if n.is_terminal and n.outgoing:
                problems.append(f"terminal {n.id} has children")
            heads = [e for e in n.outgoing if e.label == HEAD]
            if len(heads) > 1:
                problems.append(f"node {n.id} has {len(heads)} head edges")
            keys = [(e.parent, e.label, e.remote) for e in n.incoming]
            if len(keys) != len(set(keys)):
                problems.append(f"node {n.id} has duplicate incoming edges")
        if not self.is_acyclic():
            problems.append("graph has a cycle")
        return problems

    def signature(self) -> Tuple:
        """Isomorphism-invariant description: terminals fixed by position,
        non-terminals identified by their labeled downward structure."""
        memo: Dict[int, Tuple] = {}

        def sig(n: int) -> Tuple:
            if n not in memo:
                node = self.nodes[n]
                if node.is_terminal:
                    memo[n] = ("T", node.position)
                else:
                    memo[n] = (node.kind == ROOT,) + tuple(
                        sorted((e.label, e.remote, sig(e.child)) for e in node.outgoing)
                    )
            return memo[n]

        return tuple(sorted((sig(n.id) for n in self.nodes), key=repr))

    def same_structure(self, other: "DagGraph") -> bool:
        return len(self.edges) == len(other.edges) and self.signature() == other.signature()

    # debug text format

    def to_text(self) -> str:
        lines = ["# dag v1"]
        for n in self.nodes:
            if n.is_terminal:
                lines.append(
                    "\t".join(
                        ("node", str(n.id), n.kind, str(n.swap_index), str(n.position),
                         n.text or "_", n.lemma or "_", n.upos or "_", n.xpos or "_",
                         n.feats or "_", n.misc or "_")
                    )
                )
            else:
                lines.append("\t".join(("node", str(n.id), n.kind, str(n.swap_index))))
        for e in self.edges:
            lines.append("\t".join(("edge", str(e.parent), str(e.child), e.label,
                                    "remote" if e.remote else "primary")))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DagGraph":
        g = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            try:
                if cols[0] == "node":
                    if int(cols[1]) != len(g.nodes):
                        raise GraphError(f"node ids must be dense, got {cols[1]}")
                    if cols[2] == TERMINAL:
                        # feats and misc (columns 10-11) are optional
                        if len(cols) not in (9, 11):
                            raise GraphError(f"terminal record needs 9 or 11 columns, got {len(cols)}")
                        text_cols = [c if c != "_" else "" for c in cols[5:]]
                        g.add_node(TERMINAL, Fraction(cols[3]), int(cols[4]), *text_cols)
                    else:
                        g.add_node(cols[2], Fraction(cols[3]))
                elif cols[0] == "edge":
                    g.add_edge(int(cols[1]), int(cols[2]), cols[3], cols[4] == "remote")
                else:
                    raise GraphError(f"unknown record {cols[0]!r}")
            except (IndexError, ValueError) as e:
                raise GraphError(f"line {lineno}: {e}") from None
        return g


def gap_profile(positions: Iterable[int]) -> Tuple[int, int]:
    """(gap type, total gap length) of a set of text positions.

    Gap type is 0 for a contiguous yield, 1 for exactly one gap and 2 for more.
    """
    pos = sorted(set(positions))
    gaps = [b - a - 1 for a, b in zip(pos, pos[1:]) if b - a > 1]
    return min(len(gaps), 2), sum(gaps)
