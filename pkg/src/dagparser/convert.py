"""Conversion between CoNLL-U sentences and the unified DAG format.

Every token becomes a terminal. Each token that heads something gets one
non-terminal with a ``head`` edge to its terminal; the token's dependents
hang from that non-terminal under their (subtype-stripped) relation. The
root token's non-terminal is the graph root. Enhanced dependencies that
differ from the basic one become remote edges.
"""
from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .conllu import ROOT_ID, Sentence, Token, TokenId, validate
from .dag import HEAD, NONTERMINAL, ROOT, CycleError, DagGraph

FALLBACK_RELATION = "dep"


class ConversionError(ValueError):
    pass


def strip_subtype(relation: str) -> str:
    return relation.split(":", 1)[0]


def enhanced_pairs(token: Token) -> List[Tuple[int, str]]:
    """Enhanced dependencies of a word that the DAG can carry.

    Drops entries headed by null nodes, entries equal to the basic
    dependency after stripping, self-loops and non-basic root attachments.
    """
    basic = (token.head, strip_subtype(token.deprel)) if token.deprel else None
    out: List[Tuple[int, str]] = []
    for head, rel in token.deps:
        if not head.is_word:
            continue
        pair = (head.index, strip_subtype(rel))
        if pair == basic or pair in out or head.index == token.id.index or head.index == 0:
            continue
        out.append(pair)
    return out


def ud_to_dag(sentence: Sentence, check: bool = True) -> DagGraph:
    if check:
        problems = validate(sentence)
        if problems:
            raise ConversionError("; ".join(problems))
    words = sentence.words
    n = len(words)
    if n == 0:
        raise ConversionError("empty sentence")
    heads = {t.id.index: t.head for t in words}
    rels = {t.id.index: strip_subtype(t.deprel) for t in words}
    remotes = {t.id.index: enhanced_pairs(t) for t in words}
    root_word = next(i for i, h in heads.items() if h == 0)

    has_nt = {h for h in heads.values() if h} | {root_word}
    for pairs in remotes.values():
        has_nt.update(h for h, _ in pairs)

    g = DagGraph()
    g.add_node(ROOT, 0)
    for t in words:
        g.add_terminal(t.id.index, t.form or "", t.lemma or "", t.upos or "", t.xpos or "",
                       t.feats or "", t.misc or "")
    # node ids: root 0, terminals 1..n, then one non-terminal per head token
    nt: Dict[int, int] = {root_word: g.root}
    for i in sorted(has_nt - {root_word}):
        nt[i] = g.add_node(NONTERMINAL, i)

    def unit(i: int) -> int:
        return nt.get(i, i)

    def remote_target(i: int) -> int:
        return i if unit(i) == g.root else unit(i)

    order: List[int] = []
    todo = [root_word]
    while todo:  # root-down traversal
        i = todo.pop(0)
        order.append(i)
        todo.extend(sorted(d for d, h in heads.items() if h == i))
    for i in order:
        if i in nt:
            g.add_edge(nt[i], i, HEAD)
        if heads[i]:
            g.add_edge(nt[heads[i]], unit(i), rels[i])
    for d in range(1, n + 1):
        for h, rel in remotes[d]:
            try:
                g.add_edge(nt[h], remote_target(d), rel, remote=True)
            except CycleError:
                # the terminal never closes a cycle and decodes to the same token
                g.add_edge(nt[h], d, rel, remote=True)
    return g


def _highest_headed(g: DagGraph, terminal: int) -> int:
    node = terminal
    while True:
        e = g[node].primary_parent
        if e is None or e.label != HEAD:
            return node
        node = e.parent


def _token_of(g: DagGraph, node: int) -> Optional[int]:
    t = g.head_terminal_of(node)
    return None if t is None else g[t].position


def dag_to_ud(graph: DagGraph, tokens: Sequence[Token], comments: Iterable[str] = ()) -> Sentence:
    """Collapse head edges and read the dependency graph back.

    Terminal ``i`` of the graph is matched to the ``i``-th word of
    ``tokens``. Range tokens are passed through; null tokens are dropped.
    Words left without a head are attached to the root word as ``dep``.
    """
    words = [t for t in tokens if t.id.is_word]
    terminals = sorted(graph.terminals, key=lambda t: t.position)
    if len(terminals) != len(words):
        raise ConversionError(f"graph has {len(terminals)} terminals, sentence has {len(words)} words")
    n = len(words)
    by_pos = {t.position: t.id for t in terminals}

    head: Dict[int, int] = {}
    rel: Dict[int, str] = {}
    root_word = _token_of(graph, graph.root)
    for pos in range(1, n + 1):
        top = _highest_headed(graph, by_pos[pos])
        if top == graph.root:
            if root_word == pos:
                head[pos], rel[pos] = 0, "root"
            continue
        e = graph[top].primary_parent
        if e is None:
            continue
        label, parent = e.label, e.parent
        h = _token_of(graph, parent)
        while h is None:  # parent lacks a head edge: climb
            up = graph[parent].primary_parent
            if up is None:
                break
            parent = up.parent
            h = _token_of(graph, parent)
        if h is None or h == pos:
            continue
        head[pos], rel[pos] = h, label

    if root_word is None:
        root_word = next(
            (_token_of(graph, c) for c in graph.primary_children(graph.root) if _token_of(graph, c)),
            1,
        )
        head.pop(root_word, None)
        head[root_word], rel[root_word] = 0, "root"
    for pos in range(1, n + 1):
        if pos not in head:
            head[pos], rel[pos] = root_word, FALLBACK_RELATION

    enhanced: Dict[int, Set[Tuple[int, str]]] = {pos: {(head[pos], rel[pos])} for pos in head}
    for e in graph.edges:
        if not e.remote:
            continue
        d, h = _token_of(graph, e.child), _token_of(graph, e.parent)
        if d is None or h is None or d == h:
            continue
        enhanced[d].add((h, e.label))

    out: List[Token] = []
    for tok in tokens:
        if tok.id.is_null:
            continue
        if not tok.id.is_word:
            out.append(tok.copy())
            continue
        i = tok.id.index
        deps = [(TokenId(h) if h else ROOT_ID, r) for h, r in sorted(enhanced[i])]
        out.append(tok.copy(head=head[i], deprel=rel[i], deps=deps))
    return Sentence(list(comments), out)


def strip_and_drop(sentence: Sentence) -> Sentence:
    """What a DAG round trip is expected to preserve of a sentence.

    Relations lose subtypes, null nodes and their dependencies go, and DEPS
    becomes the basic dependency plus every distinct representable enhanced
    one.
    """
    out: List[Token] = []
    for tok in sentence.tokens:
        if tok.id.is_null:
            continue
        if not tok.id.is_word:
            out.append(tok.copy())
            continue
        rel = strip_subtype(tok.deprel)
        pairs = {(tok.head, rel)} | set(enhanced_pairs(tok))
        deps = [(TokenId(h) if h else ROOT_ID, r) for h, r in sorted(pairs)]
        out.append(tok.copy(deprel=rel, deps=deps))
    return Sentence(list(sentence.comments), out)
