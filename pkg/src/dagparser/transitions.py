"""Parser state and the nine-action transition set for DAG parsing."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

from .dag import HEAD, NONTERMINAL, ROOT, DagGraph

log = logging.getLogger(__name__)

SHIFT = "SHIFT"
REDUCE = "REDUCE"
NODE = "NODE"
LEFT_EDGE = "LEFT-EDGE"
RIGHT_EDGE = "RIGHT-EDGE"
LEFT_REMOTE = "LEFT-REMOTE"
RIGHT_REMOTE = "RIGHT-REMOTE"
SWAP = "SWAP"
FINISH = "FINISH"

KINDS = (SHIFT, REDUCE, NODE, LEFT_EDGE, RIGHT_EDGE, LEFT_REMOTE, RIGHT_REMOTE, SWAP, FINISH)
LABELED = frozenset((NODE, LEFT_EDGE, RIGHT_EDGE, LEFT_REMOTE, RIGHT_REMOTE))
EDGE_KINDS = frozenset((LEFT_EDGE, RIGHT_EDGE, LEFT_REMOTE, RIGHT_REMOTE))


class InvalidTransition(ValueError):
    pass


class NoValidTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class Transition:
    kind: str
    label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transition {self.kind!r}")
        if (self.kind in LABELED) != (self.label is not None):
            raise ValueError(f"{self.kind} {'needs' if self.kind in LABELED else 'takes no'} label")

    @property
    def is_edge(self) -> bool:
        return self.kind in EDGE_KINDS

    @property
    def remote(self) -> bool:
        return self.kind in (LEFT_REMOTE, RIGHT_REMOTE)

    def __str__(self) -> str:
        return self.kind if self.label is None else f"{self.kind}-{self.label}"

    @classmethod
    def parse(cls, text: str) -> "Transition":
        for kind in sorted(LABELED, key=len, reverse=True):
            if text.startswith(kind + "-"):
                return cls(kind, text[len(kind) + 1:])
        return cls(text)


Shift = Transition(SHIFT)
Reduce = Transition(REDUCE)
Swap = Transition(SWAP)
Finish = Transition(FINISH)


def all_transitions(labels: Iterable[str]) -> List[Transition]:
    """Every transition over a label set, in a fixed order.

    ``head`` is always included; remote edges never carry it.
    """
    labels = sorted(set(labels) | {HEAD})
    out = [Shift, Reduce, Swap, Finish]
    out += [Transition(NODE, x) for x in labels]
    for kind in (LEFT_EDGE, RIGHT_EDGE):
        out += [Transition(kind, x) for x in labels]
    for kind in (LEFT_REMOTE, RIGHT_REMOTE):
        out += [Transition(kind, x) for x in labels if x != HEAD]
    return out


@dataclass
class ParserState:
    graph: DagGraph
    stack: List[int]
    buffer: List[int]
    n: int
    finished: bool = False
    steps: int = 0
    history: List[Transition] = field(default_factory=list)

    def copy(self) -> "ParserState":
        return ParserState(self.graph.copy(), list(self.stack), list(self.buffer), self.n,
                           self.finished, self.steps, list(self.history))

    @property
    def terminals(self) -> List[int]:
        return [t.id for t in sorted(self.graph.terminals, key=lambda t: t.position)]

    def _name(self, i: int) -> str:
        node = self.graph[i]
        return f"{node.text or node.position}" if node.is_terminal else f"<{i}>"

    def describe_stack(self) -> str:
        return f"[{' '.join(map(self._name, self.stack))}]"

    def describe(self) -> str:
        return f"{self.describe_stack()} | [{' '.join(map(self._name, self.buffer))}]"


def initial_state(tokens: Sequence) -> ParserState:
    """Root on the stack, one terminal per token in the buffer.

    ``tokens`` are CoNLL-U word tokens or plain strings.
    """
    if not tokens:
        raise ValueError("cannot parse an empty sentence")
    g = DagGraph()
    g.add_node(ROOT, 0)
    for i, tok in enumerate(tokens, start=1):
        if isinstance(tok, str):
            g.add_terminal(i, tok)
        else:
            g.add_terminal(i, tok.form or "", tok.lemma or "", tok.upos or "", tok.xpos or "")
    return ParserState(g, [g.root], [t for t in range(1, len(tokens) + 1)], len(tokens))


def state_for_graph(gold: DagGraph) -> ParserState:
    """Initial state over the terminals of an existing graph."""
    terminals = sorted(gold.terminals, key=lambda t: t.position)
    g = DagGraph()
    g.add_node(ROOT, 0)
    ids = [g.add_terminal(t.position, t.text, t.lemma, t.upos, t.xpos) for t in terminals]
    return ParserState(g, [g.root], ids, len(ids))


def _edge_ends(state: ParserState, t: Transition):
    """(parent, child) of an edge transition, or None if the stack is too short."""
    if len(state.stack) < 2:
        return None
    s0, s1 = state.stack[-1], state.stack[-2]
    if t.kind in (LEFT_EDGE, LEFT_REMOTE):
        return s0, s1
    return s1, s0


def is_valid(state: ParserState, t: Transition) -> bool:
    if state.finished:
        return False
    g = state.graph
    stack = state.stack
    kind = t.kind
    if kind == SHIFT:
        return bool(state.buffer)
    if kind == FINISH:
        return not state.buffer and len(stack) == 1 and stack[0] == g.root
    if not stack:
        return False
    s0 = g[stack[-1]]
    if kind == REDUCE:
        if s0.is_root:
            return False
        return s0.is_terminal or s0.head_edge is not None
    if kind == NODE:
        return not s0.is_root and s0.primary_parent is None
    if kind == SWAP:
        if len(stack) < 2:
            return False
        s1 = g[stack[-2]]
        return not s1.is_root and s1.swap_index < s0.swap_index
    ends = _edge_ends(state, t)
    if ends is None:
        return False
    parent, child = g[ends[0]], g[ends[1]]
    if parent.is_terminal or child.is_root:
        return False
    if not t.remote and child.primary_parent is not None:
        return False
    if t.label == HEAD and (t.remote or parent.head_edge is not None):
        return False
    for e in child.incoming:
        if e.parent == parent.id and e.label == t.label and e.remote == t.remote:
            return False
    return not g.has_path(child.id, parent.id)


def valid_transitions(state: ParserState, transitions: Iterable[Transition]) -> List[Transition]:
    return [t for t in transitions if is_valid(state, t)]


def valid_flags(state: ParserState, transitions: Sequence[Transition]) -> List[bool]:
    """``[is_valid(state, t) for t in transitions]``, sharing the label-independent
    checks (cycle tests above all) between transitions of the same kind."""
    base: Dict[str, bool] = {}
    existing = set()
    if len(state.stack) >= 2 and not state.finished:
        g = state.graph
        s0, s1 = state.stack[-1], state.stack[-2]
        for a, b in ((s0, s1), (s1, s0)):
            existing.update((a, b, e.label, e.remote) for e in g[b].incoming if e.parent == a)
    out = []
    for t in transitions:
        if not t.is_edge:
            out.append(is_valid(state, t))
            continue
        if t.kind not in base:
            ends = _edge_ends(state, t)
            ok = False
            if ends is not None and not state.finished:
                g = state.graph
                parent, child = g[ends[0]], g[ends[1]]
                ok = (not parent.is_terminal and not child.is_root
                      and (t.remote or child.primary_parent is None)
                      and not g.has_path(child.id, parent.id))
            base[t.kind] = ok
        ok = base[t.kind]
        if ok:
            parent, child = _edge_ends(state, t)
            if t.label == HEAD and (t.remote or state.graph[parent].head_edge is not None):
                ok = False
            elif (parent, child, t.label, t.remote) in existing:
                ok = False
        out.append(ok)
    return out


def apply_inplace(state: ParserState, t: Transition) -> ParserState:
    if not is_valid(state, t):
        raise InvalidTransition(f"{t} is not valid in {state.describe()}")
    g = state.graph
    stack, buffer = state.stack, state.buffer
    kind = t.kind
    if kind == SHIFT:
        stack.append(buffer.pop(0))
    elif kind == REDUCE:
        stack.pop()
    elif kind == NODE:
        x = stack[-1]
        b0 = g[buffer[0]].swap_index if buffer else Fraction(state.n + 1)
        y = g.add_node(NONTERMINAL, (g[x].swap_index + b0) / 2)
        g.add_edge(y, x, t.label)
        buffer.insert(0, y)
    elif kind in EDGE_KINDS:
        parent, child = _edge_ends(state, t)
        g.add_edge(parent, child, t.label, remote=t.remote)
    elif kind == SWAP:
        buffer.insert(0, stack.pop(-2))
    elif kind == FINISH:
        stack.clear()
        state.finished = True
    state.steps += 1
    state.history.append(t)
    return state


def apply(state: ParserState, t: Transition) -> ParserState:
    """Successor state; ``state`` itself is left untouched."""
    return apply_inplace(state.copy(), t)


def default_step_limit(n: int) -> int:
    return 10 * (2 * n + 1)


Scorer = Callable[[ParserState], Mapping[Transition, float]]


def choose(state: ParserState, scores: Mapping[Transition, float]) -> Optional[Transition]:
    """Highest-scoring valid transition; ties go to the first in ``scores`` order."""
    best, best_score = None, None
    for t, s in scores.items():
        if (best_score is None or s > best_score) and is_valid(state, t):
            best, best_score = t, s
    return best


def run_greedy(
    tokens: Sequence,
    scorer: Scorer,
    step_limit: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
    strict: bool = False,
) -> DagGraph:
    """Greedy parse. Stops at Finish, at ``step_limit`` or when nothing is
    valid; an unfinished graph is left for the converter's fallback
    attachment. ``strict`` turns the no-valid-transition case into an error."""
    state = tokens if isinstance(tokens, ParserState) else initial_state(tokens)
    limit = default_step_limit(state.n) if step_limit is None else step_limit
    if limit <= 0:
        raise ValueError("step_limit must be positive")
    while not state.finished and state.steps < limit:
        scores = scorer(state)
        t = choose(state, scores)
        if trace is not None:
            n_valid = sum(1 for u in scores if is_valid(state, u))
            b0 = state._name(state.buffer[0]) if state.buffer else "-"
            trace(f"{state.steps} | {state.describe_stack()} | {b0} | {t} | {n_valid}")
        if t is None:
            if strict:
                raise NoValidTransition(f"no valid transition in {state.describe()}")
            log.warning("no valid transition after %d steps in %s", state.steps, state.describe())
            break
        apply_inplace(state, t)
    return state.graph
