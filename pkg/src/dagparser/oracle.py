"""Training oracle: the set of transitions that keep the gold graph reachable.

Nodes built by the parser are matched to gold nodes structurally: terminals
by position, the root to the root, and a node created by ``Node(X)`` over
``x`` to the gold primary parent of ``x``'s match. Edge and Reduce decisions
are local; whether a Shift, Swap or Node keeps the gold graph reachable is
decided by running a deterministic completion policy on a light copy of the
state.

``brute_force_reachable`` is an exhaustive search over the real transition
system, kept independent of the policy so the two can check each other.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .dag import HEAD, DagGraph, Edge
from .transitions import (
    FINISH, LEFT_EDGE, LEFT_REMOTE, NODE, REDUCE, RIGHT_EDGE, RIGHT_REMOTE, SHIFT, SWAP,
    Finish, ParserState, Reduce, Shift, Swap, Transition, all_transitions, apply,
    apply_inplace, is_valid, state_for_graph,
)

EdgeKey = Tuple[int, int, str, bool]  # (gold parent, gold child, label, remote)


class GoldUnreachable(RuntimeError):
    """The state can no longer produce the gold graph."""


class SearchBudgetExceeded(RuntimeError):
    pass


def _key(e: Edge) -> EdgeKey:
    return (e.parent, e.child, e.label, e.remote)


class _Gold:
    """Precomputed lookups over a gold graph."""

    def __init__(self, gold: DagGraph):
        self.graph = gold
        self.root = gold.root
        self.edges: Set[EdgeKey] = {_key(e) for e in gold.edges}
        self.by_position = {t.position: t.id for t in gold.terminals}
        self.parent: Dict[int, Edge] = {}
        self.incident: Dict[int, List[EdgeKey]] = {n.id: [] for n in gold.nodes}
        self.between: Dict[Tuple[int, int], List[EdgeKey]] = {}
        for e in gold.edges:
            k = _key(e)
            if not e.remote:
                self.parent[e.child] = e
            self.incident[e.parent].append(k)
            self.incident[e.child].append(k)
            self.between.setdefault((e.parent, e.child), []).append(k)
        self.nonterminals = {n.id for n in gold.nodes if not n.is_terminal and not n.is_root}
        self.labels = sorted({e.label for e in gold.edges} | {HEAD})

    def match(self, state: ParserState) -> Dict[int, int]:
        """Map every state node to its gold counterpart, or raise."""
        g = state.graph
        m: Dict[int, int] = {}
        for node in g.nodes:
            if node.is_root:
                m[node.id] = self.root
            elif node.is_terminal:
                if node.position not in self.by_position:
                    raise GoldUnreachable(f"terminal {node.position} not in gold")
                m[node.id] = self.by_position[node.position]
            else:
                first = next((e for e in node.outgoing if not e.remote), None)
                if first is None:
                    raise GoldUnreachable(f"node {node.id} has no primary child")
                up = self.parent.get(m[first.child])
                if up is None or up.label != first.label or up.parent not in self.nonterminals:
                    raise GoldUnreachable(f"node {node.id} matches no gold node")
                m[node.id] = up.parent
        if len(set(m.values())) != len(m):
            raise GoldUnreachable("two nodes match the same gold node")
        for e in g.edges:
            if (m[e.parent], m[e.child], e.label, e.remote) not in self.edges:
                raise GoldUnreachable(f"edge {e} is not in gold")
        return m


@dataclass
class _Sim:
    """State projected onto gold node ids, cheap to copy and step."""

    gold: _Gold
    stack: List[int]
    buffer: List[int]
    built: Set[EdgeKey]
    index: Dict[int, float]  # dyadic swap indices, exact as floats
    remaining: Dict[int, int]
    n: int
    finished: bool = False

    @classmethod
    def of(cls, state: ParserState, gold: _Gold) -> "_Sim":
        m = gold.match(state)
        built = {(m[e.parent], m[e.child], e.label, e.remote) for e in state.graph.edges}
        index = {m[node.id]: float(node.swap_index) for node in state.graph.nodes}
        remaining = {v: sum(k not in built for k in ks) for v, ks in gold.incident.items()}
        return cls(gold, [m[s] for s in state.stack], [m[b] for b in state.buffer],
                   built, index, remaining, state.n, state.finished)

    def copy(self) -> "_Sim":
        return _Sim(self.gold, list(self.stack), list(self.buffer), set(self.built),
                    dict(self.index), dict(self.remaining), self.n, self.finished)

    # structural queries

    def has_primary_parent(self, v: int) -> bool:
        e = self.gold.parent.get(v)
        return e is not None and _key(e) in self.built

    def has_head(self, v: int) -> bool:
        return any(k[2] == HEAD and k[0] == v and k in self.built for k in self.gold.incident[v])

    def complete(self) -> bool:
        return len(self.built) == len(self.gold.edges)

    def pending_between(self, a: int, b: int) -> List[EdgeKey]:
        g = self.gold
        ks = g.between.get((a, b), []) + g.between.get((b, a), [])
        return [k for k in ks if k not in self.built]

    def edge_transition(self, k: EdgeKey) -> Transition:
        left = k[0] == self.stack[-1]
        if k[3]:
            return Transition(LEFT_REMOTE if left else RIGHT_REMOTE, k[2])
        return Transition(LEFT_EDGE if left else RIGHT_EDGE, k[2])

    def can_reduce(self, v: int) -> bool:
        return v != self.gold.root and (v not in self.gold.nonterminals or self.has_head(v))

    def can_swap(self) -> bool:
        return (len(self.stack) >= 2 and self.stack[-2] != self.gold.root
                and self.index[self.stack[-2]] < self.index[self.stack[-1]])

    def node_label(self) -> Optional[str]:
        """Label of a Node transition creating the top's missing gold parent."""
        if not self.stack:
            return None
        s0 = self.stack[-1]
        up = self.gold.parent.get(s0)
        if (up is None or s0 == self.gold.root or up.parent not in self.gold.nonterminals
                or up.parent in self.index):
            return None
        return up.label

    # stepping

    def step(self, t: Transition) -> None:
        kind = t.kind
        if kind == SHIFT:
            self.stack.append(self.buffer.pop(0))
        elif kind == REDUCE:
            self.stack.pop()
        elif kind == SWAP:
            self.buffer.insert(0, self.stack.pop(-2))
        elif kind == NODE:
            x = self.stack[-1]
            y = self.gold.parent[x].parent
            b0 = self.index[self.buffer[0]] if self.buffer else float(self.n + 1)
            self.index[y] = (self.index[x] + b0) / 2
            self.buffer.insert(0, y)
            self._build(_key(self.gold.parent[x]))
        elif kind == FINISH:
            self.stack.clear()
            self.finished = True
        else:
            s0, s1 = self.stack[-1], self.stack[-2]
            parent, child = (s0, s1) if kind in (LEFT_EDGE, LEFT_REMOTE) else (s1, s0)
            self._build((parent, child, t.label, t.remote))

    def _build(self, k: EdgeKey) -> None:
        self.built.add(k)
        self.remaining[k[0]] -= 1
        self.remaining[k[1]] -= 1

    # completion policy

    def policy(self) -> Optional[Transition]:
        stack, buffer = self.stack, self.buffer
        if not stack:
            return None
        s0 = stack[-1]
        if len(stack) == 1:
            if buffer:
                return Shift
            return Finish if self.complete() else None
        s1 = stack[-2]
        pending = self.pending_between(s0, s1)
        if pending:
            pending.sort(key=lambda k: k[3])  # primary first
            return self.edge_transition(pending[0])
        if self.remaining[s0] == 0 and self.can_reduce(s0):
            # a finished top can still carry s1 into the buffer, past blockers
            if self.can_swap() and self._buried(s1):
                return Swap
            return Reduce
        label = self.node_label()
        if label is not None:
            return Transition(NODE, label)
        if self.can_swap():
            if self.remaining[s1] == 0:
                return Swap
            if self._buried(s0):
                return Swap
        if buffer:
            return Shift
        if self.can_swap():
            return Swap
        return None

    def _buried(self, v: int) -> bool:
        """Whether ``v`` waits on a partner below the top two stack items."""
        deeper = set(self.stack[:-2])
        return any(self._partner(k, v) in deeper for k in self._pending(v))

    def _pending(self, v: int) -> List[EdgeKey]:
        return [k for k in self.gold.incident[v] if k not in self.built]

    @staticmethod
    def _partner(k: EdgeKey, v: int) -> int:
        return k[1] if k[0] == v else k[0]

    def completes(self, limit: int) -> bool:
        sim = self.copy()
        for _ in range(limit):
            if sim.finished:
                return True
            t = sim.policy()
            if t is None:
                return False
            sim.step(t)
        return sim.finished

    def key(self):
        created = tuple(sorted((v, i) for v, i in self.index.items() if v in self.gold.nonterminals))
        return (tuple(self.stack), tuple(self.buffer), frozenset(self.built), created)

    def moves(self) -> List[Transition]:
        """Gold-consistent transitions worth exploring, policy choice first.

        A pending gold edge between the top two items is never a mistake,
        so when one exists it is the only move explored.
        """
        stack = self.stack
        if len(stack) >= 2:
            pending = self.pending_between(stack[-1], stack[-2])
            if pending:
                return [self.edge_transition(min(pending, key=lambda k: k[3]))]
        out = []
        if stack and len(stack) == 1 and not self.buffer and self.complete():
            return [Finish]
        label = self.node_label()
        if label is not None:
            out.append(Transition(NODE, label))
        if stack and self.remaining[stack[-1]] == 0 and self.can_reduce(stack[-1]):
            out.append(Reduce)
        if self.can_swap():
            out.append(Swap)
        if self.buffer:
            out.append(Shift)
        first = self.policy()
        if first in out:
            out.remove(first)
            out.insert(0, first)
        return out


class Oracle:
    """Optimal-transition oracle bound to one gold graph.

    A candidate transition is kept if the completion policy finishes the
    gold graph from the resulting state; if the policy gets stuck, an
    exhaustive search over gold-consistent continuations decides. ``budget``
    caps that search per query (``None`` means no cap). A query that runs
    out is answered conservatively: the transition is judged not optimal.
    By default the search is uncapped for sentences of up to
    ``EXACT_TOKENS`` tokens, where the state space is small, and capped
    at ``LONG_BUDGET`` expansions for longer ones.
    """

    EXACT_TOKENS = 6
    LONG_BUDGET = 2_000

    def __init__(self, gold: DagGraph, budget: Optional[int] = -1):
        self.gold = _Gold(gold)
        self.limit = 20 * (len(gold.nodes) + len(gold.edges)) + 20
        if budget == -1:
            budget = None if len(gold.terminals) <= self.EXACT_TOKENS else self.LONG_BUDGET
        self.budget = budget
        self.memo: Dict[tuple, bool] = {}
        self.exhausted = 0

    def optimal(self, state: ParserState) -> List[Transition]:
        if state.finished:
            raise GoldUnreachable("state is already finished")
        sim = _Sim.of(state, self.gold)
        out: List[Transition] = []
        stack = sim.stack
        if len(stack) >= 2:
            for k in sim.pending_between(stack[-1], stack[-2]):
                t = sim.edge_transition(k)
                if is_valid(state, t):
                    out.append(t)
        candidates = []
        label = sim.node_label()
        if label is not None:
            candidates.append(Transition(NODE, label))
        if stack and sim.remaining[stack[-1]] == 0:
            candidates.append(Reduce)
        candidates += [Swap, Shift]
        for t in candidates:
            if is_valid(state, t):
                nxt = sim.copy()
                nxt.step(t)
                if self.reachable(nxt):
                    out.append(t)
        if is_valid(state, Finish) and sim.complete():
            out.append(Finish)
        if not out:
            raise GoldUnreachable(f"no transition keeps gold reachable from {state.describe()}")
        return out

    def preferred(self, state: ParserState, optimal: Optional[Sequence[Transition]] = None
                  ) -> List[Transition]:
        """Optimal transitions a rule-based oracle would propose.

        Rules, in order: gold edges between the two top items; Node for a
        missing gold parent of the top; Reduce of a finished top; Swap when
        the top waits on something below the second item; Shift when none
        of these apply; Finish. The result is intersected with the optimal
        set, falling back to the whole set if the rules propose nothing
        optimal (possible in states no canonical derivation visits).
        """
        optimal = list(self.optimal(state) if optimal is None else optimal)
        sim = _Sim.of(state, self.gold)
        rules: List[Transition] = []
        stack = sim.stack
        if len(stack) >= 2:
            rules += [sim.edge_transition(k) for k in sim.pending_between(stack[-1], stack[-2])]
        label = sim.node_label()
        if label is not None:
            rules.append(Transition(NODE, label))
        if stack and sim.remaining[stack[-1]] == 0:
            rules.append(Reduce)
        if len(stack) >= 2 and sim.can_swap() and (sim._buried(stack[-1]) or sim._buried(stack[-2])):
            rules.append(Swap)
        if not rules:
            rules += [Shift, Swap, Finish]
        chosen = [t for t in optimal if t in rules]
        return chosen or optimal

    def reachable(self, sim: _Sim) -> bool:
        if sim.finished:
            return sim.complete()
        if sim.completes(self.limit):
            return True
        return self._search(sim)

    def _search(self, start: _Sim) -> bool:
        memo = self.memo
        k0 = start.key()
        if k0 in memo:
            return memo[k0]
        frames = [(k0, start, iter(start.moves()))]
        pushed = 0
        while frames:
            key, sim, moves = frames[-1]
            t = next(moves, None)
            if t is None:
                memo[key] = False
                frames.pop()
                continue
            child = sim.copy()
            child.step(t)
            if child.finished:
                found = child.complete()
            else:
                ck = child.key()
                found = memo.get(ck)
                if found is None:
                    pushed += 1
                    if self.budget is not None and pushed > self.budget:
                        self.exhausted += 1
                        return False
                    frames.append((ck, child, iter(child.moves())))
                    continue
            if found:
                for k, _, _ in frames:
                    memo[k] = True
                return True
        return memo[k0]


def structure_key(gold: DagGraph) -> tuple:
    """Key equal for graphs the oracle cannot tell apart (words aside)."""
    return (len(gold.nodes), len(gold.terminals), tuple(sorted(_key(e) for e in gold.edges)))


def oracles_for(graphs: Sequence[DagGraph]) -> List["Oracle"]:
    """One oracle per graph, shared between graphs of identical structure
    so the search memo carries over."""
    shared: Dict[tuple, Oracle] = {}
    out = []
    for g in graphs:
        k = structure_key(g)
        if k not in shared:
            shared[k] = Oracle(g)
        out.append(shared[k])
    return out


def optimal_transitions(state: ParserState, gold: DagGraph) -> List[Transition]:
    return Oracle(gold).optimal(state)


PRIORITY = {
    LEFT_EDGE: 0, RIGHT_EDGE: 0, LEFT_REMOTE: 1, RIGHT_REMOTE: 1,
    NODE: 2, SWAP: 3, REDUCE: 4, SHIFT: 5, FINISH: 6,
}


def oracle_parse(gold: DagGraph, oracle: Optional[Oracle] = None) -> List[Transition]:
    """Transition sequence rebuilding ``gold``, picking by fixed priority."""
    oracle = oracle or Oracle(gold)
    state = state_for_graph(gold)
    while not state.finished:
        options = oracle.optimal(state)
        t = min(options, key=lambda t: (PRIORITY[t.kind], str(t)))
        apply_inplace(state, t)
        if state.steps > oracle.limit:
            raise GoldUnreachable("oracle parse does not terminate")
    return list(state.history)


def replay(gold: DagGraph, transitions: Sequence[Transition]) -> ParserState:
    state = state_for_graph(gold)
    for t in transitions:
        apply_inplace(state, t)
    return state


# exhaustive reference search


class _BruteGold:
    def __init__(self, gold: DagGraph):
        self.root = gold.root
        self.by_pos = {t.position: t.id for t in gold.terminals}
        self.parent = {e.child: e for e in gold.edges if not e.remote}
        self.edges = {(e.parent, e.child, e.label, e.remote) for e in gold.edges}
        self.is_root = {n.id: n.is_root for n in gold.nodes}

    def embed(self, state: ParserState) -> Optional[Dict[int, int]]:
        """Gold counterpart of every built node, or None if the graph built
        so far is not a subgraph of gold."""
        m: Dict[int, int] = {}
        for node in state.graph.nodes:
            if node.is_root:
                m[node.id] = self.root
            elif node.is_terminal:
                if node.position not in self.by_pos:
                    return None
                m[node.id] = self.by_pos[node.position]
            else:
                kids = [e for e in node.outgoing if not e.remote]
                up = self.parent.get(m[kids[0].child]) if kids else None
                if up is None or up.label != kids[0].label or self.is_root[up.parent]:
                    return None
                m[node.id] = up.parent
        if len(set(m.values())) != len(m):
            return None
        for e in state.graph.edges:
            if (m[e.parent], m[e.child], e.label, e.remote) not in self.edges:
                return None
        return m

    def built(self, state: ParserState, m: Dict[int, int]) -> FrozenSet[EdgeKey]:
        return frozenset((m[e.parent], m[e.child], e.label, e.remote) for e in state.graph.edges)

    def key(self, state: ParserState, m: Dict[int, int], edges: FrozenSet[EdgeKey]):
        created = tuple(sorted((m[n.id], float(n.swap_index)) for n in state.graph.nodes if not n.is_terminal))
        return (tuple(m[s] for s in state.stack), tuple(m[b] for b in state.buffer), edges, created)

    def stranded(self, state: ParserState, m: Dict[int, int], built: FrozenSet[EdgeKey]) -> bool:
        """Whether a node already removed from stack and buffer still misses
        gold edges; such nodes never come back."""
        live = {m[v] for v in state.stack} | {m[v] for v in state.buffer}
        made = set(m.values())
        for k in self.edges:
            if k not in built:
                for v in k[:2]:
                    if v in made and v not in live:
                        return True
        return False

    def candidates(self, state: ParserState, m: Dict[int, int],
                   built: FrozenSet[EdgeKey]) -> List[Transition]:
        """Transitions that neither build a non-gold edge or node nor drop a
        node still missing gold edges (reduced nodes never return). Every
        other transition leads to a state ``embed`` rejects or cannot finish."""
        # order only affects speed: building moves first finds gold sooner
        tail = [Shift, Swap, Finish]
        out: List[Transition] = []
        stack = state.stack
        if not stack:
            return tail
        s0 = m[stack[-1]]
        if all(k in built for k in self.edges if s0 in (k[0], k[1])):
            out.append(Reduce)
        up = self.parent.get(s0)
        if up is not None and not self.is_root[up.parent] and up.parent not in m.values():
            out.append(Transition(NODE, up.label))
        if len(stack) >= 2:
            s1 = m[stack[-2]]
            for k in self.edges:
                if k in built:
                    continue
                if k[:2] == (s0, s1):
                    out.append(Transition(LEFT_REMOTE if k[3] else LEFT_EDGE, k[2]))
                elif k[:2] == (s1, s0):
                    out.append(Transition(RIGHT_REMOTE if k[3] else RIGHT_EDGE, k[2]))
        return out + tail


def brute_force_reachable(
    state: ParserState,
    gold: DagGraph,
    depth_limit: Optional[int] = None,
    cache: Optional[dict] = None,
    budget: int = 5_000_000,
    max_length: int = 5,
) -> bool:
    """Whether some valid transition sequence turns ``state`` into ``gold``.

    Every transition builds something, removes a stack item, adds a
    permanent inversion of swap order or moves the buffer boundary right,
    so the search space is acyclic and needs no depth bound; ``depth_limit``
    optionally caps the number of further transitions.
    """
    if state.n > max_length:
        raise ValueError(f"sentence longer than {max_length} tokens; exhaustive search refused")
    ref = _BruteGold(gold)
    memo = {} if cache is None else cache
    counter = [0]

    def search(s: ParserState, depth: Optional[int]) -> bool:
        m = ref.embed(s)
        if m is None:
            return False
        if s.finished:
            return s.graph.same_structure(gold)
        built = ref.built(s, m)
        if depth == 0 or ref.stranded(s, m, built):
            return False
        key = ref.key(s, m, built)
        known = memo.get(key)
        if known is not None and (known[0] or known[1] is None
                                  or (depth is not None and known[1] >= depth)):
            return known[0]
        counter[0] += 1
        if counter[0] > budget:
            raise SearchBudgetExceeded(f"more than {budget} states")
        nxt = None if depth is None else depth - 1
        result = any(search(apply(s, t), nxt) for t in ref.candidates(s, m, built) if is_valid(s, t))
        memo[key] = (result, depth)
        return result

    return search(state, depth_limit)


def reachability_preserving(state: ParserState, gold: DagGraph, cache: Optional[dict] = None,
                            labels: Sequence[str] = ()) -> Set[Transition]:
    """All valid transitions after which gold stays reachable (by brute force)."""
    cache = {} if cache is None else cache
    candidates = all_transitions({e.label for e in gold.edges} | set(labels))
    return {t for t in candidates
            if is_valid(state, t) and brute_force_reachable(apply(state, t), gold, cache=cache)}


def random_trajectory(gold: DagGraph, rng: random.Random, oracle: Optional[Oracle] = None,
                      choices=None) -> List[ParserState]:
    """States visited by a random walk over optimal transitions."""
    oracle = oracle or Oracle(gold)
    state = state_for_graph(gold)
    visited = []
    while not state.finished:
        visited.append(state.copy())
        options = sorted(choices(state) if choices else oracle.optimal(state), key=str)
        apply_inplace(state, rng.choice(options))
    return visited
