import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagparser.convert import ud_to_dag
from dagparser.dag import HEAD, NONTERMINAL, ROOT, DagGraph
from dagparser.features import (LEXICAL, FeatureTemplate, NoTerminal, extract, head_terminal, templates,
                                word_shape)
from dagparser.oracle import Oracle, random_trajectory
from dagparser.transitions import NODE, RIGHT_EDGE, Reduce, Shift, Transition, apply, initial_state


def reference_shape(text):
    classes = ["X" if c.isupper() else "x" if c.islower() else "d" if c.isdigit() else c for c in text]
    return "".join("".join(list(run)[:4]) for _, run in itertools.groupby(classes))


@pytest.mark.parametrize("word, shape", [("We", "Xx"), ("1960s", "ddddx"), ("iPhone-7", "xXxxxx-d"),
                                         ("aaaaaaa", "xxxx"), ("12345678", "dddd")])
def test_word_shape(word, shape):
    assert word_shape(word) == shape == reference_shape(word)


@settings(max_examples=300)
@given(st.text(min_size=1, max_size=20))
def test_word_shape_matches_reference(text):
    assert word_shape(text) == reference_shape(text)


def test_head_terminal(control_graph):
    g = control_graph
    welcome = next(e.parent for e in g.edges if e.label == HEAD and g[e.child].text == "welcome")
    assert g[head_terminal(g, welcome)].text == "welcome"
    assert head_terminal(g, 1) == 1
    assert g[head_terminal(g, g.root)].text == "made"


def test_head_terminal_priority_and_leftmost():
    g = DagGraph()
    g.add_node(ROOT, 0)
    for i in range(1, 4):
        g.add_terminal(i, f"w{i}")
    a = g.add_node(NONTERMINAL, 2)
    g.add_edge(a, 1, "advmod")
    g.add_edge(a, 3, "conj")
    assert head_terminal(g, a) == 3
    b = g.add_node(NONTERMINAL, 1)
    g.add_edge(b, 2, "obj")
    g.add_edge(g.root, b, "dep")
    g.add_edge(g.root, a, "dep")
    assert head_terminal(g, g.root) == head_terminal(g, b) == 2  # leftmost by swap index
    empty = g.add_node(NONTERMINAL, 5)
    with pytest.raises(NoTerminal):
        head_terminal(g, empty)
    g.add_edge(empty, 3, "x", remote=True)
    assert head_terminal(g, empty) == 3


def test_initial_state_features(control):
    fv = extract(initial_state(control.words))
    assert fv.categorical["b0.w"] == "We"
    assert fv.categorical["b0.u"] == "PRON"
    assert fv.categorical["b0.t"] == "PRP"
    assert fv.numeric["s0.C"] == 0
    assert fv.numeric["node_ratio"] == 1 / 8


def test_after_shift_and_edge(control):
    s = apply(initial_state(control.words), Shift)
    fv = extract(s)
    assert fv.categorical["s0.$"] == "We"
    assert fv.categorical["s0.^"] == "W"
    assert fv.categorical["s0.#"] == "Xx"
    s = apply(s, Transition(RIGHT_EDGE, "nsubj"))
    fv = extract(s)
    assert fv.categorical["a0.A"] == "RIGHT-EDGE" and fv.categorical["a0.e"] == "nsubj"
    assert fv.categorical["a1.A"] == "SHIFT" and "a1.e" not in fv.categorical
    assert fv.numeric["s1>s0.x"] == 1.0 and fv.numeric["s0>s1.x"] == 0.0
    assert fv.categorical["s0.e"] == "nsubj"
    assert fv.numeric["s0.P"] == 1 and fv.numeric["s1.h"] == 1


def test_separator_counts(by_name):
    s = by_name["ellipsis-wish"].sentence  # I wish all happy holidays , and moreso , peace ...
    state = initial_state(s.words)
    for _ in range(5):
        state = apply(state, Shift)
    fv = extract(state)  # s1 = happy, s0 = holidays
    assert fv.numeric["s0.q"] == 0 and fv.categorical["s0.p"] == "0"
    for _ in range(2):
        state = apply(apply(state, Shift), Reduce)
    state = apply(state, Shift)  # s1 = holidays (5), s0 = moreso (8)
    fv = extract(state)
    assert fv.numeric["s0.q"] == 1 and fv.categorical["s0.p"] == "1"
    state = apply(state, Reduce)
    state = apply(apply(state, Shift), Reduce)
    state = apply(state, Shift)  # s1 = holidays (5), s0 = peace (10)
    assert state.graph[state.stack[-1]].text == "peace"
    assert extract(state).numeric["s0.q"] == 2


def test_templates_are_legal():
    with pytest.raises(ValueError):
        FeatureTemplate("b1", "h")
    with pytest.raises(ValueError):
        FeatureTemplate("global", "w")
    names = {str(t) for t in templates()}
    assert "node_ratio" in names and "s0.x" in names and "b0.x" not in names


def test_delexicalized_drops_exactly_lexical_channels():
    full = set(templates())
    delex = set(templates(delexicalized=True))
    assert full - delex == {t for t in full if t.channel in set("wmt^$")}
    assert LEXICAL == frozenset("wmt^$")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.sampled_from(["control-made", "relcl-robe", "ellipsis-wish", "mwt-cine"]))
def test_extract_invariants(by_name, seed, name):
    s = by_name[name].sentence
    g = ud_to_dag(s)
    legal = {str(t) for t in templates()}
    for state in random_trajectory(g, random.Random(seed), Oracle(g)):
        fv = extract(state)
        keys = set(fv.categorical) | set(fv.numeric)
        assert keys <= legal
        nodes = state.graph.nodes
        n_term = sum(n.is_terminal for n in nodes)
        assert fv.numeric["node_ratio"] == (len(nodes) - n_term) / n_term
        if state.stack and state.stack[0] == state.graph.root and len(state.stack) == 1:
            assert fv.numeric["s0.P"] == 0
        if state.history and state.history[-1].kind == NODE:
            assert fv.numeric["b0.C"] == 1
        delex = extract(state, delexicalized=True)
        dropped = (set(fv.categorical) | set(fv.numeric)) - (set(delex.categorical) | set(delex.numeric))
        assert all(k.split(".")[-1] in set("wmt^$") for k in dropped)
        assert delex.numeric == fv.numeric
