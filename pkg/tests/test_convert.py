import pytest
from hypothesis import given, settings

from dagparser.conllu import TokenId, parse_conllu, write_conllu
from dagparser.convert import (ConversionError, dag_to_ud, enhanced_pairs, strip_and_drop,
                               strip_subtype, ud_to_dag)
from dagparser.dag import HEAD, DagGraph
from dagparser.evaluation import enhanced_las, las

from strategies import sentences


@pytest.mark.parametrize("rel, out", [("nsubj:pass", "nsubj"), ("nmod:on", "nmod"), ("conj", "conj"),
                                      ("ref", "ref")])
def test_strip_subtype(rel, out):
    assert strip_subtype(rel) == out


def head_nt(g, text):
    return next(e.parent for e in g.edges if e.label == HEAD and g[e.child].text == text)


def test_control_conversion(control_graph):
    g = control_graph
    assert g.invariant_violations() == []
    assert len(g.terminals) == 8
    made, feel, welcome = head_nt(g, "made"), head_nt(g, "feel"), head_nt(g, "welcome")
    assert made == g.root
    assert len(g.nonterminals) == 3
    remotes = sorted((e.parent, e.child, e.label) for e in g.edges if e.remote)
    assert remotes == sorted([(feel, 1, "nsubj"), (welcome, 1, "nsubj")])
    primary = {(g[e.child].text or e.child, e.label) for e in g.edges if not e.remote and e.label != HEAD}
    assert primary == {("We", "nsubj"), ("were", "aux"), ("to", "mark"), (feel, "xcomp"),
                       ("very", "advmod"), (welcome, "xcomp"), (".", "punct")}


def test_single_token():
    s = parse_conllu("1\tHi\thi\tINTJ\tUH\t_\t0\troot\t0:root\t_\n\n")[0]
    g = ud_to_dag(s)
    assert len(g) == 2
    assert [(e.parent, e.child, e.label, e.remote) for e in g.edges] == [(0, 1, HEAD, False)]


def test_ellipsis_drops_null_node(by_name):
    s = by_name["ellipsis-wish"].sentence
    assert any(t.id.is_null for t in s.tokens)
    g = ud_to_dag(s)
    assert len(g.terminals) == len(s.words)
    assert not any(e.remote for e in g.edges if g[e.child].text in (",", "and", "moreso"))
    labels = {g[e.child].text: e.label for e in g.edges if not e.remote and g[e.child].is_terminal}
    assert labels["moreso"] == "orphan"
    peace = head_nt(g, "peace")
    assert g[peace].primary_parent.label == "conj"


def test_relcl_cycle_becomes_acyclic(by_name):
    s = by_name["relcl-robe"].sentence
    g = ud_to_dag(s)
    assert g.is_acyclic() and g.invariant_violations() == []
    assert any(e.remote and e.label == "ref" for e in g.edges)


def test_control_back(control, control_graph):
    out = dag_to_ud(control_graph, control.tokens)
    assert [t.deprel for t in out.words] == ["nsubj", "aux", "root", "mark", "xcomp", "advmod", "xcomp", "punct"]
    assert [t.head for t in out.words] == [3, 3, 0, 5, 3, 7, 5, 3]
    assert out.words[0].deps == [(TokenId(3), "nsubj"), (TokenId(5), "nsubj"), (TokenId(7), "nsubj")]
    assert out.words[0].feats == control.words[0].feats


def test_round_trip_equals_expected(cases):
    for case in cases:
        s = case.sentence
        assert ud_to_dag(s).to_text() == case.expected_dag, case.name
        back = dag_to_ud(ud_to_dag(s), s.tokens, s.comments[:1])
        assert write_conllu([back]) == case.expected_roundtrip, case.name
        expected = strip_and_drop(s)
        expected.comments = s.comments[:1]
        assert write_conllu([back]) == write_conllu([expected])


def test_round_trip_scores_perfectly(sentences):
    back = [dag_to_ud(ud_to_dag(s), s.tokens, s.comments) for s in sentences]
    assert las(sentences, back).f1 == 1.0
    assert enhanced_las(sentences, back).f1 == 1.0


def test_remote_equal_to_primary_listed_once(control, control_graph):
    g = control_graph.copy()
    g.add_edge(g.root, 2, "aux", remote=True)  # duplicates were's basic dependency
    out = dag_to_ud(g, control.tokens)
    assert out.words[1].deps == [(TokenId(3), "aux")]


def test_terminal_count_mismatch(control, control_graph):
    with pytest.raises(ConversionError):
        dag_to_ud(control_graph, control.tokens[:-1])


def test_fallback_attaches_orphans(control):
    g = DagGraph.from_text(ud_to_dag(control).to_text())
    bare = DagGraph()
    bare.add_node("root", 0)
    for t in g.terminals:
        bare.add_terminal(t.position, t.text)
    bare.add_edge(bare.root, 3, HEAD)
    out = dag_to_ud(bare, control.tokens)
    assert [t.head for t in out.words] == [3, 3, 0, 3, 3, 3, 3, 3]
    assert {t.deprel for i, t in enumerate(out.words) if i != 2} == {"dep"}


def test_invalid_sentence_rejected():
    s = parse_conllu("1\ta\ta\tX\tX\t_\t1\tdep\t_\t_\n\n")[0]
    with pytest.raises(ConversionError, match="self-head"):
        ud_to_dag(s)


@settings(max_examples=200, deadline=None)
@given(sentences())
def test_conversion_properties(s):
    g = ud_to_dag(s)
    assert g.invariant_violations() == []
    assert len(g.terminals) == len(s.words)
    heads = {t.head for t in s.words if t.head} | {h for t in s.words for h, _ in enhanced_pairs(t)}
    root_word = next(t.id.index for t in s.words if t.head == 0)
    assert len(g.nonterminals) == len(heads | {root_word})
    back = dag_to_ud(g, s.tokens, s.comments)
    assert len(back.words) == len(s.words)
    assert [t.head for t in back.words] == [t.head for t in s.words]
    assert [t.deprel for t in back.words] == [strip_subtype(t.deprel) for t in s.words]
    for orig, new in zip(s.words, back.words):
        assert set(enhanced_pairs(orig)) <= {(h.index, r) for h, r in new.deps}
    assert write_conllu([back]) == write_conllu([strip_and_drop(s)])
