import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagparser.conllu import parse_conllu
from dagparser.convert import dag_to_ud, strip_and_drop, ud_to_dag
from dagparser.dag import HEAD
from dagparser.evaluation import enhanced_las, las
from dagparser.oracle import (GoldUnreachable, Oracle, SearchBudgetExceeded, brute_force_reachable,
                              optimal_transitions, oracle_parse, oracles_for, random_trajectory,
                              reachability_preserving, replay)
from dagparser.transitions import (NODE, RIGHT_EDGE, Finish, Reduce, Shift, Transition,
                                   apply, is_valid, state_for_graph)

TWO = "1\tdogs\tdog\tNOUN\tNNS\t_\t2\tnsubj\t2:nsubj\t_\n2\tbark\tbark\tVERB\tVBP\t_\t0\troot\t0:root\t_\n\n"


def two_word_gold():
    return ud_to_dag(parse_conllu(TWO)[0])


def run(gold, transitions):
    s = state_for_graph(gold)
    for t in transitions:
        s = apply(s, t)
    return s


def test_finish_only_when_done():
    g = two_word_gold()
    seq = oracle_parse(g)
    assert seq[-1] == Finish
    before_finish = replay(g, seq[:-1])
    assert optimal_transitions(before_finish, g) == [Finish]


def test_control_shift_after_we(control_graph):
    s = apply(state_for_graph(control_graph), Shift)
    opt = optimal_transitions(s, control_graph)
    assert Shift in opt
    assert set(opt) <= {t for t in opt if is_valid(s, t)}


def test_reduce_of_finished_top():
    g = two_word_gold()
    s = run(g, [Shift, Transition(RIGHT_EDGE, "nsubj")])  # dogs has all its gold edges
    assert set(optimal_transitions(s, g)) == {Reduce, Shift}
    s = run(g, [Shift, Transition(RIGHT_EDGE, "nsubj"), Reduce, Shift, Transition(RIGHT_EDGE, HEAD)])
    assert optimal_transitions(s, g) == [Reduce]


def test_single_token_oracle():
    g = ud_to_dag(parse_conllu("1\tHi\thi\tINTJ\tUH\t_\t0\troot\t0:root\t_\n\n")[0])
    seq = oracle_parse(g)
    assert seq[0] == Shift and seq[-1] == Finish
    assert Reduce in seq
    assert replay(g, seq).graph.same_structure(g)


def test_control_replay(control, control_graph):
    seq = oracle_parse(control_graph)
    state = replay(control_graph, seq)
    assert state.finished and state.graph.same_structure(control_graph)
    assert sum(e.remote for e in state.graph.edges) == 2
    back = dag_to_ud(state.graph, control.tokens)
    assert las(control, back).f1 == 1.0 and enhanced_las(control, back).f1 == 1.0
    assert oracle_parse(control_graph) == seq


def test_every_fixture_replays(sentences):
    for s in sentences:
        g = ud_to_dag(s)
        state = replay(g, oracle_parse(g))
        assert state.finished and state.graph.same_structure(g)
        out = dag_to_ud(state.graph, s.tokens, s.comments)
        assert out == strip_and_drop(s)


def test_brute_force_examples():
    g = two_word_gold()
    assert brute_force_reachable(state_for_graph(g), g)
    wrong = run(g, [Shift, Shift, Transition(NODE, "obj")])
    assert not brute_force_reachable(wrong, g)
    done = run(g, [Shift, Reduce, Shift, Reduce])
    assert not brute_force_reachable(apply(done, Finish), g)


def test_brute_force_guards(sentences):
    long = next(s for s in sentences if len(s.words) > 5)
    g = ud_to_dag(long)
    with pytest.raises(ValueError):
        brute_force_reachable(state_for_graph(g), g)
    short = ud_to_dag(next(s for s in sentences if len(s.words) == 5))
    with pytest.raises(SearchBudgetExceeded):
        brute_force_reachable(state_for_graph(short), short, budget=3)
    assert not brute_force_reachable(state_for_graph(short), short, depth_limit=3)


def test_oracle_matches_brute_force_on_short(by_name):
    for name in ("short-bark", "single-stop", "mwt-cant"):
        g = ud_to_dag(by_name[name].sentence)
        cache = {}
        for seed in range(5):
            for state in random_trajectory(g, random.Random(seed)):
                assert set(optimal_transitions(state, g)) == reachability_preserving(state, g, cache), name


def test_unreachable_state_raises():
    g = two_word_gold()
    wrong = run(g, [Shift, Shift, Transition(NODE, "obj")])
    with pytest.raises(GoldUnreachable):
        Oracle(g).optimal(wrong)
    with pytest.raises(GoldUnreachable):
        Oracle(g).optimal(apply(run(g, oracle_parse(g)[:-1]), Finish))


def test_preferred_is_optimal_subset(by_name):
    g = ud_to_dag(by_name["nonproj-hearing"].sentence)
    o = Oracle(g)
    for state in random_trajectory(g, random.Random(3), o):
        opt = o.optimal(state)
        pref = o.preferred(state, opt)
        assert pref and set(pref) <= set(opt)


def test_oracles_shared_by_structure(treebank):
    graphs = [ud_to_dag(s) for s in treebank]
    oracles = oracles_for(graphs)
    assert len({id(o) for o in oracles}) < len(graphs)
    assert oracles[0] is oracles[29]  # synthetic sentence 30 reuses the first fixture tree


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["control-made", "relcl-robe", "nonproj-sings", "conj-went"]))
def test_random_trajectories_reach_gold(by_name, seed, name):
    g = ud_to_dag(by_name[name].sentence)
    o = Oracle(g)
    states = random_trajectory(g, random.Random(seed), o)
    last = states[-1]
    assert o.optimal(last) == [Finish] or Finish in o.optimal(last)
    final = apply(last, Finish)
    assert final.graph.same_structure(g)
