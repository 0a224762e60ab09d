import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dagparser.conllu import parse_conllu
from dagparser.evaluation import (EvalResult, EvaluationError, enhanced_las, enhanced_percentage,
                                  enhanced_set, format_report, las, report)

from eval_cases import CASES, NULL_GOLD, sentence
from strategies import sentences as random_sentences


@pytest.mark.parametrize("name, gold, system, counts, prf", CASES, ids=[c[0] for c in CASES])
def test_hand_built_cases(name, gold, system, counts, prf):
    r = enhanced_las([sentence(gold)], [sentence(system)])
    assert (r.correct, r.system, r.gold) == counts
    assert (r.precision, r.recall, r.f1) == pytest.approx(prf, abs=1e-12)


def test_we_enhanced_set(control):
    assert {x for x in enhanced_set(control) if x[0] == 1} == {(1, 5, "nsubj"), (1, 7, "nsubj")}


def test_basic_only_token_has_empty_set():
    assert enhanced_set(sentence({})) == set()


def test_null_heads_excluded():
    assert enhanced_set(NULL_GOLD) == {(1, 3, "nsubj")}


def test_las_examples():
    gold = parse_conllu("1\ta\ta\tX\tX\t_\t2\tnsubj:pass\t_\t_\n2\tb\tb\tX\tX\t_\t0\troot\t_\t_\n\n")[0]
    same_stripped = parse_conllu("1\ta\ta\tX\tX\t_\t2\tnsubj\t_\t_\n2\tb\tb\tX\tX\t_\t0\troot\t_\t_\n\n")[0]
    half = parse_conllu("1\ta\ta\tX\tX\t_\t2\tobj\t_\t_\n2\tb\tb\tX\tX\t_\t0\troot\t_\t_\n\n")[0]
    assert las(gold, gold).f1 == 1.0
    assert las(gold, same_stripped).f1 == 1.0
    r = las(gold, half)
    assert r.f1 == 0.5 and r.precision == r.recall == 0.5


def test_mismatches_raise():
    a = sentence({})
    one_word = parse_conllu("1\ta\ta\tX\tX\t_\t0\troot\t_\t_\n\n")[0]
    with pytest.raises(EvaluationError):
        las([a], [a, a])
    with pytest.raises(EvaluationError):
        enhanced_las([a], [one_word])


def test_enhanced_percentage():
    assert enhanced_percentage([sentence({})]) == 0.0
    assert enhanced_percentage([]) == 0.0
    # 5 enhanced dependencies over 95 words: 5 four-word sentences and 75 single words
    single = parse_conllu("1\ta\ta\tX\tX\t_\t0\troot\t_\t_\n\n")[0]
    corpus = [sentence({1: ["3:nsubj"]}) for _ in range(5)] + [single] * 75
    assert sum(len(s.words) for s in corpus) == 95
    assert enhanced_percentage(corpus) == pytest.approx(5.0)


def test_report_format(sentences):
    rep = report(sentences, sentences)
    assert rep["las"]["f1"] == 1.0 and rep["enhanced_las"]["f1"] == 1.0
    text = format_report(rep)
    assert text.splitlines()[0].startswith("LAS") and "F1=100.00" in text
    assert f"Sentences     {len(sentences)}" in text


def test_both_empty_in_report():
    rep = report([sentence({})], [sentence({})])
    assert rep["enhanced_las"] == {"precision": 1.0, "recall": 1.0, "f1": 1.0, "correct": 0, "system": 0, "gold": 0}


@settings(max_examples=200)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_result_bounds(correct, extra_sys, extra_gold):
    r = EvalResult.from_counts(correct, correct + extra_sys, correct + extra_gold)
    assert 0 <= r.precision <= 1 and 0 <= r.recall <= 1 and 0 <= r.f1 <= 1
    assert r.f1 <= max(r.precision, r.recall) + 1e-12
    if r.precision + r.recall > 0:
        assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_metric_symmetry_and_identity(data):
    gold = data.draw(random_sentences(max_words=6))
    n = len(gold.words)
    system = data.draw(random_sentences(max_words=6).filter(lambda s: len(s.words) == n))
    assert enhanced_las(gold, gold).f1 == 1.0 and las(gold, gold).f1 == 1.0
    ab, ba = enhanced_las(gold, system), enhanced_las(system, gold)
    assert (ab.precision, ab.recall, ab.correct) == (ba.recall, ba.precision, ba.correct)
