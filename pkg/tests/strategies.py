"""Hypothesis strategies shared by the property tests."""
from hypothesis import strategies as st

from dagparser.conllu import Sentence, Token, TokenId

RELATIONS = ["nsubj", "nsubj:pass", "obj", "obl", "obl:on", "amod", "advmod", "conj", "cc", "det",
             "mark", "xcomp", "nmod:poss", "punct", "aux", "ref", "acl:relcl"]
FORMS = ["a", "the", "dog", "Anna", "runs", "7", "-", ",", "can't", "iPhone"]


@st.composite
def sentences(draw, max_words=8, enhanced=True, ranges=True):
    """A random valid sentence: basic tree, optional extra DEPS entries and
    optional multi-word token ranges."""
    n = draw(st.integers(1, max_words))
    order = draw(st.permutations(range(1, n + 1)))
    heads = {order[0]: 0}
    for k in range(1, n):
        heads[order[k]] = order[draw(st.integers(0, k - 1))]
    tokens = []
    covered_until = 0
    for i in range(1, n + 1):
        if ranges and i > covered_until and i < n and draw(st.integers(0, 5)) == 0:
            tokens.append(Token(TokenId(i, 0, i + 1), form="xy"))
            covered_until = i + 1
        rel = "root" if heads[i] == 0 else draw(st.sampled_from(RELATIONS))
        deps = [(TokenId(heads[i]), rel)]
        if enhanced:
            for _ in range(draw(st.integers(0, 2))):
                h = draw(st.integers(1, n))
                r = draw(st.sampled_from(RELATIONS))
                if h != i and (TokenId(h), r) not in deps:
                    deps.append((TokenId(h), r))
        form = draw(st.sampled_from(FORMS))
        tokens.append(Token(TokenId(i), form=form, lemma=form.lower(), upos="X", xpos="x",
                            head=heads[i], deprel=rel, deps=deps))
    return Sentence([f"# sent_id = h{n}"], tokens)
