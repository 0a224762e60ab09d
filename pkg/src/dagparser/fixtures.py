"""Bundled mini-treebank and slow reference implementations for tests.

Layout of ``dagparser/data``::

    fixtures.conllu           hand-built sentences; ``# tags =`` lists phenomena
    fixtures.dag              expected ud_to_dag output per sentence (debug format)
    fixtures.expected.conllu  expected dag_to_ud(ud_to_dag(s)) per sentence

Records in the two expected files are blank-line separated and start with
``# sent_id = NAME``. The reference helpers at the bottom are deliberately
naive and share no code with the library functions they check.
"""
from __future__ import annotations

import os
import random
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Dict, Iterable, List, Sequence, Set, Tuple

import numpy as np

from .conllu import Sentence, parse_conllu, validate, write_conllu
from .dag import DagGraph

# phenomena every case set must cover at least twice
PHENOMENA = ("control", "conj", "ellipsis", "relcl", "nonprojective", "subtype", "case", "mwt")


class FixtureError(RuntimeError):
    pass


@dataclass
class FixtureCase:
    name: str
    conllu: str
    expected_dag: str
    expected_roundtrip: str
    tags: Tuple[str, ...]

    @property
    def sentence(self) -> Sentence:
        return parse_conllu(self.conllu)[0]

    @property
    def graph(self) -> DagGraph:
        return DagGraph.from_text(self.expected_dag)


def data_path(name: str) -> str:
    return str(resources.files("dagparser").joinpath("data", name))


def _read(name: str) -> str:
    with open(data_path(name), encoding="utf-8") as f:
        return f.read()


def _comment(sentence: Sentence, key: str) -> str:
    for c in sentence.comments:
        body = c.lstrip("#").strip()
        if body.startswith(key) and "=" in body:
            k, v = body.split("=", 1)
            if k.strip() == key:
                return v.strip()
    return ""


def _records(text: str) -> Dict[str, str]:
    out = {}
    for block in text.strip().split("\n\n"):
        block = block.strip("\n")
        if not block:
            continue
        first = block.splitlines()[0]
        if not first.startswith("# sent_id = "):
            raise FixtureError(f"record without sent_id: {first!r}")
        out[first[len("# sent_id = "):].strip()] = "\n".join(block.splitlines()[1:]) + "\n"
    return out


def load_fixtures() -> List[FixtureCase]:
    sentences = parse_conllu(_read("fixtures.conllu"))
    dags = _records(_read("fixtures.dag"))
    trips = _records(_read("fixtures.expected.conllu"))
    cases = []
    for s in sentences:
        name = _comment(s, "sent_id")
        problems = validate(s)
        if problems:
            raise FixtureError(f"fixture {name} is invalid: {problems}")
        if name not in dags or name not in trips:
            raise FixtureError(f"fixture {name} has no expected output")
        cases.append(FixtureCase(
            name=name,
            conllu=write_conllu([s]),
            expected_dag=dags[name],
            expected_roundtrip=f"# sent_id = {name}\n" + trips[name] + "\n",
            tags=tuple(_comment(s, "tags").split()),
        ))
    return cases


def fixture_sentences() -> List[Sentence]:
    return parse_conllu(_read("fixtures.conllu"))


def fixture(name: str) -> FixtureCase:
    for case in load_fixtures():
        if case.name == name:
            return case
    raise KeyError(name)


# synthetic treebank for memorization runs

LEXICON = {
    "NOUN": ["dog", "cat", "book", "letter", "house", "river", "song", "garden", "car", "idea",
             "table", "window", "teacher", "city", "apple", "story"],
    "PROPN": ["Anna", "Ben", "Clara", "David", "Emma", "Felix", "Grace", "Henry"],
    "VERB": ["saw", "liked", "found", "took", "helped", "called", "watched", "moved", "opened",
             "carried", "visited", "painted"],
    "ADJ": ["red", "small", "happy", "old", "quiet", "bright", "warm", "strange"],
    "ADV": ["quickly", "slowly", "often", "today", "again", "softly"],
}


def synthetic_treebank(n: int = 50, seed: int = 0) -> List[Sentence]:
    """``n`` sentences: fixture trees with content words replaced at random.

    Structure, tags and relations are kept; only forms and lemmas of nouns,
    proper nouns, verbs, adjectives and adverbs change. Words inside
    multi-word tokens are left alone so surface strings stay consistent.
    """
    rng = random.Random(seed)
    base = fixture_sentences()
    out = []
    for i in range(n):
        src = base[i % len(base)]
        s = src.copy()
        covered = set()
        for t in s.tokens:
            if t.id.is_range:
                covered.update(range(t.id.index, t.id.end + 1))
        for t in s.tokens:
            if t.id.is_range or t.id.index in covered or t.upos not in LEXICON:
                continue
            form = rng.choice(LEXICON[t.upos])
            if t.form and t.form[:1].isupper():
                form = form[:1].upper() + form[1:]
            t.form = form
            t.lemma = form.lower() if t.upos != "PROPN" else form
        name = _comment(src, "sent_id")
        s.comments = [f"# sent_id = synth-{i + 1:02d}-{name}", f"# text = {surface(s)}"]
        out.append(s)
    return out


def surface(sentence: Sentence) -> str:
    """Text of a sentence from its forms and SpaceAfter=No marks."""
    parts = []
    covered = set()
    for t in sentence.tokens:
        if t.id.is_null or t.id.index in covered:
            continue
        if t.id.is_range:
            covered.update(range(t.id.index, t.id.end + 1))
        parts.append(t.form or "_")
        if "SpaceAfter=No" not in (t.misc or ""):
            parts.append(" ")
    return "".join(parts).strip()


# reference implementations

def reference_closure(graph: DagGraph) -> Set[Tuple[int, int]]:
    """All (u, v) with a directed path u ~> v, by repeated boolean matrix
    squaring; includes u == v."""
    n = len(graph.nodes)
    reach = np.eye(n, dtype=bool)
    for e in graph.edges:
        reach[e.parent, e.child] = True
    while True:
        nxt = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
        if (nxt == reach).all():
            break
        reach = nxt
    return {(int(u), int(v)) for u, v in zip(*np.nonzero(reach))}


def reference_gaps(positions: Iterable[int]) -> Tuple[int, int]:
    """(number of gaps capped at 2, total missing positions) by walking the
    span position by position."""
    pos = set(positions)
    if not pos:
        return 0, 0
    gaps = missing = 0
    inside_gap = False
    for p in range(min(pos), max(pos) + 1):
        if p in pos:
            inside_gap = False
        else:
            missing += 1
            if not inside_gap:
                gaps += 1
                inside_gap = True
    return min(gaps, 2), missing


def finite_differences(f: Callable[[], float], param: np.ndarray, indices: Sequence[tuple],
                       h: float = 1e-5) -> np.ndarray:
    """Central differences of ``f`` w.r.t. ``param[i]`` for each index,
    perturbing ``param`` in place and restoring it."""
    out = np.zeros(len(indices))
    for j, i in enumerate(indices):
        old = param[i]
        param[i] = old + h
        up = f()
        param[i] = old - h
        down = f()
        param[i] = old
        out[j] = (up - down) / (2 * h)
    return out


def default_data_dir() -> str:
    """Directory for downloaded treebanks (``DAGPARSER_DATA`` or ~/.dagparser)."""
    return os.environ.get("DAGPARSER_DATA", os.path.join(os.path.expanduser("~"), ".dagparser"))
