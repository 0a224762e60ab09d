"""Labeled attachment scores over basic trees and enhanced graphs.

Words are aligned by index (the parser is given gold tokenization) and all
relations are compared without subtypes.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, List, Sequence, Set, Tuple

from .conllu import Sentence
from .convert import strip_subtype


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    correct: int
    system: int
    gold: int

    @classmethod
    def from_counts(cls, correct: int, system: int, gold: int) -> "EvalResult":
        if system == 0 and gold == 0:
            return cls(1.0, 1.0, 1.0, 0, 0, 0)
        p = correct / system if system else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f, correct, system, gold)

    def as_dict(self) -> dict:
        return asdict(self)


def _as_list(x) -> List[Sentence]:
    return [x] if isinstance(x, Sentence) else list(x)


def _check_aligned(gold: Sentence, system: Sentence) -> None:
    if len(gold.words) != len(system.words):
        raise EvaluationError(
            f"token count mismatch: gold has {len(gold.words)} words, system {len(system.words)}"
        )


def las(gold, system) -> EvalResult:
    """Basic-tree LAS of one sentence or a corpus."""
    gold, system = _as_list(gold), _as_list(system)
    if len(gold) != len(system):
        raise EvaluationError(f"corpus length mismatch: {len(gold)} vs {len(system)} sentences")
    correct = total = 0
    for g, s in zip(gold, system):
        _check_aligned(g, s)
        for gw, sw in zip(g.words, s.words):
            total += 1
            if (gw.head == sw.head and gw.deprel is not None and sw.deprel is not None
                    and strip_subtype(gw.deprel) == strip_subtype(sw.deprel)):
                correct += 1
    return EvalResult.from_counts(correct, total, total)


def enhanced_set(sentence: Sentence) -> Set[Tuple[int, int, str]]:
    """(dependent, head, relation) triples of the enhanced graph, without
    null nodes and without entries repeating the basic dependency."""
    out = set()
    for tok in sentence.words:
        basic = (tok.head, strip_subtype(tok.deprel)) if tok.deprel else None
        for head, rel in tok.deps:
            if not head.is_word:
                continue
            pair = (head.index, strip_subtype(rel))
            if pair == basic:
                continue
            out.add((tok.id.index, pair[0], pair[1]))
    return out


def enhanced_las(gold, system) -> EvalResult:
    gold, system = _as_list(gold), _as_list(system)
    if len(gold) != len(system):
        raise EvaluationError(f"corpus length mismatch: {len(gold)} vs {len(system)} sentences")
    correct = n_sys = n_gold = 0
    for g, s in zip(gold, system):
        _check_aligned(g, s)
        gs, ss = enhanced_set(g), enhanced_set(s)
        correct += len(gs & ss)
        n_sys += len(ss)
        n_gold += len(gs)
    return EvalResult.from_counts(correct, n_sys, n_gold)


def enhanced_percentage(corpus) -> float:
    corpus = _as_list(corpus)
    enhanced = sum(len(enhanced_set(s)) for s in corpus)
    words = sum(len(s.words) for s in corpus)
    if enhanced + words == 0:
        return 0.0
    return 100.0 * enhanced / (enhanced + words)


def report(gold: Sequence[Sentence], system: Sequence[Sentence]) -> dict:
    basic = las(gold, system)
    enh = enhanced_las(gold, system)
    return {
        "las": basic.as_dict(),
        "enhanced_las": enh.as_dict(),
        "enhanced_percentage": enhanced_percentage(gold),
        "sentences": len(gold),
        "words": sum(len(s.words) for s in gold),
    }


def format_report(rep: dict) -> str:
    lines = []
    for key, name in (("las", "LAS"), ("enhanced_las", "Enhanced LAS")):
        r = rep[key]
        lines.append(
            f"{name:<13} P={100 * r['precision']:6.2f} R={100 * r['recall']:6.2f} "
            f"F1={100 * r['f1']:6.2f} (correct {r['correct']}, system {r['system']}, gold {r['gold']})"
        )
    lines.append(f"Enhanced %    {rep['enhanced_percentage']:.2f}")
    lines.append(f"Sentences     {rep['sentences']}")
    lines.append(f"Words         {rep['words']}")
    return "\n".join(lines) + "\n"
