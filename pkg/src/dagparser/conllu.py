"""Reading, validating and writing CoNLL-U files with enhanced dependencies.

Multi-word token ranges and comments are carried through untouched; null
(empty) nodes are parsed and written back but never take part in the basic
tree.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Tuple

N_COLUMNS = 10
COLUMN_NAMES = ("ID", "FORM", "LEMMA", "UPOS", "XPOS", "FEATS", "HEAD", "DEPREL", "DEPS", "MISC")

_ID_RE = re.compile(r"^(?:(\d+)-(\d+)|(\d+)\.(\d+)|(\d+))$")


class ConlluError(ValueError):
    """Malformed CoNLL-U input, positioned at a 1-based line and column."""

    def __init__(self, message: str, line: int, column: Optional[str] = None):
        self.line = line
        self.column = column
        where = f"line {line}" + (f", column {column}" if column else "")
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True, order=True)
class TokenId:
    """Word index, multi-word range or null node id.

    ``index`` is the word index, the start of a range or the base of a null
    id; ``sub`` is the null sub-index and ``end`` the range end (0 when
    unused). Ordering follows file order for words and null nodes.
    """

    index: int
    sub: int = 0
    end: int = 0

    @classmethod
    def parse(cls, text: str) -> "TokenId":
        m = _ID_RE.match(text)
        if m is None:
            raise ValueError(f"bad token id {text!r}")
        if m.group(1) is not None:
            start, end = int(m.group(1)), int(m.group(2))
            if start < 1 or end < start:
                raise ValueError(f"bad range {text!r}")
            return cls(start, 0, end)
        if m.group(3) is not None:
            sub = int(m.group(4))
            if sub < 1:
                raise ValueError(f"bad null id {text!r}")
            return cls(int(m.group(3)), sub)
        return cls(int(m.group(5)))

    @property
    def is_range(self) -> bool:
        return self.end > 0

    @property
    def is_null(self) -> bool:
        return self.sub > 0

    @property
    def is_word(self) -> bool:
        return not self.is_range and not self.is_null

    def __str__(self) -> str:
        if self.is_range:
            return f"{self.index}-{self.end}"
        if self.is_null:
            return f"{self.index}.{self.sub}"
        return str(self.index)


ROOT_ID = TokenId(0)


@dataclass
class Token:
    id: TokenId
    form: Optional[str] = None
    lemma: Optional[str] = None
    upos: Optional[str] = None
    xpos: Optional[str] = None
    feats: Optional[str] = None
    head: Optional[int] = None
    deprel: Optional[str] = None
    deps: List[Tuple[TokenId, str]] = field(default_factory=list)
    misc: Optional[str] = None

    @property
    def is_word(self) -> bool:
        return self.id.is_word

    def copy(self, **changes) -> "Token":
        changes.setdefault("deps", list(self.deps))
        return replace(self, **changes)


@dataclass
class Sentence:
    comments: List[str] = field(default_factory=list)
    tokens: List[Token] = field(default_factory=list)

    @property
    def words(self) -> List[Token]:
        return [t for t in self.tokens if t.id.is_word]

    def __len__(self) -> int:
        return len(self.words)

    def copy(self) -> "Sentence":
        return Sentence(list(self.comments), [t.copy() for t in self.tokens])


def _field(value: str) -> Optional[str]:
    return None if value == "_" else value


def _parse_deps(value: str, lineno: int) -> List[Tuple[TokenId, str]]:
    if value == "_":
        return []
    deps: List[Tuple[TokenId, str]] = []
    for entry in value.split("|"):
        head, sep, rel = entry.partition(":")
        if not sep or not rel:
            raise ConlluError(f"bad DEPS entry {entry!r}", lineno, "DEPS")
        try:
            head_id = TokenId.parse(head)
        except ValueError:
            raise ConlluError(f"bad DEPS head {head!r}", lineno, "DEPS") from None
        if head_id.is_range:
            raise ConlluError(f"DEPS head cannot be a range: {head!r}", lineno, "DEPS")
        if (head_id, rel) in deps:
            raise ConlluError(f"duplicate DEPS entry {entry!r}", lineno, "DEPS")
        deps.append((head_id, rel))
    return deps


def parse_token(line: str, lineno: int) -> Token:
    cols = line.split("\t")
    if len(cols) != N_COLUMNS:
        raise ConlluError(f"expected {N_COLUMNS} tab-separated columns, got {len(cols)}", lineno)
    try:
        tid = TokenId.parse(cols[0])
    except ValueError as e:
        raise ConlluError(str(e), lineno, "ID") from None
    head: Optional[int] = None
    if cols[6] != "_":
        if not cols[6].isdigit():
            raise ConlluError(f"non-numeric head {cols[6]!r}", lineno, "HEAD")
        head = int(cols[6])
    deprel = _field(cols[7])
    if not tid.is_word and (head is not None or deprel is not None):
        raise ConlluError("range and null tokens take no HEAD/DEPREL", lineno, "HEAD")
    if tid.is_range and cols[8] != "_":
        raise ConlluError("range tokens take no DEPS", lineno, "DEPS")
    return Token(
        id=tid,
        form=_field(cols[1]),
        lemma=_field(cols[2]),
        upos=_field(cols[3]),
        xpos=_field(cols[4]),
        feats=_field(cols[5]),
        head=head,
        deprel=deprel,
        deps=_parse_deps(cols[8], lineno),
        misc=_field(cols[9]),
    )


def _finish_sentence(sent: Sentence, token_lines: List[int]) -> None:
    expected = 1
    for tok, lineno in zip(sent.tokens, token_lines):
        if tok.id.is_word:
            if tok.id.index != expected:
                kind = "duplicate" if tok.id.index < expected else "non-consecutive"
                raise ConlluError(f"{kind} word index {tok.id.index}", lineno, "ID")
            expected += 1
    n = expected - 1
    for tok, lineno in zip(sent.tokens, token_lines):
        if tok.head is not None and tok.head > n:
            raise ConlluError(f"head {tok.head} out of range (sentence has {n} words)", lineno, "HEAD")
        if tok.id.is_range and (tok.id.end > n):
            raise ConlluError(f"range {tok.id} out of range", lineno, "ID")
        for head, _ in tok.deps:
            # dangling null-node heads are left to validate()
            if head.is_word and head.index > n:
                raise ConlluError(f"DEPS head {head} out of range", lineno, "DEPS")


def parse_conllu(text: str) -> List[Sentence]:
    """Parse CoNLL-U text into sentences; raises ConlluError on bad input."""
    sentences: List[Sentence] = []
    current = Sentence()
    token_lines: List[int] = []
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if current.tokens:
                _finish_sentence(current, token_lines)
                sentences.append(current)
            elif current.comments:
                raise ConlluError("comment block without tokens", lineno)
            current, token_lines = Sentence(), []
        elif line.startswith("#"):
            if current.tokens:
                raise ConlluError("comment inside token block", lineno)
            current.comments.append(line)
        else:
            current.tokens.append(parse_token(line, lineno))
            token_lines.append(lineno)
    if current.tokens:
        _finish_sentence(current, token_lines)
        sentences.append(current)
    elif current.comments:
        raise ConlluError("comment block without tokens", len(lines))
    return sentences


def read_conllu(path) -> List[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f.read())


def _col(value: Optional[str]) -> str:
    return "_" if value is None or value == "" else value


def format_deps(deps: Iterable[Tuple[TokenId, str]]) -> str:
    entries = sorted(set(deps), key=lambda d: (d[0].index, d[0].sub, d[1]))
    if not entries:
        return "_"
    return "|".join(f"{head}:{rel}" for head, rel in entries)


def format_token(tok: Token) -> str:
    return "\t".join(
        (
            str(tok.id),
            _col(tok.form),
            _col(tok.lemma),
            _col(tok.upos),
            _col(tok.xpos),
            _col(tok.feats),
            "_" if tok.head is None else str(tok.head),
            _col(tok.deprel),
            format_deps(tok.deps),
            _col(tok.misc),
        )
    )


def write_conllu(sentences: Iterable[Sentence]) -> str:
    """Serialize sentences; every sentence is followed by one blank line."""
    out: List[str] = []
    for sent in sentences:
        out.extend(sent.comments)
        out.extend(format_token(tok) for tok in sent.tokens)
        out.append("")
    return "".join(line + "\n" for line in out)


def save_conllu(sentences: Iterable[Sentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(write_conllu(sentences))


def validate(sentence: Sentence) -> List[str]:
    """Structural problems of one sentence, as human-readable strings."""
    violations: List[str] = []
    words = sentence.words
    n = len(words)
    heads = {}
    for tok in words:
        i = tok.id.index
        if tok.head is None:
            violations.append(f"word {i}: missing head")
            continue
        if tok.head == i:
            violations.append(f"word {i}: self-head")
            continue
        heads[i] = tok.head
    roots = [i for i, h in heads.items() if h == 0]
    if n and not roots:
        violations.append("no root")
    elif len(roots) > 1:
        violations.append(f"multiple roots: {roots}")
    for i in roots:
        rel = words[i - 1].deprel
        if rel is None or rel.split(":")[0] != "root":
            violations.append(f"word {i}: root attached with relation {rel!r}")
    for i, h in heads.items():
        if h != 0 and words[i - 1].deprel is not None and words[i - 1].deprel.split(":")[0] == "root":
            violations.append(f"word {i}: relation root below the root")
    reported = set()
    for start in heads:
        seen = []
        node = start
        while node in heads and heads[node] != 0 and node not in seen:
            seen.append(node)
            node = heads[node]
        if node in seen:
            cycle = frozenset(seen[seen.index(node):])
            if cycle not in reported:
                reported.add(cycle)
                violations.append(f"cycle through words {sorted(cycle)}")
    null_ids = {t.id for t in sentence.tokens if t.id.is_null}
    for tok in sentence.tokens:
        if tok.id.is_range:
            continue
        for head, rel in tok.deps:
            if head.is_null and head not in null_ids:
                violations.append(f"token {tok.id}: dangling enhanced head {head}")
            elif head.is_word and head.index > n:
                violations.append(f"token {tok.id}: dangling enhanced head {head}")
            elif head == tok.id:
                violations.append(f"token {tok.id}: enhanced self-loop ({rel})")
    return violations
