"""Command-line interface.

    dagparser convert IN [-o OUT] [--direction ud2dag|dag2ud]
    dagparser train TRAIN [--dev DEV] -o MODEL [options]
    dagparser cross-validate TRAIN [options]
    dagparser parse MODEL IN [-o OUT] [--workers N] [--trace]
    dagparser evaluate GOLD SYSTEM [--json]
    dagparser oracle-check IN [--json]
    dagparser resolve-model MANIFEST LANGUAGE [TREEBANK]

``-`` stands for stdin or stdout. In ``ud2dag`` output each graph is preceded by
the sentence comments and one ``# range = `` comment per multi-word token
line, so ``dag2ud`` can restore both. A relative input path that does not exist
is also looked up in the data directory (``$DAGPARSER_DATA``, default
``~/.dagparser``). Exit codes: 0 success, 1 data error, 2 usage error.

Manifest files for ``resolve-model`` are tab-separated, one model per line::

    LANGUAGE  TREEBANK  TRAIN_SENTENCES  MODEL_PATH

Blank lines and ``#`` lines are skipped. Language ``*`` marks the
delexicalized multilingual model. Relative model paths are taken relative
to the manifest.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import random
import sys
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .conllu import (ConlluError, Sentence, Token, TokenId, parse_token, format_token, parse_conllu,
                     write_conllu)
from .convert import ConversionError, dag_to_ud, ud_to_dag
from .dag import DagGraph, GraphError
from .evaluation import EvaluationError, format_report, las, report
from .fixtures import default_data_dir
from .models import (
    DESK_DIMS, FULL_DIMS, ModelFormatError, Parser, TrainConfig, TrainingError,
    VectorFormatError, load_model, save_model, train,
)
from .oracle import PRIORITY, GoldUnreachable, Oracle, oracle_parse, reachability_preserving, replay
from .transitions import ParserState, Transition, apply, run_greedy

log = logging.getLogger("dagparser")

DATA_ERRORS = (ConlluError, ConversionError, GraphError, EvaluationError, ModelFormatError,
               TrainingError, VectorFormatError, GoldUnreachable, OSError, ValueError)


class UsageError(Exception):
    pass


# I/O helpers

def input_path(path: str) -> str:
    if path == "-" or os.path.exists(path) or os.path.isabs(path):
        return path
    alt = os.path.join(default_data_dir(), path)
    return alt if os.path.exists(alt) else path


def read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(input_path(path), encoding="utf-8") as f:
        return f.read()


def write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def read_sentences(path: str) -> List[Sentence]:
    return parse_conllu(read_text(path))


def sentence_id(s: Sentence, i: int) -> str:
    for c in s.comments:
        body = c.lstrip("#").strip()
        if body.startswith("sent_id") and "=" in body:
            return body.split("=", 1)[1].strip()
    return str(i + 1)


# convert

RANGE_PREFIX = "# range = "


def dag_records(text: str) -> List[Tuple[List[str], List[Token], DagGraph]]:
    """Blank-line separated graphs in debug format. ``# range = `` lines hold
    multi-word token lines; other ``#`` lines except the format header are
    kept as sentence comments."""
    out = []
    for block in text.split("\n\n"):
        if not block.strip():
            continue
        comments, ranges = [], []
        for ln in block.splitlines():
            if ln.startswith(RANGE_PREFIX):
                ranges.append(parse_token(ln[len(RANGE_PREFIX):], 1))
            elif ln.startswith("#") and ln.strip() != "# dag v1":
                comments.append(ln)
        out.append((comments, ranges, DagGraph.from_text(block)))
    return out


def tokens_of(g: DagGraph, ranges: Sequence[Token] = ()) -> List[Token]:
    words = [
        Token(TokenId(n.position), n.text or None, n.lemma or None, n.upos or None, n.xpos or None,
              n.feats or None, misc=n.misc or None)
        for n in sorted(g.terminals, key=lambda n: n.position)
    ]
    # a range line goes right before its first word
    return sorted(list(ranges) + words, key=lambda t: (t.id.index, not t.id.is_range))


def cmd_convert(args) -> int:
    text = read_text(args.input)
    if args.direction == "ud2dag":
        parts = []
        for s in parse_conllu(text):
            ranges = [RANGE_PREFIX + format_token(t) + "\n" for t in s.tokens if t.id.is_range]
            body = "".join(c + "\n" for c in s.comments) + "".join(ranges) + ud_to_dag(s).to_text()
            parts.append(body)
        write_text(args.output, "\n".join(parts))
    else:
        sentences = [dag_to_ud(g, tokens_of(g, ranges), comments)
                     for comments, ranges, g in dag_records(text)]
        write_text(args.output, write_conllu(sentences))
    return 0


# training and cross-validation

def config_from_args(args) -> TrainConfig:
    cfg = TrainConfig(
        model=args.model,
        seed=args.seed,
        delexicalized=args.delexicalized,
        dims=dict(FULL_DIMS if args.full_dims else DESK_DIMS),
        vectors=args.vectors,
        vectors_limit=args.limit_vectors,
    )
    if args.epochs_sgd is not None:
        cfg.epochs_sgd = args.epochs_sgd
    if args.epochs_amsgrad is not None:
        cfg.epochs_amsgrad = args.epochs_amsgrad
    if args.perceptron_epochs is not None:
        cfg.perceptron_epochs = args.perceptron_epochs
    if args.targets is not None:
        cfg.targets = args.targets
    return cfg


def folds(n: int, k: int, seed: int) -> List[Tuple[List[int], List[int], List[int]]]:
    """(train, dev, validation) index lists: contiguous blocks of a seeded
    shuffle; fold i validates on block i and tunes on block i + 1."""
    if n < k:
        raise TrainingError(f"{k}-fold cross-validation needs at least {k} sentences, got {n}")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    bounds = [round(i * n / k) for i in range(k + 1)]
    blocks = [order[bounds[i]:bounds[i + 1]] for i in range(k)]
    out = []
    for i in range(k):
        dev_block = (i + 1) % k
        rest = [j for b, blk in enumerate(blocks) if b not in (i, dev_block) for j in blk]
        out.append((rest, blocks[dev_block], blocks[i]))
    return out


def cross_validate(sentences: Sequence[Sentence], config: TrainConfig, k: int = 10,
                   progress: Optional[Callable[[str], None]] = None) -> Tuple[Parser, List[dict]]:
    """Train one model per fold; return the one with the best validation
    LAS-F1 together with per-fold scores."""
    progress = progress or (lambda line: None)
    best: Optional[Parser] = None
    best_score = -1.0
    reports = []
    for i, (tr, dv, va) in enumerate(folds(len(sentences), k, config.seed)):
        fold_train = [sentences[j] for j in tr]
        fold_dev = [sentences[j] for j in dv]
        fold_val = [sentences[j] for j in va]
        parser = train(fold_train, fold_dev, config,
                       progress=lambda line, i=i: progress(f"fold {i + 1}\t{line}"))
        score = las(fold_val, parser.parse(fold_val)).f1
        reports.append({"fold": i + 1, "train": len(tr), "dev": len(dv), "validation": len(va),
                        "validation_las": score})
        progress(f"fold {i + 1}\tvalidation_las {score:.4f}")
        if score > best_score:
            best, best_score = parser, score
    return best, reports


def _progress(line: str) -> None:
    print(line, file=sys.stderr, flush=True)


def cmd_train(args) -> int:
    config = config_from_args(args)
    sentences = read_sentences(args.train)
    if not sentences:
        raise TrainingError("empty training treebank")
    if args.dev:
        parser = train(sentences, read_sentences(args.dev), config, progress=_progress)
    else:
        parser, _ = cross_validate(sentences, config, args.folds, progress=_progress)
    save_model(parser, args.output)
    return 0


def cmd_cross_validate(args) -> int:
    config = config_from_args(args)
    sentences = read_sentences(args.train)
    if not sentences:
        raise TrainingError("empty training treebank")
    parser, reports = cross_validate(sentences, config, args.folds, progress=_progress)
    if args.output:
        save_model(parser, args.output)
    if args.json:
        write_text(None, json.dumps(reports, indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"fold {r['fold']}\tvalidation_las {r['validation_las']:.4f}" for r in reports]
        write_text(None, "\n".join(lines) + "\n")
    return 0


# parsing

def oracle_scorer(sentence: Sentence) -> Callable[[ParserState], Dict[Transition, float]]:
    """Test hook: scores that make greedy parsing follow the oracle."""
    gold = ud_to_dag(sentence)
    oracle = Oracle(gold)

    def score(state):
        best = min(oracle.optimal(state), key=lambda t: (PRIORITY[t.kind], str(t)))
        return {best: 1.0}
    return score


_WORKER: Dict[str, object] = {}


def _init_worker(model_path: str) -> None:
    _WORKER["parser"] = load_model(model_path)


def _parse_one(item: Tuple[int, Sentence]) -> Tuple[int, Sentence]:
    i, sentence = item
    return i, _WORKER["parser"].parse_sentence(sentence)


def parse_corpus(sentences: Sequence[Sentence], parser: Optional[Parser] = None, model_path: str = "",
                 workers: int = 1, trace: Optional[Callable[[str], None]] = None,
                 use_oracle: bool = False) -> List[Sentence]:
    if use_oracle:
        out = []
        for s in sentences:
            g = run_greedy(s.words, oracle_scorer(s), trace=trace)
            out.append(dag_to_ud(g, s.tokens, s.comments))
        return out
    if workers > 1 and trace is None and len(sentences) > 1:
        with Pool(workers, initializer=_init_worker, initargs=(model_path,)) as pool:
            done = dict(pool.imap_unordered(_parse_one, list(enumerate(sentences))))
        return [done[i] for i in range(len(sentences))]
    out = []
    for i, s in enumerate(sentences):
        if trace is not None:
            trace(f"# sent_id = {sentence_id(s, i)}")
        out.append(parser.parse_sentence(s, trace))
    return out


def cmd_parse(args) -> int:
    sentences = read_sentences(args.input)
    trace = _progress if args.trace else None
    if args.oracle:
        parsed = parse_corpus(sentences, trace=trace, use_oracle=True)
    else:
        path = input_path(args.model_file)
        parser = load_model(path)
        parsed = parse_corpus(sentences, parser, path, args.workers, trace)
    write_text(args.output, write_conllu(parsed))
    return 0


# evaluation

def cmd_evaluate(args) -> int:
    gold = read_sentences(args.gold)
    system = read_sentences(args.system)
    rep = report(gold, system)
    if args.json:
        write_text(None, json.dumps(rep, indent=2, sort_keys=True) + "\n")
    else:
        write_text(None, format_report(rep))
    return 0


# oracle check

def check_sentence(sentence: Sentence, exhaustive_max: int = 5) -> dict:
    """Replay the oracle derivation and compare with the converted gold; for
    short sentences also compare every visited state's optimal set with
    exhaustive search."""
    gold = ud_to_dag(sentence)
    result = {"tokens": len(sentence.words), "replay": False, "exhaustive": None}
    oracle = Oracle(gold)
    seq = oracle_parse(gold, oracle)
    result["replay"] = replay(gold, seq).graph.same_structure(gold)
    if 0 < len(sentence.words) <= exhaustive_max:
        cache: dict = {}
        state = replay(gold, [])
        ok = True
        for t in seq:
            if set(oracle.optimal(state)) != reachability_preserving(state, gold, cache):
                ok = False
                break
            state = apply(state, t)
        result["exhaustive"] = ok
    result["pass"] = result["replay"] and result["exhaustive"] is not False
    return result


def cmd_oracle_check(args) -> int:
    rows = []
    for i, s in enumerate(read_sentences(args.input)):
        try:
            r = check_sentence(s, args.exhaustive_max)
        except (ConversionError, GoldUnreachable) as e:
            r = {"tokens": len(s.words), "replay": False, "exhaustive": None, "pass": False, "error": str(e)}
        r["sent_id"] = sentence_id(s, i)
        rows.append(r)
    passed = sum(r["pass"] for r in rows)
    if args.json:
        write_text(None, json.dumps({"sentences": rows, "passed": passed, "failed": len(rows) - passed},
                                    indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"{'PASS' if r['pass'] else 'FAIL'}\t{r['sent_id']}" + (f"\t{r['error']}" if "error" in r else "")
                 for r in rows]
        lines.append(f"passed {passed} failed {len(rows) - passed}")
        write_text(None, "\n".join(lines) + "\n")
    return 0 if passed == len(rows) else 1


# model resolution

def read_manifest(path: str) -> List[Tuple[str, str, int, str]]:
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise ValueError(f"{path}, line {lineno}: expected 4 tab-separated columns")
            lang, tb, size, model = cols
            try:
                n = int(size)
            except ValueError:
                raise ValueError(f"{path}, line {lineno}: size {size!r} is not an integer") from None
            entries.append((lang, tb, n, model if os.path.isabs(model) else os.path.join(base, model)))
    return entries


def resolve_model(manifest: str, language: str, treebank: Optional[str] = None) -> str:
    """Exact treebank model, else the largest same-language one, else the
    multilingual (``*``) model."""
    entries = read_manifest(manifest)
    if not entries:
        raise ValueError(f"{manifest}: empty manifest")
    for lang, tb, _, path in entries:
        if lang == language and treebank is not None and tb == treebank:
            return path
    same = [e for e in entries if e[0] == language]
    if same:
        return max(same, key=lambda e: (e[2], e[1]))[3]
    multi = [e for e in entries if e[0] == "*"]
    if not multi:
        raise ValueError(f"{manifest}: no model for language {language!r} and no multilingual entry")
    return multi[0][3]


def cmd_resolve_model(args) -> int:
    write_text(None, resolve_model(args.manifest, args.language, args.treebank) + "\n")
    return 0


# argument parsing

def _training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=("neural", "perceptron"), default="neural", help="classifier kind")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delexicalized", action="store_true",
                   help="no word, lemma, fine tag, prefix or suffix features")
    p.add_argument("--full-dims", action="store_true", help="full-size embeddings, BiLSTM and MLP")
    p.add_argument("--epochs-sgd", type=int)
    p.add_argument("--epochs-amsgrad", type=int, help="default 250, or 750 below 100 sentences")
    p.add_argument("--perceptron-epochs", type=int)
    p.add_argument("--targets", choices=("rules", "optimal"),
                   help="train on the rule-based subset (default) or all optimal transitions")
    p.add_argument("--vectors", help="pre-trained word vectors (text format)")
    p.add_argument("--limit-vectors", type=int, default=250000, help="use at most this many vectors")
    p.add_argument("--folds", type=int, default=10, help="cross-validation folds when no dev set is given")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dagparser", description="Transition-based DAG parser for UD.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="CoNLL-U to DAG debug format or back")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--direction", choices=("ud2dag", "dag2ud"), default="ud2dag")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("train")
    p.add_argument("--dev")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    _training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("cross-validate", help="k-fold cross-validation on one treebank")
    p.add_argument("train")
    p.add_argument("-o", "--output", help="save the best fold's model")
    p.add_argument("--json", action="store_true")
    _training_flags(p)
    p.set_defaults(func=cmd_cross_validate)

    p = sub.add_parser("parse", help="parse CoNLL-U with a trained model")
    p.add_argument("model_file", nargs="?", help="model file (omit with --oracle)")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trace", action="store_true", help="log every transition to stderr")
    p.add_argument("--oracle", action="store_true",
                   help="test hook: follow the oracle on the gold trees of the input")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("evaluate", help="LAS and enhanced LAS")
    p.add_argument("gold")
    p.add_argument("system")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle-check", help="check the oracle on gold trees")
    p.add_argument("input")
    p.add_argument("--exhaustive-max", type=int, default=5,
                   help="also compare with exhaustive search up to this many tokens (0 disables)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("resolve-model", help="pick a model from a manifest")
    p.add_argument("manifest")
    p.add_argument("language")
    p.add_argument("treebank", nargs="?")
    p.set_defaults(func=cmd_resolve_model)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "parse":
        if args.oracle and args.model_file and args.input:
            ap.error("--oracle takes no model file")
        if not args.oracle and not args.model_file:
            ap.error("parse needs a model file")
        if args.workers < 1:
            ap.error("--workers must be positive")
    try:
        return args.func(args)
    except DATA_ERRORS as e:
        print(f"dagparser: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
