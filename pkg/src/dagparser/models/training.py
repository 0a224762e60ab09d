"""Training and greedy parsing with either classifier."""
from __future__ import annotations

import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..conllu import Sentence
from ..convert import ConversionError, dag_to_ud, ud_to_dag
from ..dag import DagGraph
from ..evaluation import las
from ..features import Extractor
from ..oracle import oracles_for
from ..transitions import (
    KINDS, ParserState, Transition, all_transitions, apply_inplace, initial_state,
    run_greedy, valid_flags,
)
from .neural import DESK_DIMS, FULL_DIMS, NeuralScorer, token_symbols
from .optim import SGD, AMSGrad, clip_global_norm, decay
from .perceptron import AveragedPerceptron, sparse_features
from .vocab import Vocabulary

log = logging.getLogger(__name__)

SMALL_CORPUS = 100


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    model: str = "neural"
    epochs_sgd: int = 50
    lr_sgd: float = 0.1
    epochs_amsgrad: Optional[int] = None  # None: 250, or 750 below 100 sentences
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    minibatch: int = 100
    weight_decay: float = 1e-5
    clip: float = 5.0
    dropout_mlp: float = 0.4
    dropout_recurrent: float = 0.4
    word_dropout_alpha: float = 0.2
    node_dropout: float = 0.1
    dims: Dict[str, int] = field(default_factory=lambda: dict(DESK_DIMS))
    use_lstm: bool = True
    perceptron_epochs: int = 10
    seed: int = 0
    delexicalized: bool = False
    vectors: Optional[str] = None
    vectors_limit: int = 250000
    # "rules": learn the rule-based subset of the optimal transitions;
    # "optimal": learn the whole reachability-preserving set
    targets: str = "rules"

    def __post_init__(self):
        if self.model not in ("neural", "perceptron"):
            raise ValueError(f"unknown model kind {self.model!r}")
        if self.targets not in ("rules", "optimal"):
            raise ValueError(f"unknown target set {self.targets!r}")
        for name in ("dropout_mlp", "dropout_recurrent", "node_dropout"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1)")
        if any(v <= 0 for v in self.dims.values()):
            raise ValueError("dimensions must be positive")

    def amsgrad_epochs(self, n_sentences: int) -> int:
        if self.epochs_amsgrad is not None:
            return self.epochs_amsgrad
        return 750 if n_sentences < SMALL_CORPUS else 250

    @classmethod
    def full(cls, **changes) -> "TrainConfig":
        return cls(dims=dict(FULL_DIMS), **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def build_vocabulary(sentences: Sequence[Sentence], graphs: Sequence[DagGraph]) -> Vocabulary:
    v = Vocabulary()
    for ch in ("w", "m", "u", "t", "#", "^", "$", "label", "action", "punct", "ner"):
        v.add_channel(ch)
    for s in sentences:
        for tok in s.words:
            for ch, sym in token_symbols(tok).items():
                v.add(ch, sym)
    for g in graphs:
        for e in g.edges:
            v.add("label", e.label)
    for kind in KINDS:
        v.add("action", kind)
    v.add("punct", "0")
    v.add("punct", "1")
    return v.freeze()


class Parser:
    """A trained (or freshly initialized) transition classifier."""

    def __init__(self, kind: str, vocab: Vocabulary, labels: Sequence[str], config: TrainConfig):
        self.kind = kind
        self.vocab = vocab
        self.labels = sorted(set(labels))
        self.actions: List[Transition] = all_transitions(self.labels)
        self.action_index = {t: i for i, t in enumerate(self.actions)}
        self.config = config
        self.extractor = Extractor(config.delexicalized)
        self.neural: Optional[NeuralScorer] = None
        self.perceptron: Optional[AveragedPerceptron] = None
        self.optimizer_state: Dict[str, np.ndarray] = {}
        if kind == "neural":
            self.neural = NeuralScorer(vocab, len(self.actions), config.dims, config.delexicalized,
                                       seed=config.seed, use_lstm=config.use_lstm)
        elif kind == "perceptron":
            self.perceptron = AveragedPerceptron(len(self.actions))
        else:
            raise ValueError(f"unknown model kind {kind!r}")

    # scoring

    def valid_mask(self, state: ParserState) -> np.ndarray:
        return np.array(valid_flags(state, self.actions), dtype=bool)

    def scorer_for(self, tokens: Sequence) -> Callable[[ParserState], Dict[Transition, float]]:
        """Scoring function for states over ``tokens``; the neural encoder
        runs once here."""
        if self.kind == "perceptron":
            def score(state):
                feats = sparse_features(self.extractor.extract(state))
                s = self.perceptron.scores(feats)
                return {self.actions[i]: float(s[i]) for i in np.flatnonzero(self.valid_mask(state))}
            return score
        enc, _ = self.neural.encode(self.neural.sentence_input(tokens))

        def score(state):
            valid = self.valid_mask(state)
            si = self.neural.state_input(self.extractor.extract(state), valid)
            lp = self.neural.log_probs(enc, si)
            return {self.actions[i]: float(lp[i]) for i in np.flatnonzero(valid)}
        return score

    def score(self, state: ParserState, tokens: Optional[Sequence] = None) -> Dict[Transition, float]:
        if tokens is None:
            tokens = [state.graph[t] for t in state.terminals]
        return self.scorer_for(tokens)(state)

    def parse_graph(self, sentence: Sentence, trace=None) -> DagGraph:
        words = sentence.words
        return run_greedy(words, self.scorer_for(words), trace=trace)

    def parse_sentence(self, sentence: Sentence, trace=None) -> Sentence:
        g = self.parse_graph(sentence, trace)
        return dag_to_ud(g, sentence.tokens, sentence.comments)

    def parse(self, sentences: Sequence[Sentence]) -> List[Sentence]:
        return [self.parse_sentence(s) for s in sentences]


def _gold_graphs(sentences: Sequence[Sentence]) -> List[DagGraph]:
    graphs = []
    for i, s in enumerate(sentences):
        try:
            graphs.append(ud_to_dag(s))
        except ConversionError as e:
            sid = next((c for c in s.comments if c.startswith("# sent_id")), f"sentence {i + 1}")
            raise TrainingError(f"{sid}: {e}") from None
    return graphs


def _sentence_id(s: Sentence, i: int) -> str:
    for c in s.comments:
        if c.startswith("# sent_id"):
            return c.split("=", 1)[-1].strip()
    return str(i + 1)


def _pick(options: List[int], scores: np.ndarray, rng: np.random.Generator) -> int:
    best = max(scores[i] for i in options)
    ties = [i for i in options if scores[i] == best]
    return ties[0] if len(ties) == 1 else ties[int(rng.integers(len(ties)))]


def train(
    sentences: Sequence[Sentence],
    dev: Optional[Sequence[Sentence]] = None,
    config: Optional[TrainConfig] = None,
    progress: Optional[Callable[[str], None]] = None,
) -> Parser:
    """Train on gold CoNLL-U sentences; with ``dev``, keep the epoch with
    the best dev LAS-F1."""
    config = config or TrainConfig()
    if not sentences:
        raise TrainingError("empty training corpus")
    graphs = _gold_graphs(sentences)
    vocab = build_vocabulary(sentences, graphs)
    labels = {e.label for g in graphs for e in g.edges}
    parser = Parser(config.model, vocab, labels, config)
    if config.vectors and parser.neural is not None and "emb.w" in parser.neural.params:
        from .vectors import load_pretrained_vectors
        table, _ = load_pretrained_vectors(config.vectors, vocab, config.dims["w"],
                                           limit=config.vectors_limit,
                                           base=parser.neural.params["emb.w"])
        parser.neural.params["emb.w"] = table
    oracles = oracles_for(graphs)
    trainer = _NeuralTrainer if config.model == "neural" else _PerceptronTrainer
    trainer(parser, sentences, oracles, dev, progress).run()
    return parser


class _Trainer:
    def __init__(self, parser: Parser, sentences, oracles, dev, progress):
        self.parser = parser
        self.config = parser.config
        self.sentences = list(sentences)
        self.oracles = oracles
        self.dev = list(dev) if dev else []
        self.progress = progress or (lambda line: log.info(line))
        self.rng = np.random.default_rng(self.config.seed)
        self.best_las = -1.0
        self.best_state = None

    def _walk(self, i: int, step: Callable[[ParserState, List[int], List[int], np.ndarray], int]) -> int:
        """Run the oracle over sentence ``i``. ``step(state, targets, optimal,
        valid)`` picks the transition to follow among the targets, which are
        the optimal transitions or their rule-based subset. Returns the
        number of steps."""
        words = self.sentences[i].words
        state = initial_state(words)
        oracle = self.oracles[i]
        limit = oracle.limit
        index = self.parser.action_index
        while not state.finished:
            try:
                optimal = oracle.optimal(state)
                targets = oracle.preferred(state, optimal) if self.config.targets == "rules" else optimal
            except Exception as e:
                raise TrainingError(f"oracle failed on sentence {_sentence_id(self.sentences[i], i)}: {e}") from e
            valid = self.parser.valid_mask(state)
            chosen = step(state, [index[t] for t in targets], [index[t] for t in optimal], valid)
            apply_inplace(state, self.parser.actions[chosen])
            if state.steps > limit:
                raise TrainingError(f"oracle walk does not terminate on sentence {i + 1}")
        return state.steps

    def _evaluate(self, epoch: int, loss: float) -> None:
        line = f"epoch {epoch}\tloss {loss:.4f}"
        if self.dev:
            score = las(self.dev, self.parser.parse(self.dev)).f1
            line += f"\tdev_las {score:.4f}"
            if score > self.best_las:
                self.best_las = score
                self.best_state = self.snapshot()
        self.progress(line)

    def finish(self) -> None:
        if self.best_state is not None:
            self.restore(self.best_state)


class _PerceptronTrainer(_Trainer):
    def snapshot(self):
        # called while the averaged weights are swapped in
        return {f: w.copy() for f, w in self.parser.perceptron.weights.items()}

    def restore(self, weights) -> None:
        p = self.parser.perceptron
        p.weights = weights
        p.totals, p.stamps, p.instances = {}, {}, 0

    def run(self) -> None:
        model = self.parser.perceptron
        ext = self.parser.extractor
        for epoch in range(1, self.config.perceptron_epochs + 1):
            errors = 0

            def step(state, targets, optimal, valid):
                nonlocal errors
                feats = sparse_features(ext.extract(state))
                scores = model.scores(feats)
                good = _pick(targets, scores, self.rng)
                wrong = [k for k in np.flatnonzero(valid) if k not in targets]
                bad = _pick(wrong, scores, self.rng) if wrong else None
                if bad is not None and scores[bad] >= scores[good]:
                    errors += 1
                    model.update(feats, good, bad)
                else:
                    model.update(feats, None, None)
                return good

            for i in self.rng.permutation(len(self.sentences)):
                self._walk(int(i), step)
            live = model.weights, model.totals, model.stamps, model.instances
            model.weights = model.averaged()
            self._evaluate(epoch, float(errors))
            model.weights, model.totals, model.stamps, model.instances = live
        if self.best_state is None:
            model.average()
        self.finish()


class _NeuralTrainer(_Trainer):
    def snapshot(self):
        return {k: v.copy() for k, v in self.parser.neural.params.items()}

    def restore(self, params) -> None:
        self.parser.neural.params.update({k: v.copy() for k, v in params.items()})

    def run(self) -> None:
        cfg = self.config
        net = self.parser.neural
        params = net.params
        self.grads = {k: np.zeros_like(v) for k, v in params.items()}
        self.pending = 0
        n_ams = cfg.amsgrad_epochs(len(self.sentences))
        optimizer = SGD(cfg.lr_sgd)
        for epoch in range(1, cfg.epochs_sgd + n_ams + 1):
            if epoch == cfg.epochs_sgd + 1:
                self._flush(optimizer)
                optimizer = AMSGrad(params, cfg.alpha, cfg.beta1, cfg.beta2, cfg.eps)
            total = 0.0
            for i in self.rng.permutation(len(self.sentences)):
                total += self._sentence(int(i))
                if self.pending >= cfg.minibatch:
                    self._flush(optimizer)
            self._flush(optimizer)
            self._evaluate(epoch, total)
        self.parser.optimizer_state = optimizer.state_arrays()
        self.finish()

    def _flush(self, optimizer) -> None:
        if not self.pending:
            return
        cfg = self.config
        clip_global_norm(self.grads, cfg.clip)
        optimizer.step(self.parser.neural.params, self.grads)
        decay(self.parser.neural.params, cfg.weight_decay)
        for g in self.grads.values():
            g.fill(0.0)
        self.pending = 0

    def _sentence(self, i: int) -> float:
        cfg = self.config
        net = self.parser.neural
        ext = self.parser.extractor
        rng = self.rng
        sent = net.sentence_input(self.sentences[i].words, rng, cfg.word_dropout_alpha,
                                  cfg.dropout_recurrent)
        enc, _ = net.encode(sent)
        inputs = []

        def step(state, targets, optimal, valid):
            gold = np.zeros(len(valid), dtype=bool)
            gold[targets] = True
            si = net.state_input(ext.extract(state), valid, gold, rng, cfg.dropout_mlp,
                                 cfg.node_dropout)
            inputs.append(si)
            return _pick(targets, net.logits(enc, si), rng)

        self._walk(i, step)
        loss, _ = net.loss_and_grads(sent, inputs, self.grads)
        self.pending += len(inputs)
        return loss
