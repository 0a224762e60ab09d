"""BiLSTM token encoder and MLP transition scorer in plain numpy.

Tokens are embedded (word, lemma, tags, shape, prefix, suffix) and run
through a BiLSTM. A parser state is the concatenation of the encodings of
its nodes' head terminals, embeddings of its categorical state features
(edge labels, separator presence, past actions) and its numeric features.
An MLP turns that into one logit per transition. Gradients are written out
by hand; ``gradient_check`` compares them against finite differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..features import NODE_SOURCES, TOKEN_CHANNELS, FeatureVector, templates
from .vocab import Vocabulary

DESK_DIMS = {
    "w": 32, "m": 16, "u": 20, "t": 20, "#": 3, "^": 2, "$": 3,
    "label": 20, "action": 3, "punct": 1, "ner": 3,
    "lstm_layers": 1, "lstm_dim": 64, "mlp_layers": 2, "mlp_dim": 32,
}
FULL_DIMS = dict(DESK_DIMS, w=300, m=200, lstm_layers=2, lstm_dim=500, mlp_layers=2, mlp_dim=50)

LEXICAL_CHANNELS = frozenset("wmt^$")
DROPOUT_CHANNELS = ("w", "m", "u", "t")
# embedding table of each categorical state channel
STATE_TABLES = {"e": "label", "p": "punct", "A": "action", "T": "ner"}


def token_symbols(tok) -> Dict[str, Optional[str]]:
    """Token-level symbols of a CoNLL-U word or DAG terminal."""
    from ..features import PREFIX_LENGTH, SUFFIX_LENGTH, word_shape

    form = getattr(tok, "form", None)
    if form is None:
        form = getattr(tok, "text", None)
    lemma, upos, xpos = tok.lemma, tok.upos, tok.xpos
    return {
        "w": form or None, "m": lemma or None, "u": upos or None, "t": xpos or None,
        "#": word_shape(form) if form else None,
        "^": form[:PREFIX_LENGTH] if form else None,
        "$": form[-SUFFIX_LENGTH:] if form else None,
    }


def word_dropout_probability(count: int, alpha: float) -> float:
    return alpha / (count + alpha) if alpha > 0 else 0.0


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


class Layout:
    """Fixed order of the MLP input blocks."""

    def __init__(self, delexicalized: bool):
        self.token_channels = tuple(c for c in TOKEN_CHANNELS
                                    if not (delexicalized and c in LEXICAL_CHANNELS))
        self.node_sources = NODE_SOURCES
        self.cat: Dict[str, List[Tuple[str, str]]] = {t: [] for t in STATE_TABLES.values()}
        self.num: List[Tuple[str, str]] = []
        for tpl in templates(delexicalized):
            name = str(tpl)
            if tpl.channel in STATE_TABLES:
                self.cat[STATE_TABLES[tpl.channel]].append((name, tpl.source))
            elif tpl.numeric:
                self.num.append((name, tpl.source))
        src_index = {s: i for i, s in enumerate(self.node_sources)}
        # node source owning each state feature (-1: none), for node dropout
        self.cat_owner = {t: np.array([src_index.get(s, -1) for _, s in v], dtype=int)
                          for t, v in self.cat.items()}
        self.num_owner = np.array([src_index.get(s, -1) for _, s in self.num], dtype=int)


@dataclass
class StateInput:
    positions: np.ndarray  # (S,) 0-based head-terminal index, -1 if absent
    cat: Dict[str, np.ndarray]  # table -> ids
    num: np.ndarray
    valid: np.ndarray  # (K,) bool
    gold: Optional[np.ndarray] = None  # (K,) bool
    node_keep: Optional[np.ndarray] = None  # (S,) float
    masks: List[np.ndarray] = field(default_factory=list)  # MLP dropout masks


@dataclass
class SentenceInput:
    ids: Dict[str, np.ndarray]  # channel -> (n,) ids
    keep: Dict[str, np.ndarray]  # channel -> (n,) float 0/1 (word dropout)
    recurrent: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(next(iter(self.ids.values())))


class NeuralScorer:
    def __init__(self, vocab: Vocabulary, n_actions: int, dims: Dict[str, int],
                 delexicalized: bool = False, seed: int = 0, use_lstm: bool = True):
        self.vocab = vocab
        self.n_actions = n_actions
        self.dims = dict(dims)
        self.delexicalized = delexicalized
        self.use_lstm = use_lstm
        self.layout = Layout(delexicalized)
        self.params: Dict[str, np.ndarray] = {}
        self._init(np.random.default_rng(seed))

    # parameters

    @property
    def hidden(self) -> int:
        return max(1, self.dims["lstm_dim"] // 2)

    @property
    def enc_dim(self) -> int:
        if self.use_lstm:
            return 2 * self.hidden
        return sum(self.dims[c] for c in self.layout.token_channels)

    def input_dim(self) -> int:
        lay = self.layout
        d = len(lay.node_sources) * self.enc_dim
        d += sum(len(v) * self.dims[t] for t, v in lay.cat.items())
        return d + len(lay.num)

    def _init(self, rng: np.random.Generator) -> None:
        p = self.params

        def glorot(rows, cols):
            r = np.sqrt(6.0 / (rows + cols))
            return rng.uniform(-r, r, size=(rows, cols))

        for c in self.layout.token_channels:
            p[f"emb.{c}"] = rng.normal(0.0, 1.0 / np.sqrt(self.dims[c]),
                                       size=(self.vocab.size(c), self.dims[c]))
        for t in STATE_TABLES.values():
            p[f"emb.{t}"] = rng.normal(0.0, 1.0 / np.sqrt(self.dims[t]),
                                       size=(self.vocab.size(t), self.dims[t]))
        if self.use_lstm:
            d_in = sum(self.dims[c] for c in self.layout.token_channels)
            h = self.hidden
            for layer in range(self.dims["lstm_layers"]):
                for direction in ("f", "b"):
                    pre = f"lstm{layer}.{direction}"
                    p[pre + ".W"] = glorot(4 * h, d_in)
                    p[pre + ".U"] = glorot(4 * h, h)
                    b = np.zeros(4 * h)
                    b[h:2 * h] = 1.0  # forget gate
                    p[pre + ".b"] = b
                d_in = 2 * h
        p["absent"] = np.zeros(self.enc_dim)
        d = self.input_dim()
        for k in range(self.dims["mlp_layers"]):
            p[f"mlp{k}.W"] = glorot(self.dims["mlp_dim"], d)
            p[f"mlp{k}.b"] = np.zeros(self.dims["mlp_dim"])
            d = self.dims["mlp_dim"]
        p["out.W"] = glorot(self.n_actions, d)
        p["out.b"] = np.zeros(self.n_actions)

    # inputs

    def sentence_input(self, tokens: Sequence, rng: Optional[np.random.Generator] = None,
                       word_alpha: float = 0.0, recurrent_dropout: float = 0.0) -> SentenceInput:
        n = len(tokens)
        syms = [token_symbols(t) for t in tokens]
        ids, keep = {}, {}
        for c in self.layout.token_channels:
            ids[c] = np.array([self.vocab.lookup(c, s[c]) for s in syms], dtype=int)
            k = np.ones(n)
            if rng is not None and word_alpha > 0 and c in DROPOUT_CHANNELS:
                probs = np.array([word_dropout_probability(max(self.vocab.count(c, s[c]), 1), word_alpha)
                                  for s in syms])
                k = (rng.random(n) >= probs).astype(float)
            keep[c] = k
        rec = []
        if self.use_lstm:
            for _ in range(self.dims["lstm_layers"]):
                pair = []
                for _ in range(2):
                    if rng is not None and recurrent_dropout > 0:
                        pair.append((rng.random(self.hidden) >= recurrent_dropout)
                                    / (1.0 - recurrent_dropout))
                    else:
                        pair.append(np.ones(self.hidden))
                rec.append(tuple(pair))
        return SentenceInput(ids, keep, rec)

    def state_input(self, fv: FeatureVector, valid: np.ndarray, gold: Optional[np.ndarray] = None,
                    rng: Optional[np.random.Generator] = None, mlp_dropout: float = 0.0,
                    node_dropout: float = 0.0) -> StateInput:
        lay = self.layout
        pos = np.array([-1 if fv.terminals.get(s) is None else fv.terminals[s] - 1
                        for s in lay.node_sources], dtype=int)
        cat = {t: np.array([self.vocab.lookup(t, fv.categorical.get(name)) for name, _ in v], dtype=int)
               for t, v in lay.cat.items()}
        num = np.array([fv.numeric.get(name, 0.0) for name, _ in lay.num])
        si = StateInput(pos, cat, num, valid, gold)
        if rng is not None:
            keep = np.ones(len(lay.node_sources))
            if node_dropout > 0 and rng.random() < node_dropout:
                keep[rng.integers(len(keep))] = 0.0
            si.node_keep = keep
            if mlp_dropout > 0:
                si.masks = [(rng.random(self.dims["mlp_dim"]) >= mlp_dropout) / (1.0 - mlp_dropout)
                            for _ in range(self.dims["mlp_layers"])]
        return si

    # encoder

    def _embed(self, sent: SentenceInput) -> np.ndarray:
        parts = [self.params[f"emb.{c}"][sent.ids[c]] * sent.keep[c][:, None]
                 for c in self.layout.token_channels]
        return np.hstack(parts) if parts else np.zeros((sent.n, 0))

    def encode(self, sent: SentenceInput):
        """Token encodings (n, enc_dim) and the cache needed for backprop."""
        x = self._embed(sent)
        if not self.use_lstm:
            return x, {"x": x, "layers": []}
        layers = []
        inp = x
        for layer in range(self.dims["lstm_layers"]):
            rf, rb = sent.recurrent[layer]
            hf, cf = _lstm_forward(inp, *self._lstm(layer, "f"), rf)
            hb, cb = _lstm_forward(inp[::-1], *self._lstm(layer, "b"), rb)
            out = np.hstack([hf, hb[::-1]])
            layers.append((inp, cf, cb))
            inp = out
        return inp, {"x": x, "layers": layers}

    def _lstm(self, layer: int, direction: str):
        pre = f"lstm{layer}.{direction}"
        return self.params[pre + ".W"], self.params[pre + ".U"], self.params[pre + ".b"]

    def _encode_backward(self, sent: SentenceInput, cache, d_enc: np.ndarray, grads) -> None:
        d = d_enc
        for layer in reversed(range(len(cache["layers"]))):
            inp, cf, cb = cache["layers"][layer]
            h = self.hidden
            dxf = _lstm_backward(d[:, :h], cf, *self._lstm(layer, "f"), grads, f"lstm{layer}.f")
            dxb = _lstm_backward(d[::-1, h:], cb, *self._lstm(layer, "b"), grads, f"lstm{layer}.b")
            d = dxf + dxb[::-1]
        offset = 0
        for c in self.layout.token_channels:
            dim = self.dims[c]
            np.add.at(grads[f"emb.{c}"], sent.ids[c], d[:, offset:offset + dim] * sent.keep[c][:, None])
            offset += dim

    # MLP

    def _state_matrix(self, enc: np.ndarray, states: Sequence[StateInput]) -> np.ndarray:
        lay = self.layout
        ext = np.vstack([enc, self.params["absent"][None, :]])
        n = enc.shape[0]
        rows = []
        for si in states:
            keep = si.node_keep if si.node_keep is not None else None
            pos = np.where(si.positions < 0, n, si.positions)
            nodes = ext[pos]
            if keep is not None:
                nodes = nodes * keep[:, None]
            parts = [nodes.ravel()]
            for t in lay.cat:
                emb = self.params[f"emb.{t}"][si.cat[t]]
                if keep is not None:
                    emb = emb * _owner_keep(keep, lay.cat_owner[t])[:, None]
                parts.append(emb.ravel())
            num = si.num if keep is None else si.num * _owner_keep(keep, lay.num_owner)
            parts.append(num)
            rows.append(np.concatenate(parts))
        return np.vstack(rows)

    def _mlp_forward(self, z: np.ndarray, masks: Optional[List[np.ndarray]] = None):
        acts = []
        h = z
        for k in range(self.dims["mlp_layers"]):
            a = h @ self.params[f"mlp{k}.W"].T + self.params[f"mlp{k}.b"]
            h = np.maximum(a, 0.0)
            if masks is not None:
                h = h * masks[k]
            acts.append((a, h))
        logits = h @ self.params["out.W"].T + self.params["out.b"]
        return logits, acts

    def logits(self, enc: np.ndarray, si: StateInput) -> np.ndarray:
        z = self._state_matrix(enc, [si])
        masks = [m[None, :] for m in si.masks] if si.masks else None
        return self._mlp_forward(z, masks)[0][0]

    def log_probs(self, enc: np.ndarray, si: StateInput) -> np.ndarray:
        """Log-softmax over the valid transitions (-inf elsewhere)."""
        return _masked_log_softmax(self.logits(enc, si), si.valid)

    # loss and gradients

    def loss_and_grads(self, sent: SentenceInput, states: Sequence[StateInput],
                       grads: Optional[Dict[str, np.ndarray]] = None):
        """Sum over states of -log P(optimal set); gradients are added to ``grads``."""
        if grads is None:
            grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        enc, cache = self.encode(sent)
        z = self._state_matrix(enc, states)
        masks = None
        if states[0].masks:
            masks = [np.vstack([si.masks[k] for si in states]) for k in range(self.dims["mlp_layers"])]
        logits, acts = self._mlp_forward(z, masks)
        valid = np.vstack([si.valid for si in states])
        gold = np.vstack([si.gold for si in states]) & valid
        lp_valid = _masked_log_softmax(logits, valid)
        lp_gold = _masked_log_softmax(logits, gold)
        lse_valid = _masked_lse(logits, valid)
        lse_gold = _masked_lse(logits, gold)
        loss = float(np.sum(lse_valid - lse_gold))
        dlogits = np.exp(lp_valid) - np.exp(lp_gold)  # exp(-inf) = 0 outside the masks

        p = self.params
        h = acts[-1][1] if acts else z
        grads["out.W"] += dlogits.T @ h
        grads["out.b"] += dlogits.sum(axis=0)
        dh = dlogits @ p["out.W"]
        for k in reversed(range(self.dims["mlp_layers"])):
            a, _ = acts[k]
            if masks is not None:
                dh = dh * masks[k]
            da = dh * (a > 0)
            below = acts[k - 1][1] if k > 0 else z
            grads[f"mlp{k}.W"] += da.T @ below
            grads[f"mlp{k}.b"] += da.sum(axis=0)
            dh = da @ p[f"mlp{k}.W"]
        dz = dh

        lay = self.layout
        n, e = enc.shape[0], self.enc_dim
        d_ext = np.zeros((n + 1, e))
        S = len(lay.node_sources)
        for row, si in enumerate(states):
            keep = si.node_keep
            off = S * e
            dnodes = dz[row, :off].reshape(S, e)
            if keep is not None:
                dnodes = dnodes * keep[:, None]
            pos = np.where(si.positions < 0, n, si.positions)
            np.add.at(d_ext, pos, dnodes)
            for t, v in lay.cat.items():
                dim = self.dims[t]
                block = dz[row, off:off + len(v) * dim].reshape(len(v), dim)
                if keep is not None:
                    block = block * _owner_keep(keep, lay.cat_owner[t])[:, None]
                np.add.at(grads[f"emb.{t}"], si.cat[t], block)
                off += len(v) * dim
        grads["absent"] += d_ext[n]
        self._encode_backward(sent, cache, d_ext[:n], grads)
        return loss, grads


def _owner_keep(keep: np.ndarray, owner: np.ndarray) -> np.ndarray:
    return np.where(owner >= 0, keep[np.maximum(owner, 0)], 1.0)


def _masked_lse(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    x = np.where(mask, logits, -np.inf)
    m = np.max(x, axis=-1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return (m + np.log(np.sum(np.exp(x - m), axis=-1, keepdims=True)))[..., 0]


def _masked_log_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    lse = _masked_lse(logits, mask)
    return np.where(mask, logits - lse[..., None], -np.inf)


def _lstm_forward(x, W, U, b, r):
    n, h = x.shape[0], U.shape[1]
    xw = x @ W.T + b
    hs = np.zeros((n + 1, h))
    cs = np.zeros((n + 1, h))
    gates = np.zeros((n, 4 * h))
    for t in range(n):
        a = xw[t] + U @ (hs[t] * r)
        i = _sigmoid(a[:h])
        f = _sigmoid(a[h:2 * h])
        o = _sigmoid(a[2 * h:3 * h])
        g = np.tanh(a[3 * h:])
        cs[t + 1] = f * cs[t] + i * g
        hs[t + 1] = o * np.tanh(cs[t + 1])
        gates[t] = np.concatenate([i, f, o, g])
    return hs[1:], (x, hs, cs, gates, r)


def _lstm_backward(dout, cache, W, U, b, grads, prefix):
    x, hs, cs, gates, r = cache
    n, h = x.shape[0], U.shape[1]
    dxw = np.zeros((n, 4 * h))
    dU = np.zeros_like(U)
    dh_next = np.zeros(h)
    dc_next = np.zeros(h)
    for t in reversed(range(n)):
        i, f, o, g = gates[t, :h], gates[t, h:2 * h], gates[t, 2 * h:3 * h], gates[t, 3 * h:]
        dh = dout[t] + dh_next
        tc = np.tanh(cs[t + 1])
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di, dg, df = dc * g, dc * i, dc * cs[t]
        dc_next = dc * f
        da = np.concatenate([di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)])
        dxw[t] = da
        dU += np.outer(da, hs[t] * r)
        dh_next = (U.T @ da) * r
    grads[prefix + ".W"] += dxw.T @ x
    grads[prefix + ".U"] += dU
    grads[prefix + ".b"] += dxw.sum(axis=0)
    return dxw @ W


def gradient_check(scorer: NeuralScorer, batch, n_params: int = 2000, h: float = 1e-5, floor: float = 1e-5,
                   seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``batch`` is a list of (SentenceInput, [StateInput]) pairs with
    deterministic masks. Parameters are sampled uniformly over all entries.
    Gradients smaller than ``floor`` are compared in absolute terms (relative
    to ``floor``): below that, round-off in the loss differences dominates.
    """
    def total_loss():
        return sum(scorer.loss_and_grads(s, states)[0] for s, states in batch)

    grads = {k: np.zeros_like(v) for k, v in scorer.params.items()}
    for s, states in batch:
        scorer.loss_and_grads(s, states, grads)
    names = sorted(scorer.params)
    sizes = np.array([scorer.params[k].size for k in names])
    rng = np.random.default_rng(seed)
    flat = rng.choice(int(sizes.sum()), size=min(n_params, int(sizes.sum())), replace=False)
    bounds = np.cumsum(sizes)
    worst = 0.0
    for j in flat:
        which = int(np.searchsorted(bounds, j, side="right"))
        name = names[which]
        idx = np.unravel_index(j - (bounds[which] - sizes[which]), scorer.params[name].shape)
        p = scorer.params[name]
        old = p[idx]
        p[idx] = old + h
        up = total_loss()
        p[idx] = old - h
        down = total_loss()
        p[idx] = old
        numeric = (up - down) / (2 * h)
        analytic = grads[name][idx]
        err = abs(numeric - analytic) / max(abs(numeric), abs(analytic), floor)
        worst = max(worst, err)
    return worst
