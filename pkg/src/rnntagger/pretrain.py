"""Embedding pre-training on raw text.

Three objectives over a sliding context window: CBOW (predict the
center from the mean of its context vectors), Skip-gram (predict each
context word from the center), and the order-preserving variant that
replaces CBOW's mean with a positional concatenation.  All three share
the negative-sampling objective and frequency subsampling.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .corpus import PAD, PAD_INDEX, UNK, UNK_INDEX, Vocabulary, normalize
from .representation import EmbeddingTable, load_embeddings

CBOW = "cbow"
SKIPGRAM = "skipgram"
CCONCAT = "cconcat"
OBJECTIVES = (CBOW, SKIPGRAM, CCONCAT)

LR_FLOOR_FRACTION = 1e-4
PROB_FLOOR = 1e-12


@dataclass
class EmbedConfig:
    dim: int = 300
    window: int = 5
    subsample: float = 1e-5
    negatives: int = 10
    epochs: int = 1
    learning_rate: float = 0.025
    min_count: int = 1
    seed: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "min_count"):
            if getattr(self, name) < 1:
                raise ValueError("%s must be >= 1" % name)
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.subsample <= 0 or self.learning_rate <= 0:
            raise ValueError("subsample and learning_rate must be > 0")


class UnigramTable:
    """Negative-sampling distribution: p(w) proportional to freq(w)^0.75,
    with PAD and UNK excluded."""

    def __init__(self, counts):
        counts = np.asarray(counts, dtype=np.float64)
        weights = np.power(counts, 0.75)
        weights[PAD_INDEX] = 0.0
        weights[UNK_INDEX] = 0.0
        total = weights.sum()
        if total <= 0:
            raise ValueError("no sampleable words")
        self.probs = weights / total
        self.cum = np.cumsum(self.probs)
        self.cum[-1] = 1.0
        self.n_words = int(np.count_nonzero(self.probs))

    def sample(self, rng):
        u = rng.uniform_scalar()
        return int(np.searchsorted(self.cum, u, side="right"))

    def sample_many(self, rng, n):
        us = rng.uniform(n)
        return np.searchsorted(self.cum, us, side="right")


def negative_sample(table, exclude, k, rng):
    """k i.i.d. draws from the table, redrawing any collision with
    `exclude`."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if table.n_words < 2:
        raise ValueError("negative sampling needs at least 2 sampleable words")
    out = []
    while len(out) < k:
        j = table.sample(rng)
        if j != exclude:
            out.append(j)
    return out


def subsample_prob(f, N, t):
    """word2vec keep probability for a word of frequency f in N tokens."""
    if f < 1:
        raise ValueError("frequency must be >= 1")
    ratio = f / (t * N)
    return min(1.0, (math.sqrt(ratio) + 1.0) / ratio)


def subsample_keep(f, N, t, rng):
    p = subsample_prob(f, N, t)
    if p >= 1.0:
        return True
    return rng.uniform_scalar() < p


@dataclass
class EmbedModel:
    vocab: Vocabulary
    objective: str
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    window: int
    epoch_losses: list = field(default_factory=list)

    @property
    def dim(self):
        return self.input_vectors.shape[1]


def init_embed_model(vocab, objective, config, rng):
    if objective not in OBJECTIVES:
        raise ValueError("unknown objective %r (expected one of %s)"
                         % (objective, OBJECTIVES))
    dim = config.dim
    inp = linalg.uniform_init(rng, (len(vocab), dim), 0.5 / dim)
    inp[PAD_INDEX] = 0.0
    out_width = 2 * config.window * dim if objective == CCONCAT else dim
    out = linalg.zeros((len(vocab), out_width))
    return EmbedModel(vocab=vocab, objective=objective, input_vectors=inp,
                      output_vectors=out, window=config.window)


def _sig(s):
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def _ns_grads(output, h, center, negatives):
    """Negative-sampling loss and gradients for one prediction.

    Returns (loss, dh, {row: du_row}); du entries accumulate when a
    negative repeats or collides with nothing else touching that row.
    """
    loss = 0.0
    dh = np.zeros_like(h)
    du = {}
    for j, label in [(center, 1.0)] + [(n, 0.0) for n in negatives]:
        s = float(output[j] @ h)
        p = _sig(s)
        win = p if label else 1.0 - p
        loss += -math.log(max(win, PROB_FLOOR))
        g = p - label
        dh += g * output[j]
        if j in du:
            du[j] = du[j] + g * h
        else:
            du[j] = g * h
    return loss, dh, du


def _apply_input_grads(model, grads, lr):
    for row, g in grads.items():
        if row == PAD_INDEX:
            continue
        model.input_vectors[row] -= lr * g


def _apply_output_grads(model, du, lr):
    for row, g in du.items():
        model.output_vectors[row] -= lr * g


def cbow_grads(model, center, context, negatives):
    """Pure gradient computation; context is a list of word indices."""
    if not context:
        raise ValueError("CBOW needs a nonempty context")
    h = np.mean(model.input_vectors[context], axis=0)
    loss, dh, du = _ns_grads(model.output_vectors, h, center, negatives)
    dv = {}
    share = dh / len(context)
    for j in context:
        if j in dv:
            dv[j] = dv[j] + share
        else:
            dv[j] = share.copy()
    return loss, dv, du


def cbow_update(model, center, context, config, lr, table, rng):
    negatives = negative_sample(table, center, config.negatives, rng)
    loss, dv, du = cbow_grads(model, center, context, negatives)
    _apply_output_grads(model, du, lr)
    _apply_input_grads(model, dv, lr)
    return loss


def skipgram_grads(model, center, context_word, negatives):
    h = model.input_vectors[center]
    loss, dh, du = _ns_grads(model.output_vectors, h, context_word, negatives)
    return loss, {center: dh}, du


def skipgram_update(model, center, context_word, config, lr, table, rng):
    negatives = negative_sample(table, context_word, config.negatives, rng)
    loss, dv, du = skipgram_grads(model, center, context_word, negatives)
    _apply_output_grads(model, du, lr)
    _apply_input_grads(model, dv, lr)
    return loss


def cconcat_grads(model, center, slots, negatives):
    """slots: exactly 2*window word indices in positional order, with PAD
    standing in for positions off the sentence ends."""
    if len(slots) != 2 * model.window:
        raise ValueError("expected %d context slots, got %d"
                         % (2 * model.window, len(slots)))
    dim = model.dim
    h = np.concatenate([model.input_vectors[j] for j in slots])
    loss, dh, du = _ns_grads(model.output_vectors, h, center, negatives)
    dv = {}
    for k, j in enumerate(slots):
        g = dh[k * dim : (k + 1) * dim]
        if j in dv:
            dv[j] = dv[j] + g
        else:
            dv[j] = g.copy()
    return loss, dv, du


def cconcat_update(model, center, slots, config, lr, table, rng):
    negatives = negative_sample(table, center, config.negatives, rng)
    loss, dv, du = cconcat_grads(model, center, slots, negatives)
    _apply_output_grads(model, du, lr)
    _apply_input_grads(model, dv, lr)
    return loss


def read_corpus(path, lowercase=True, digits_to_zero=True):
    """One sentence per line, whitespace tokens, normalized the same way
    the tagging vocabulary is."""
    sentences = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            words = [normalize(w, lowercase, digits_to_zero) for w in line.split()]
            if words:
                sentences.append(words)
    return sentences


def _vocab_from_counts(counts, min_count):
    kept = sorted((w for w, c in counts.items() if c >= min_count),
                  key=lambda w: (-counts[w], w))
    index_to_word = [PAD, UNK] + kept
    return Vocabulary(index_to_word=index_to_word,
                      word_to_index={w: i for i, w in enumerate(index_to_word)})


def train_embeddings(corpus_path, objective, config):
    """Epoch loop over the corpus with linear lr decay down to
    initial * 1e-4.  Deterministic for a fixed seed."""
    sentences = read_corpus(corpus_path)
    counts = Counter(w for sent in sentences for w in sent)
    vocab = _vocab_from_counts(counts, config.min_count)
    if len(vocab) <= 2:
        raise ValueError("no words survive the min_count=%d filter" % config.min_count)

    index_counts = np.zeros(len(vocab))
    for w, c in counts.items():
        i = vocab.word_to_index.get(w)
        if i is not None:
            index_counts[i] = c
    table = UnigramTable(index_counts)

    rng = linalg.SeededRng(config.seed)
    model = init_embed_model(vocab, objective, config, rng)

    # decay is driven by in-vocab occurrences, counted before subsampling
    total_tokens = int(index_counts.sum())
    budget = config.epochs * total_tokens
    processed = 0
    t = config.subsample
    w = config.window

    for _ in range(config.epochs):
        epoch_loss = 0.0
        epoch_updates = 0
        for sent in sentences:
            indices = [vocab.word_to_index[x] for x in sent
                       if x in vocab.word_to_index]
            kept = []
            for i in indices:
                processed += 1
                if subsample_keep(index_counts[i], total_tokens, t, rng):
                    kept.append(i)
            for pos, center in enumerate(kept):
                lr = config.learning_rate * max(
                    LR_FLOOR_FRACTION, 1.0 - processed / budget)
                if objective == CBOW:
                    context = kept[max(0, pos - w):pos] + kept[pos + 1:pos + w + 1]
                    if not context:
                        continue
                    epoch_loss += cbow_update(model, center, context, config,
                                              lr, table, rng)
                    epoch_updates += 1
                elif objective == SKIPGRAM:
                    for cw in kept[max(0, pos - w):pos] + kept[pos + 1:pos + w + 1]:
                        epoch_loss += skipgram_update(model, center, cw, config,
                                                      lr, table, rng)
                        epoch_updates += 1
                else:
                    slots = [kept[pos + d] if 0 <= pos + d < len(kept) else PAD_INDEX
                             for d in range(-w, 0)]
                    slots += [kept[pos + d] if 0 <= pos + d < len(kept) else PAD_INDEX
                              for d in range(1, w + 1)]
                    epoch_loss += cconcat_update(model, center, slots, config,
                                                 lr, table, rng)
                    epoch_updates += 1
        model.epoch_losses.append(epoch_loss / epoch_updates if epoch_updates else 0.0)
    return model


def save_text(model, path):
    """Write the input-vector matrix (the downstream embedding) in the
    shared text format."""
    EmbeddingTable(model.vocab, model.dim, model.input_vectors.copy()).save_text(path)


def load_text(path):
    return load_embeddings(path)
