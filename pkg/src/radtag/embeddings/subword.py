"""Skip-gram word embeddings with character n-gram subwords and negative
sampling, trained deterministically in numpy."""

from collections import Counter
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyVocabulary, InvalidConfig

BUCKET_COUNT = 2 ** 21


@dataclass
class EmbeddingTrainConfig:
    dim: int = 100
    lr: float = 0.025
    window: int = 5
    epochs: int = 55
    min_count: int = 5
    negatives: int = 5
    subsample_threshold: float = 1e-4
    ngram_min: int = 3
    ngram_max: int = 6
    bucket_count: int = BUCKET_COUNT

    def __post_init__(self):
        for name in ("dim", "window", "epochs", "min_count", "negatives", "ngram_min", "bucket_count"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.lr <= 0 or self.subsample_threshold <= 0:
            raise InvalidConfig("lr and subsample_threshold must be positive")
        if self.ngram_max < self.ngram_min:
            raise InvalidConfig("ngram_max must be >= ngram_min")

    def as_dict(self):
        return asdict(self)


def fnv1a(text):
    """32-bit FNV-1a hash of the UTF-8 bytes of ``text``."""
    h = 2166136261
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 16777619) & 0xFFFFFFFF
    return h


def char_ngrams(token, nmin=3, nmax=6):
    """Character n-grams of ``<token>`` with lengths in ``[nmin, nmax]``.
    The bracketed whole word itself is not included."""
    w = f"<{token}>"
    out = []
    for n in range(nmin, nmax + 1):
        for i in range(len(w) - n + 1):
            g = w[i:i + n]
            if g != w:
                out.append(g)
    return out


def ngram_buckets(token, nmin=3, nmax=6, bucket_count=BUCKET_COUNT):
    return [fnv1a(g) % bucket_count for g in char_ngrams(token, nmin, nmax)]


def build_vocab(corpus, min_count):
    counts = Counter(t for sentence in corpus for t in sentence)
    # frequency-descending, ties alphabetical: a stable, seed-free order
    kept = sorted((w for w, c in counts.items() if c >= min_count), key=lambda w: (-counts[w], w))
    return {w: counts[w] for w in kept}


def keep_probabilities(freqs, threshold):
    f = freqs / freqs.sum()
    return np.minimum(1.0, np.sqrt(threshold / f) + threshold / f)


def negative_table(freqs, size=1_000_000):
    """Indices laid out proportionally to ``freq ** 0.75``."""
    p = freqs ** 0.75
    p = p / p.sum()
    counts = np.maximum(1, np.round(p * size)).astype(np.int64)
    return np.repeat(np.arange(len(freqs)), counts)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def ns_step(h, out_rows, labels, lr):
    """One negative-sampling update; returns ``(grad_h, grad_out, loss)``."""
    score = out_rows @ h
    p = _sigmoid(score)
    g = (labels - p) * lr
    eps = 1e-12
    loss = -np.sum(labels * np.log(p + eps) + (1 - labels) * np.log(1 - p + eps))
    return g @ out_rows, np.outer(g, h), loss


class SubwordEmbeddingModel:
    """Word and n-gram input vectors; query with :meth:`embed`.

    Only n-gram buckets that occur in vocabulary words carry vectors, so an
    n-gram unseen in training contributes nothing to a query.
    """

    def __init__(self, config, vocab, word_vectors, bucket_ids, ngram_vectors, output_vectors=None,
                 epoch_losses=None):
        self.config = config
        self.vocab = dict(vocab)
        self.words = list(self.vocab)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.word_matrix = np.asarray(word_vectors, dtype=np.float64)
        self.bucket_ids = [int(b) for b in bucket_ids]
        self.bucket_index = {b: i for i, b in enumerate(self.bucket_ids)}
        self.ngram_matrix = np.asarray(ngram_vectors, dtype=np.float64)
        self.output_vectors = output_vectors
        self.epoch_losses = list(epoch_losses or [])

    @property
    def dim(self):
        return self.config.dim

    @property
    def ngram_min(self):
        return self.config.ngram_min

    @property
    def ngram_max(self):
        return self.config.ngram_max

    @property
    def bucket_count(self):
        return self.config.bucket_count

    @property
    def word_vectors(self):
        return {w: self.word_matrix[i] for w, i in self.word_index.items()}

    @property
    def ngram_vectors(self):
        return {b: self.ngram_matrix[i] for b, i in self.bucket_index.items()}

    def known_buckets(self, token):
        c = self.config
        rows = []
        for b in ngram_buckets(token, c.ngram_min, c.ngram_max, c.bucket_count):
            if b in self.bucket_index:
                rows.append(self.bucket_index[b])
        return rows

    def embed(self, token):
        """Mean of the word vector (when in vocabulary) and the vectors of
        its known n-grams; the zero vector when nothing is known."""
        vecs = [self.ngram_matrix[r] for r in self.known_buckets(token)]
        if token in self.word_index:
            vecs.insert(0, self.word_matrix[self.word_index[token]])
        if not vecs:
            return np.zeros(self.dim)
        return np.mean(vecs, axis=0)

    def embed_sentence(self, tokens):
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.embed(t) for t in tokens])

    def most_similar(self, token, topn=10):
        q = self.embed(token)
        nq = np.linalg.norm(q)
        if nq == 0 or not self.words:
            return []
        mat = np.stack([self.embed(w) for w in self.words])
        norms = np.linalg.norm(mat, axis=1)
        sims = mat @ q / np.where(norms == 0, 1, norms) / nq
        order = np.argsort(-sims, kind="stable")
        return [(self.words[i], float(sims[i])) for i in order if self.words[i] != token][:topn]


def train_subword_embeddings(corpus, cfg=None, seed=0):
    """Train on ``corpus``, a list of token lists. Deterministic per seed."""
    cfg = cfg or EmbeddingTrainConfig()
    vocab = build_vocab(corpus, cfg.min_count)
    if not vocab:
        raise EmptyVocabulary(f"no token occurs at least {cfg.min_count} times")
    rng = np.random.default_rng(seed)
    words = list(vocab)
    index = {w: i for i, w in enumerate(words)}
    freqs = np.array([vocab[w] for w in words], dtype=np.float64)

    bucket_ids = []
    bucket_row = {}
    subword_rows = []
    for w in words:
        rows = []
        for b in ngram_buckets(w, cfg.ngram_min, cfg.ngram_max, cfg.bucket_count):
            if b not in bucket_row:
                bucket_row[b] = len(bucket_ids)
                bucket_ids.append(b)
            rows.append(len(words) + bucket_row[b])
        subword_rows.append(np.array([index[w]] + rows, dtype=np.int64))

    n_in = len(words) + len(bucket_ids)
    w_in = rng.uniform(-1.0 / cfg.dim, 1.0 / cfg.dim, size=(n_in, cfg.dim))
    w_out = np.zeros((len(words), cfg.dim))
    keep_p = keep_probabilities(freqs, cfg.subsample_threshold)
    table = negative_table(freqs)
    sentences = [np.array([index[t] for t in s if t in index], dtype=np.int64) for s in corpus]
    total_tokens = max(1, int(freqs.sum()) * cfg.epochs)
    processed = 0
    losses = []
    for _ in range(cfg.epochs):
        epoch_loss, pairs = 0.0, 0
        for sent in sentences:
            processed += len(sent)
            if len(sent) < 2:
                continue
            sent = sent[rng.random(len(sent)) < keep_p[sent]]
            if len(sent) < 2:
                continue
            lr = cfg.lr * max(1e-4, 1.0 - processed / total_tokens)
            spans = rng.integers(1, cfg.window + 1, size=len(sent))
            negs = table[rng.integers(0, len(table), size=(len(sent), 2 * cfg.window * cfg.negatives))]
            for pos, center in enumerate(sent):
                lo, hi = max(0, pos - spans[pos]), min(len(sent), pos + spans[pos] + 1)
                ctx = np.concatenate([sent[lo:pos], sent[pos + 1:hi]])
                if ctx.size == 0:
                    continue
                neg = negs[pos, :ctx.size * cfg.negatives]
                targets = np.concatenate([ctx, neg])
                labels = np.zeros(targets.size)
                labels[:ctx.size] = 1.0
                rows = subword_rows[center]
                h = w_in[rows].mean(axis=0)
                grad_h, grad_out, loss = ns_step(h, w_out[targets], labels, lr)
                np.add.at(w_out, targets, grad_out)
                w_in[rows] += grad_h
                epoch_loss += loss
                pairs += ctx.size
        losses.append(epoch_loss / max(1, pairs))
    w_in = w_in.astype(np.float32).astype(np.float64)
    return SubwordEmbeddingModel(cfg, vocab, w_in[:len(words)], bucket_ids, w_in[len(words):],
                                 output_vectors=w_out, epoch_losses=losses)
