"""Distributed-memory paragraph vectors trained with negative sampling."""

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import EmptyCorpus, InvalidConfig
from .subword import build_vocab, keep_probabilities, negative_table, ns_step


@dataclass
class DocVectorConfig:
    dim: int = 300
    window: int = 10
    epochs: int = 55
    min_count: int = 5
    negatives: int = 5
    subsample_threshold: float = 1e-3
    lr: float = 0.025

    def __post_init__(self):
        for name in ("dim", "window", "epochs", "min_count", "negatives"):
            if getattr(self, name) < 1:
                raise InvalidConfig(f"{name} must be positive")
        if self.lr <= 0 or self.subsample_threshold <= 0:
            raise InvalidConfig("lr and subsample_threshold must be positive")

    def as_dict(self):
        return asdict(self)


class DocVectorModel:
    def __init__(self, config, doc_ids, vectors, vocab=None, word_vectors=None, epoch_losses=None):
        self.config = config
        self.doc_ids = list(doc_ids)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.vocab = dict(vocab or {})
        self.word_vectors = word_vectors
        self.epoch_losses = list(epoch_losses or [])

    @property
    def dim(self):
        return self.config.dim

    @property
    def doc_vectors(self):
        return {d: self.vectors[i] for i, d in enumerate(self.doc_ids)}

    def __len__(self):
        return len(self.doc_ids)


def _as_documents(corpus):
    if isinstance(corpus, dict):
        return list(corpus.keys()), [list(v) for v in corpus.values()]
    docs = [list(d) for d in corpus]
    return list(range(len(docs))), docs


def train_doc_vectors(corpus, seed=0, cfg=None):
    """One vector per document; ``corpus`` is a list of token lists or a
    mapping from document id to tokens.

    The hidden layer is the mean of the document vector and the context
    word vectors around each position; it predicts the centre word.
    Documents whose words all fall below ``min_count`` keep their seeded
    initial vector.
    """
    cfg = cfg or DocVectorConfig()
    ids, docs = _as_documents(corpus)
    if not docs:
        raise EmptyCorpus("no documents to embed")
    rng = np.random.default_rng(seed)
    vocab = build_vocab(docs, cfg.min_count)
    words = list(vocab)
    index = {w: i for i, w in enumerate(words)}
    d_in = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(len(docs), cfg.dim))
    w_in = rng.uniform(-0.5 / cfg.dim, 0.5 / cfg.dim, size=(len(words), cfg.dim))
    w_out = np.zeros((len(words), cfg.dim))
    losses = []
    if words:
        freqs = np.array([vocab[w] for w in words], dtype=np.float64)
        keep_p = keep_probabilities(freqs, cfg.subsample_threshold)
        table = negative_table(freqs)
        encoded = [np.array([index[t] for t in d if t in index], dtype=np.int64) for d in docs]
        total = max(1, int(freqs.sum()) * cfg.epochs)
        processed = 0
        for _ in range(cfg.epochs):
            epoch_loss, count = 0.0, 0
            for di in rng.permutation(len(docs)):
                doc = encoded[di]
                processed += len(doc)
                doc = doc[rng.random(len(doc)) < keep_p[doc]]
                if doc.size == 0:
                    continue
                lr = cfg.lr * max(1e-4, 1.0 - processed / total)
                spans = rng.integers(1, cfg.window + 1, size=len(doc))
                negs = table[rng.integers(0, len(table), size=(len(doc), cfg.negatives))]
                for pos, center in enumerate(doc):
                    lo, hi = max(0, pos - spans[pos]), min(len(doc), pos + spans[pos] + 1)
                    ctx = np.concatenate([doc[lo:pos], doc[pos + 1:hi]])
                    h = (d_in[di] + w_in[ctx].sum(axis=0)) / (1 + ctx.size)
                    targets = np.concatenate([[center], negs[pos]])
                    labels = np.zeros(targets.size)
                    labels[0] = 1.0
                    grad_h, grad_out, loss = ns_step(h, w_out[targets], labels, lr)
                    np.add.at(w_out, targets, grad_out)
                    d_in[di] += grad_h
                    if ctx.size:
                        np.add.at(w_in, ctx, grad_h)
                    epoch_loss += loss
                    count += 1
            losses.append(epoch_loss / max(1, count))
    return DocVectorModel(cfg, ids, d_in.astype(np.float32).astype(np.float64), vocab,
                          w_in.astype(np.float32).astype(np.float64), losses)
