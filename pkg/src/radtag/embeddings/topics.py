"""k-means topics over document vectors and term summaries per topic."""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..errors import TooFewVectors


@dataclass
class TopicModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    doc_ids: list
    inertia_history: list = field(default_factory=list)
    iterations: int = 0

    @property
    def assignment(self):
        return {d: int(t) for d, t in zip(self.doc_ids, self.labels)}

    @property
    def inertia(self):
        return self.inertia_history[-1] if self.inertia_history else 0.0

    def members(self, topic):
        return [d for d, t in zip(self.doc_ids, self.labels) if t == topic]


def squared_distances(x, c):
    d = (x * x).sum(axis=1)[:, None] - 2 * x @ c.T + (c * c).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def nearest(x, c):
    """Index of the closest centroid per row; ties go to the lowest index."""
    d = squared_distances(x, c)
    return d.argmin(axis=1), d


def kmeans_plus_plus(x, k, rng):
    n = len(x)
    chosen = [int(rng.integers(n))]
    d2 = squared_distances(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        d2 = np.minimum(d2, squared_distances(x, x[[idx]])[:, 0])
    return x[chosen].copy()


def kmeans_cluster(vectors, k=20, seed=0, max_iter=300, doc_ids=None):
    """Lloyd's algorithm from a seeded k-means++ start.

    Stops when assignments stop changing or after ``max_iter`` rounds. An
    emptied cluster is moved onto the point farthest from its own
    centroid. The returned assignment is always the nearest centroid.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("vectors must form a 2-D array")
    if len(x) < k or k < 1:
        raise TooFewVectors(f"{len(x)} vectors cannot form {k} clusters")
    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(x, k, rng)
    labels, d = nearest(x, centroids)
    history = [float(d[np.arange(len(x)), labels].sum())]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        for j in range(k):
            members = labels == j
            if members.any():
                centroids[j] = x[members].mean(axis=0)
        own = squared_distances(x, centroids)[np.arange(len(x)), labels]
        taken = set()
        for j in range(k):
            if not (labels == j).any():
                for i in np.argsort(-own, kind="stable"):
                    if int(i) not in taken:
                        taken.add(int(i))
                        centroids[j] = x[i]
                        break
        new, d = nearest(x, centroids)
        history.append(float(d[np.arange(len(x)), new].sum()))
        if np.array_equal(new, labels):
            labels = new
            break
        labels = new
    ids = list(doc_ids) if doc_ids is not None else list(range(len(x)))
    return TopicModel(k, centroids, labels, ids, history, iterations)


def topic_summary(topics, corpus, top_n=10):
    """Ranked ``(term, score)`` lists, one per topic.

    A term scores its frequency inside the topic times the smoothed inverse
    document frequency ``ln((1 + N) / (1 + df)) + 1`` over the corpus.
    Ties are broken alphabetically.
    """
    docs = [list(d) for d in (corpus.values() if isinstance(corpus, dict) else corpus)]
    if len(docs) != len(topics.labels):
        raise ValueError("corpus and topic assignment differ in length")
    df = Counter(t for d in docs for t in set(d))
    n = len(docs)
    out = []
    for topic in range(topics.k):
        tf = Counter(t for d, lab in zip(docs, topics.labels) if lab == topic for t in d)
        scored = [(term, c * (np.log((1 + n) / (1 + df[term])) + 1.0)) for term, c in tf.items()]
        scored.sort(key=lambda s: (-s[1], s[0]))
        out.append([(t, float(s)) for t, s in scored[:top_n]])
    return out
