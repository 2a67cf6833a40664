"""
Subword embeddings and report topics
====================================

Word vectors are built from character n-grams, so a stem never seen in
training still gets a vector from its pieces. Paragraph vectors for whole
reports are then grouped with k-means and each cluster is described by its
most characteristic terms.
"""

import numpy as np

from radtag.embeddings import (DocVectorConfig, EmbeddingTrainConfig, char_ngrams, kmeans_cluster,
                               topic_summary, train_doc_vectors, train_subword_embeddings)
from radtag.pipeline import SyntheticSpec, generate_synthetic_corpus, synthetic_reports
from radtag.preprocess import PreprocessConfig, preprocess_report

print(char_ngrams("pulmonar"))

corpus = generate_synthetic_corpus(SyntheticSpec(label_count=10, sentence_count=200, seed=1))
sentences = [list(s.tokens) for s in corpus.sentences]
emb = train_subword_embeddings(sentences, EmbeddingTrainConfig(dim=20, epochs=5, min_count=1,
                                                               subsample_threshold=1e-2), seed=1)
print(len(emb.words), "words,", len(emb.bucket_ids), "n-gram rows")

word = emb.words[0]
print(word, "->", [w for w, _ in emb.most_similar(word, 5)])
unseen = word + "s"
print("unseen", unseen, "norm", float(np.linalg.norm(emb.embed(unseen))))

# Reports become token documents, then paragraph vectors, then topics.
reports, _ = synthetic_reports(corpus, per_report=4, seed=1)
cfg = PreprocessConfig.default()
docs = {r.report_id: [t for s in preprocess_report(r, cfg) for t in s.tokens] for r in reports}
dv = train_doc_vectors(docs, seed=1, cfg=DocVectorConfig(dim=16, epochs=10, min_count=1))
topics = kmeans_cluster(dv.vectors, k=4, seed=1, doc_ids=dv.doc_ids)
print("inertia by iteration", np.round(topics.inertia_history, 3))
for topic, terms in enumerate(topic_summary(topics, docs, top_n=5)):
    print(topic, len(topics.members(topic)), [t for t, _ in terms])
