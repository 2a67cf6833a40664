"""Subword word embeddings, document vectors and k-means topics."""

from .docvec import DocVectorConfig, DocVectorModel, train_doc_vectors
from .io import (export_vec, load_doc_vectors, load_embeddings, load_topics, read_vec, save_doc_vectors,
                 save_embeddings, save_topics)
from .subword import (BUCKET_COUNT, EmbeddingTrainConfig, SubwordEmbeddingModel, char_ngrams, fnv1a,
                      ngram_buckets, train_subword_embeddings)
from .topics import TopicModel, kmeans_cluster, nearest, topic_summary


def embed_token(model, token):
    """Embedding of ``token`` under ``model`` (see :meth:`SubwordEmbeddingModel.embed`)."""
    return model.embed(token)


__all__ = [
    "EmbeddingTrainConfig", "SubwordEmbeddingModel", "train_subword_embeddings", "embed_token",
    "char_ngrams", "fnv1a", "ngram_buckets", "BUCKET_COUNT",
    "DocVectorConfig", "DocVectorModel", "train_doc_vectors",
    "TopicModel", "kmeans_cluster", "nearest", "topic_summary",
    "save_embeddings", "load_embeddings", "export_vec", "read_vec",
    "save_doc_vectors", "load_doc_vectors", "save_topics", "load_topics",
]
