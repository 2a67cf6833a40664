"""Binary and text serialization of embedding, document-vector and topic
models.

Binary layout: 4-byte magic, little-endian uint32 version, uint32 header
length, UTF-8 JSON header, then float32 little-endian matrices in the
order the header lists them.
"""

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .docvec import DocVectorConfig, DocVectorModel
from .subword import EmbeddingTrainConfig, SubwordEmbeddingModel
from .topics import TopicModel

EMBED_MAGIC = b"RTEM"
DOCVEC_MAGIC = b"RTDV"
VERSION = 1


class ModelFileError(ConfigError):
    pass


def _write(path, magic, header, matrices):
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", VERSION, len(raw)))
        fh.write(raw)
        for m in matrices:
            fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())


def _read(path, magic):
    blob = Path(path).read_bytes()
    if blob[:4] != magic:
        raise ModelFileError(f"{path}: unexpected file type")
    version, hlen = struct.unpack("<II", blob[4:12])
    if version != VERSION:
        raise ModelFileError(f"{path}: unsupported version {version}")
    header = json.loads(blob[12:12 + hlen].decode("utf-8"))
    offset = 12 + hlen
    mats = []
    for rows, cols in header["shapes"]:
        count = rows * cols
        mats.append(np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
                    .reshape(rows, cols).astype(np.float64))
        offset += 4 * count
    if offset != len(blob):
        raise ModelFileError(f"{path}: payload length does not match header")
    return header, mats


def save_embeddings(model, path):
    header = {
        "dim": model.dim,
        "config": model.config.as_dict(),
        "vocab": [[w, c] for w, c in model.vocab.items()],
        "buckets": model.bucket_ids,
        "shapes": [list(model.word_matrix.shape), [len(model.bucket_ids), model.dim]],
        "epoch_losses": model.epoch_losses,
    }
    _write(path, EMBED_MAGIC, header, [model.word_matrix, model.ngram_matrix.reshape(-1, model.dim)])


def load_embeddings(path):
    header, (words, ngrams) = _read(path, EMBED_MAGIC)
    cfg = EmbeddingTrainConfig(**header["config"])
    vocab = {w: c for w, c in header["vocab"]}
    return SubwordEmbeddingModel(cfg, vocab, words, header["buckets"], ngrams,
                                 epoch_losses=header.get("epoch_losses"))


def export_vec(model, path):
    """Plain-text export: a ``count dim`` line, then ``token v1 v2 ...``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(model.words)} {model.dim}\n")
        for w in model.words:
            vec = model.embed(w)
            fh.write(w + " " + " ".join(f"{v:.6g}" for v in vec) + "\n")


def read_vec(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().split()
        dim = int(first[1])
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) == dim + 1:
                out[parts[0]] = np.array([float(v) for v in parts[1:]])
    return out


def save_doc_vectors(model, path):
    header = {
        "dim": model.dim,
        "config": model.config.as_dict(),
        "doc_ids": [str(d) for d in model.doc_ids],
        "shapes": [list(model.vectors.shape)],
    }
    _write(path, DOCVEC_MAGIC, header, [model.vectors])


def load_doc_vectors(path):
    header, (vectors,) = _read(path, DOCVEC_MAGIC)
    return DocVectorModel(DocVectorConfig(**header["config"]), header["doc_ids"], vectors)


def save_topics(topics, path, summary=None):
    data = {
        "k": topics.k,
        "centroids": topics.centroids.tolist(),
        "labels": [int(x) for x in topics.labels],
        "doc_ids": [str(d) for d in topics.doc_ids],
        "inertia_history": topics.inertia_history,
        "iterations": topics.iterations,
    }
    if summary is not None:
        data["summary"] = [[[t, s] for t, s in terms] for terms in summary]
    Path(path).write_text(json.dumps(data, indent=1), encoding="utf-8")


def load_topics(path):
    """Return ``(TopicModel, summary or None)``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    model = TopicModel(data["k"], np.array(data["centroids"]), np.array(data["labels"]),
                       data["doc_ids"], data["inertia_history"], data["iterations"])
    summary = data.get("summary")
    if summary is not None:
        summary = [[(t, s) for t, s in terms] for terms in summary]
    return model, summary
