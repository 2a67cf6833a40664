"""Seeded end-to-end experiments: embeddings, one model per topology on a
fixed split, a results table, learning curves and the best checkpoint."""

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..config import coerce_fields, read_flat_config
from ..embeddings import EmbeddingTrainConfig, save_embeddings, train_subword_embeddings
from ..errors import ConfigError, EmptySet, SchemaError
from ..neuralnet import (TOPOLOGIES, EncodedSet, ModelConfig, TrainerConfig, build_model, save_checkpoint,
                         score, train)
from ..taxonomy import label_space
from .synthetic import SyntheticSpec, generate_synthetic_corpus, split_indices

RESULT_COLUMNS = ["split", "model", "epochs", "accuracy", "macro_f1", "micro_f1", "weighted_f1"]
SENTENCE_COLUMNS = ["sentence_id", "tokens", "labels", "split"]


@dataclass
class LabeledSentence:
    sentence_id: str
    tokens: tuple
    labels: list
    split: str = ""


def write_labeled_sentences(items, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SENTENCE_COLUMNS)
        for s in items:
            w.writerow([s.sentence_id, " ".join(s.tokens), ";".join(s.labels), s.split])


def read_labeled_sentences(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        names = reader.fieldnames or []
        for col in SENTENCE_COLUMNS[:3]:
            if col not in names:
                raise SchemaError(col, f"{path}: missing column {col}")
        return [LabeledSentence(r["sentence_id"], tuple(r["tokens"].split()),
                                [x for x in r["labels"].split(";") if x], r.get("split") or "")
                for r in reader]


def synthetic_sentences(corpus):
    split_of = {i: name for name, idx in corpus.splits.items() for i in idx}
    return [LabeledSentence(s.sentence_id, s.tokens, list(s.labels), split_of[i])
            for i, s in enumerate(corpus.sentences)]


def encode(items, labels, embeddings):
    """Embed token sequences and build multi-hot targets over ``labels``;
    sentences without tokens are skipped."""
    index = {x: i for i, x in enumerate(labels)}
    seqs, targets = [], []
    for s in items:
        if not s.tokens:
            continue
        y = np.zeros(len(labels))
        for x in s.labels:
            if x in index:
                y[index[x]] = 1.0
        seqs.append(embeddings.embed_sentence(s.tokens))
        targets.append(y)
    return EncodedSet(seqs, np.array(targets).reshape(len(seqs), len(labels)), list(labels))


@dataclass
class ExperimentConfig:
    seed: int = 0
    out_dir: str = "experiment"
    corpus: str = "synthetic"
    label_count: int = 30
    sentence_count: int = 500
    noise_rate: float = 0.0
    topologies: str = "cnn,cnn-att,rnn,rnn-att"
    embed_dim: int = 100
    embed_epochs: int = 55
    embed_min_count: int = 5
    embed_subsample: float = 1e-4
    batch_size: int = 1024
    lr: float = None
    optimizer: str = None
    max_epochs: int = 500
    patience: int = 10
    l2_penalty: float = 0.0
    threshold: float = 0.5
    max_len: int = 56
    conv1_filters: int = 64
    conv2_filters: int = 128
    pool_stride: int = 1
    lstm_hidden: int = 128
    lstm_layers: int = 2
    dropout_p: float = 0.4

    def topology_list(self):
        names = [t.strip().lower() for t in self.topologies.split(",") if t.strip()]
        bad = [t for t in names if t not in TOPOLOGIES]
        if bad or not names:
            raise ConfigError(f"unknown topologies: {bad or self.topologies!r}")
        return names

    def model_config(self, topology, label_count):
        return ModelConfig(topology=topology, embed_dim=self.embed_dim, max_len=self.max_len,
                           conv1_filters=self.conv1_filters, conv2_filters=self.conv2_filters,
                           pool_stride=self.pool_stride, lstm_hidden=self.lstm_hidden,
                           lstm_layers=self.lstm_layers, dropout_p=self.dropout_p, label_count=label_count)

    def trainer_config(self):
        return TrainerConfig(batch_size=self.batch_size, lr=self.lr, optimizer=self.optimizer,
                             max_epochs=self.max_epochs, patience=self.patience, l2_penalty=self.l2_penalty,
                             seed=self.seed, threshold=self.threshold)

    def embedding_config(self):
        return EmbeddingTrainConfig(dim=self.embed_dim, epochs=self.embed_epochs, min_count=self.embed_min_count,
                                    subsample_threshold=self.embed_subsample)

    @classmethod
    def from_file(cls, path, **overrides):
        raw = read_flat_config(path)
        kwargs = coerce_fields(cls, raw)
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kwargs)


@dataclass
class ExperimentResult:
    rows: list
    curves: dict
    best_topology: str
    out_dir: Path


def load_corpus(cfg):
    """Labeled sentences with a split assignment, and the label list."""
    if cfg.corpus == "synthetic":
        spec = SyntheticSpec(seed=cfg.seed, label_count=cfg.label_count,
                             sentence_count=cfg.sentence_count, noise_rate=cfg.noise_rate)
        corpus = generate_synthetic_corpus(spec)
        return synthetic_sentences(corpus), list(corpus.labels)
    items = read_labeled_sentences(cfg.corpus)
    if not items:
        raise EmptySet(f"{cfg.corpus}: no sentences")
    if not all(s.split in ("train", "val", "test") for s in items):
        splits = split_indices(len(items), 0.1, 0.1, np.random.default_rng(cfg.seed))
        for name, idx in splits.items():
            for i in idx:
                items[i].split = name
    present = {x for s in items for x in s.labels}
    ordered = [x for x in label_space() if x in present]
    ordered += sorted(present - set(ordered))
    return items, ordered


def _fmt(x):
    return f"{x:.6f}"


def write_curves(curves, path):
    keys = [k for k, v in curves.items() if isinstance(v, list)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for i in range(len(curves["epoch"])):
            w.writerow([curves[k][i] if k == "epoch" else _fmt(curves[k][i]) for k in keys])


def write_results(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([r["split"], r["model"], r["epochs"]] + [_fmt(r[k]) for k in RESULT_COLUMNS[3:]])


def run_experiment(cfg, log=None):
    """Train every requested topology on one seeded split.

    Writes ``results.csv`` (validation rows for each topology plus a test
    row for the best one by validation MicroF1), ``curves_<topology>.csv``,
    ``best.ckpt``, ``embeddings.bin`` and ``sentences.csv`` into
    ``cfg.out_dir``.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    topologies = cfg.topology_list()
    items, labels = load_corpus(cfg)
    write_labeled_sentences(items, out / "sentences.csv")
    embeddings = train_subword_embeddings([list(s.tokens) for s in items], cfg.embedding_config(), seed=cfg.seed)
    save_embeddings(embeddings, out / "embeddings.bin")
    sets = {name: encode([s for s in items if s.split == name], labels, embeddings)
            for name in ("train", "val", "test")}
    rows, all_curves = [], {}
    best = (-np.inf, None, None, None)
    for topology in topologies:
        model = build_model(cfg.model_config(topology, len(labels)), seed=cfg.seed, labels=labels)
        fitted, curves = train(model, sets["train"], sets["val"], cfg.trainer_config(),
                               log=(lambda e, c, t=topology: log(t, e, c)) if log else None)
        all_curves[topology] = curves
        write_curves(curves, out / f"curves_{topology}.csv")
        report = score(fitted, sets["val"], cfg.threshold)
        rows.append(dict(split="validation", model=topology.upper(), epochs=curves["best_epoch"],
                         **{k: getattr(report, k) for k in RESULT_COLUMNS[3:]}))
        if report.micro_f1 > best[0]:
            best = (report.micro_f1, topology, fitted, curves)
    _, topology, fitted, curves = best
    if len(sets["test"]):
        report = score(fitted, sets["test"], cfg.threshold)
        rows.append(dict(split="test", model=topology.upper(), epochs=curves["best_epoch"],
                         **{k: getattr(report, k) for k in RESULT_COLUMNS[3:]}))
    write_results(rows, out / "results.csv")
    save_checkpoint(fitted, out / "best.ckpt",
                    {"topology": topology, "epoch": curves["best_epoch"],
                     "best_val_micro_f1": float(best[0]), "seed": cfg.seed,
                     "trainer": asdict(cfg.trainer_config()), "threshold": cfg.threshold})
    return ExperimentResult(rows, all_curves, topology, out)
