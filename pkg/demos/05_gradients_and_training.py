"""
Checking gradients, then fitting a small classifier
===================================================

The four sentence classifiers (CNN, CNN with per-label attention, stacked
LSTM, LSTM with attention) run on a small reverse-mode autodiff engine.
First confirm the gradients against central differences, then train
RNN-ATT on a synthetic corpus whose labels are recoverable from the text.
"""

import time

import numpy as np

from radtag.embeddings import EmbeddingTrainConfig, train_subword_embeddings
from radtag.neuralnet import TOPOLOGIES, ModelConfig, TrainerConfig, build_model, grad_check, score, train
from radtag.neuralnet.gradcheck import toy_problem
from radtag.pipeline import SyntheticSpec, encode, generate_synthetic_corpus, synthetic_sentences

for topology in TOPOLOGIES:
    model, sequences, targets = toy_problem(topology)
    start = time.perf_counter()
    result = grad_check(model, sequences, targets, eps=1e-5)
    print(f"{topology:8s} {result.checked:6d} params  max rel error {result.max_rel_error:.2e}"
          f"  ({time.perf_counter() - start:.1f} s)")

corpus = generate_synthetic_corpus(SyntheticSpec(label_count=8, sentence_count=240, seed=0))
items = synthetic_sentences(corpus)
labels = list(corpus.labels)
emb = train_subword_embeddings([list(s.tokens) for s in items],
                               EmbeddingTrainConfig(dim=50, epochs=55, min_count=1, subsample_threshold=1e-2))
sets = {name: encode([s for s in items if s.split == name], labels, emb) for name in ("train", "val")}

model = build_model(ModelConfig(topology="rnn-att", embed_dim=50, lstm_hidden=64, lstm_layers=2,
                                label_count=len(labels), max_len=30), seed=0, labels=labels)
fitted, curves = train(model, sets["train"], sets["val"], TrainerConfig(batch_size=32, max_epochs=80))
print("best epoch", curves["best_epoch"])
print("train loss", np.round(curves["train_loss"][::5], 4))
print("validation", score(fitted, sets["val"]).format())
