"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS criterion N`` or ``FAIL criterion N`` line
to the terminal, in addition to the usual pytest outcome.
"""
import csv
import re
import time
import warnings
from collections import Counter
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from nltk.stem.snowball import SpanishStemmer

from radtag.cli import main
from radtag.embeddings import load_embeddings
from radtag.locextract import extract_locations
from radtag.metrics import evaluate
from radtag.neuralnet import TOPOLOGIES, attention_head, grad_check, load_checkpoint, score
from radtag.neuralnet.gradcheck import toy_problem
from radtag.pipeline import (ExperimentConfig, GoldLabeler, annotate_dataset, encode, read_labeled_sentences,
                             run_experiment)
from radtag.preprocess import RawReport, preprocess_report
from radtag.preprocess.core import normalize_text
from radtag.taxonomy import TREE_FILES, CountMismatch, StudyTimeline, load_tree, resolve_report_labels, resolve_unchanged

from conftest import REFERENCE_SENTENCE_LABELS, REFERENCE_TEXT
from oracles import brute_metrics, random_instance
from test_locextract import RULE_FIXTURES
from test_taxonomy import FINDINGS, SENTENCE_SETS


@pytest.fixture
def criterion(capsys):
    """Context manager printing one pass/fail line for a criterion."""

    @contextmanager
    def run(number, title):
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nFAIL criterion {number}: {title}")
            raise
        with capsys.disabled():
            print(f"\nPASS criterion {number}: {title}")

    return run


def test_criterion_1_gradient_correctness(criterion):
    with criterion(1, "reverse-mode gradients match central differences"):
        start = time.perf_counter()
        for topology in TOPOLOGIES:
            model, sequences, targets = toy_problem(topology)
            assert model.config.label_count == 8 and model.config.embed_dim == 10
            assert max(len(s) for s in sequences) <= 12
            result = grad_check(model, sequences, targets, eps=1e-5)
            assert result.checked == model.num_parameters()
            assert result.max_rel_error < 1e-4, (topology, result)
        assert time.perf_counter() - start < 60.0


def test_criterion_2_metric_oracle(criterion):
    with criterion(2, "evaluate() equals brute-force confusion counts"):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            truth, pred, labels = random_instance(rng)
            report = evaluate(truth, pred, labels)
            exact = brute_metrics(truth, pred, labels)
            for name in ("accuracy", "micro_f1", "macro_f1", "weighted_f1"):
                assert abs(getattr(report, name) - float(exact[name])) < 1e-12, name


def test_criterion_3_attention_normalization(criterion):
    with criterion(3, "attention rows sum to one"):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            n, d, k = (int(v) for v in rng.integers(1, 20, size=3))
            scale = 10.0 ** rng.uniform(-2, 2)
            H = rng.normal(scale=scale, size=(n, d))
            U = rng.normal(scale=scale, size=(k, d))
            B = rng.normal(size=(k, d))
            alpha, probs = attention_head(H, U, B, rng.normal(size=k))
            assert alpha.shape == (k, n)
            assert np.all(np.abs(alpha.sum(axis=1) - 1.0) <= 1e-9)
            assert np.all(np.isfinite(probs))


@pytest.mark.slow
def test_criterion_4_synthetic_end_to_end(criterion, tmp_path, capsys):
    with criterion(4, "RNN-ATT fits the synthetic corpus"):
        cfg = ExperimentConfig(out_dir=str(tmp_path), seed=0, label_count=30, sentence_count=500,
                               topologies="rnn-att", batch_size=32, max_epochs=150, embed_subsample=1e-2)
        start = time.perf_counter()
        result = run_experiment(cfg)
        elapsed = time.perf_counter() - start
        model, _ = load_checkpoint(tmp_path / "best.ckpt")
        embeddings = load_embeddings(tmp_path / "embeddings.bin")
        items = read_labeled_sentences(tmp_path / "sentences.csv")
        assert len(items) == 500 and len(model.labels) == 30
        train_set = encode([s for s in items if s.split == "train"], list(model.labels), embeddings)
        val_set = encode([s for s in items if s.split == "val"], list(model.labels), embeddings)
        train_f1 = score(model, train_set).micro_f1
        val_f1 = score(model, val_set).micro_f1
        with capsys.disabled():
            print(f"\n  train MicroF1 {train_f1:.4f}, validation MicroF1 {val_f1:.4f}, "
                  f"best epoch {result.curves['rnn-att']['best_epoch']}, {elapsed:.0f} s")
        assert train_f1 >= 0.99
        assert val_f1 >= 0.90
        assert len(result.curves["rnn-att"]["epoch"]) <= 150
        assert elapsed < 600.0


def test_criterion_5_taxonomy_integrity(criterion):
    with criterion(5, "shipped trees are consistent"):
        with warnings.catch_warnings():
            warnings.simplefilter("error", CountMismatch)
            trees = {kind: load_tree(path, kind) for kind, path in TREE_FILES.items()}
        assert len(trees) == 3
        assert all(t.mismatches == [] for t in trees.values())
        node = trees["findings"].occurrences("granuloma")[0]
        assert node.own_count == 481
        assert [c.cumulative_count for c in node.children] == [2165]
        assert node.cumulative_count == 2646
        cuis = [n.cui for t in trees.values() for n in t.nodes() if n.cui]
        assert cuis
        assert all(re.fullmatch(r"C[0-9]{7}", c) for c in cuis)


def test_criterion_6_location_rules(criterion, rules):
    with criterion(6, "every location rule fires"):
        assert len(RULE_FIXTURES) == len(rules)
        for rule, sentence in zip(rules, RULE_FIXTURES):
            assert rule.pattern.search(sentence), sentence
            assert rule.concept in extract_locations(sentence, rules), sentence
        found = extract_locations("pinzamient sen costofren derech", rules)
        assert found == ["right costophrenic angle"]


def test_criterion_7_reference_report(criterion, pre_cfg):
    with criterion(7, "reference report is reproduced"):
        oracle = SpanishStemmer()
        words = "cambios pulmonares cronicos severos signos fibrosis bibasal".split()
        expected = "cambi pulmonar cronic sever sign fibrosis bibasal".split()
        assert [oracle.stem(w) for w in words] == expected
        assert [oracle.stem(w) for w in normalize_text("Cambios pulmonares crónicos severos").split()] == \
            expected[:4]

        report = RawReport("4991845", text=REFERENCE_TEXT)
        sentences = preprocess_report(report, pre_cfg)
        joined = " ".join(" ".join(s.tokens) + " ." for s in sentences)
        assert joined.startswith("cambi pulmonar cronic sever . sign fibrosis bibasal .")

        gold = {("4991845", i): labels for i, labels in enumerate(REFERENCE_SENTENCE_LABELS)}
        (row,) = annotate_dataset([report], GoldLabeler(gold), pre_cfg)
        assert row.Report.startswith("cambi pulmonar cronic sever . sign fibrosis bibasal .")
        assert set(row.Labels) == {"pulmonary fibrosis", "chronic changes", "kyphosis", "pseudonodule",
                                   "ground glass pattern"}
        by_sentence = Counter(tuple(seq) for seq in row.LabelsLocalizationsBySentence)
        assert by_sentence == Counter([
            ("pulmonary fibrosis", "loc basal bilateral"),
            ("chronic changes",),
            ("pseudonodule", "ground glass pattern", "loc basal"),
            ("kyphosis",),
        ])
        assert sorted(row.LabelCUIS) == sorted(["C0034069", "C0742362", "C2115817", "C3544344"])
        assert row.LocalizationsCUIS == ["C1282378"]


def _synth_outputs(out_dir):
    assert main(["synth", "--out-dir", str(out_dir), "--seed", "5", "--label-count", "6",
                 "--sentence-count", "80"]) == 0
    with (out_dir / "reports.csv").open(encoding="utf-8") as fh:
        reports = list(csv.DictReader(fh))
    with (out_dir / "raw.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["report_id", "patient_id", "study_date", "text"])
        writer.writerow(["r0", "p0", "2020-01-01", REFERENCE_TEXT])
    assert reports
    assert main(["preprocess", "--input", str(out_dir / "raw.csv"), "--out", str(out_dir / "clean.csv")]) == 0
    assert main(["embed", "train", "--input", str(out_dir / "sentences.csv"), "--out", str(out_dir / "emb.bin"),
                 "--dim", "8", "--epochs", "2", "--min-count", "1", "--seed", "3"]) == 0


def test_criterion_8_determinism(criterion, tmp_path, capsys):
    with criterion(8, "seeded reruns are byte-identical"):
        for name in ("a", "b"):
            out = tmp_path / name
            out.mkdir()
            _synth_outputs(out)
            cfg = ExperimentConfig(out_dir=str(out / "exp"), seed=4, label_count=5, sentence_count=60,
                                   embed_dim=8, embed_epochs=2, embed_min_count=1, embed_subsample=1e-2,
                                   batch_size=16, max_epochs=3, max_len=20, conv1_filters=4, conv2_filters=4,
                                   lstm_hidden=4, lstm_layers=1)
            run_experiment(cfg)
        paths = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
        assert {"best.ckpt", "results.csv", "sentences.csv"} <= {p.name for p in paths}
        for rel in paths:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), str(rel)


@given(SENTENCE_SETS)
def _resolution_property(sentences):
    out = resolve_report_labels(sentences)
    if "normal" in out:
        assert not set(out) & set(FINDINGS)
    if "exclude" in out:
        assert out == ["exclude"]


@given(st.lists(st.lists(st.sampled_from(FINDINGS + ["unchanged"]), max_size=3), min_size=1, max_size=5))
def _unchanged_property(studies):
    timeline = StudyTimeline("p", [(f"2020-01-{i + 1:02d}", s) for i, s in enumerate(studies)])
    resolved = [labels for _, labels in resolve_unchanged(timeline).studies]
    for i, (own, out) in enumerate(zip(studies, resolved)):
        assert "unchanged" not in out
        rest = set(own) - {"unchanged"}
        if "unchanged" in own:
            prior = set(resolved[i - 1]) if i else set()
            assert set(out) == rest | prior
        else:
            assert set(out) == rest


def test_criterion_9_resolution_rules(criterion):
    with criterion(9, "resolution rules hold"):
        _resolution_property()
        _unchanged_property()
