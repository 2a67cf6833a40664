"""Command-line entry point ``radtag``.

Exit codes: 0 on success, 2 on schema errors in input files, 3 on
configuration errors, 1 on any other handled failure.
"""

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ConfigError, RadtagError, SchemaError

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_CONFIG = 0, 1, 2, 3


def _out(args):
    return open(args.out, "w", newline="", encoding="utf-8") if getattr(args, "out", None) else sys.stdout


# preprocess -------------------------------------------------------------
def cmd_preprocess(args):
    from .preprocess import (PreprocessConfig, corpus_stats, load_config, preprocess_report, read_reports,
                             write_clean_sentences)
    from .errors import SectionNotFound

    cfg = load_config(args.config) if args.config else PreprocessConfig.default()
    sentences, skipped = [], 0
    for report in read_reports(args.input):
        try:
            sentences.extend(preprocess_report(report, cfg))
        except SectionNotFound:
            skipped += 1
    write_clean_sentences(sentences, args.out)
    if args.stats:
        s = corpus_stats(sentences)
        print(f"sentences {s.sentence_count}\nunique {s.unique_sentences}\nwords {s.word_count}\n"
              f"vocab_before {s.vocab_before}\nvocab_after {s.vocab_after}\n"
              f"mean_tokens {s.mean_tokens:.4f}\nmedian_tokens {s.median_tokens}\nskipped_reports {skipped}")
    return EXIT_OK


# taxonomy ---------------------------------------------------------------
def _trees(args):
    from .taxonomy import default_trees, load_tree

    trees = default_trees()
    for path in args.tree or []:
        t = load_tree(path)
        trees[t.kind] = t
    return trees


def cmd_taxonomy(args):
    from .taxonomy import ancestors_of, label_space, load_tree, map_labels_to_cuis

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        trees = _trees(args)
    if args.action == "check":
        if args.labels:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                trees = {Path(f).stem: load_tree(f) for f in args.labels}
        total = 0
        for kind, tree in trees.items():
            print(f"{kind}: {len(tree.labels())} labels, {len(tree.mismatches)} count mismatches")
            for msg in tree.mismatches:
                print("  " + msg)
            total += len(tree.mismatches)
        return EXIT_OK if total == 0 else EXIT_FAIL
    if args.action == "labels":
        for label in label_space(trees):
            print(label)
        return EXIT_OK
    if args.action == "ancestors":
        from .errors import UnknownLabel

        for label in args.labels:
            owners = [(k, t) for k, t in trees.items() if label in t]
            if not owners:
                raise UnknownLabel(label)
            for kind, tree in owners:
                for path in ancestors_of(tree, label):
                    print(f"{kind}: " + " > ".join(path))
        return EXIT_OK
    if args.action == "cui":
        order = [trees[k] for k in ("findings", "diagnoses", "locations") if k in trees]
        for label in args.labels:
            cuis = map_labels_to_cuis([label], order)
            print(f"{label}\t{cuis[0] if cuis else ''}")
        return EXIT_OK
    raise ConfigError(f"unknown taxonomy action {args.action!r}")


# locextract -------------------------------------------------------------
def cmd_locextract(args):
    from .locextract import compile_rules, default_rules, extract_csv, extract_locations

    rules = compile_rules(args.rules) if args.rules else default_rules()
    if args.sentence is not None:
        for concept in extract_locations(args.sentence, rules):
            print(concept)
        return EXIT_OK
    if not args.input:
        raise ConfigError("give --sentence or --input")
    fh = _out(args)
    try:
        extract_csv(args.input, rules, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# embeddings and topics ----------------------------------------------------
def _token_corpus(path):
    from .preprocess import read_clean_sentences
    from .pipeline import read_labeled_sentences

    with open(path, newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), [])
    if "sentence_id" in header:
        return [(s.sentence_id, list(s.tokens)) for s in read_labeled_sentences(path)]
    return [(f"{s.report_id}:{s.index}", list(s.tokens)) for s in read_clean_sentences(path)]


def _flat_dataclass(cls, path, **overrides):
    from .config import coerce_fields, read_flat_config

    kwargs = coerce_fields(cls, read_flat_config(path)) if path else {}
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**kwargs)


def cmd_embed(args):
    from .embeddings import (EmbeddingTrainConfig, export_vec, load_embeddings, save_embeddings,
                             train_subword_embeddings)

    if args.action == "train":
        cfg = _flat_dataclass(EmbeddingTrainConfig, args.config, epochs=args.epochs, min_count=args.min_count,
                              subsample_threshold=args.subsample, dim=args.dim)
        corpus = [tokens for _, tokens in _token_corpus(args.input)]
        model = train_subword_embeddings(corpus, cfg, seed=args.seed)
        save_embeddings(model, args.out)
        if args.vec:
            export_vec(model, args.vec)
        print(f"vocabulary {len(model.words)}, n-gram rows {len(model.bucket_ids)}, dim {model.dim}")
        return EXIT_OK
    model = load_embeddings(args.model)
    for token in args.tokens:
        vec = model.embed(token)
        if args.similar:
            sims = ", ".join(f"{w} {s:.3f}" for w, s in model.most_similar(token, args.similar))
            print(f"{token}\t{sims}")
        else:
            print(token + " " + " ".join(f"{v:.6g}" for v in vec))
    return EXIT_OK


def cmd_topics(args):
    from .embeddings import (DocVectorConfig, kmeans_cluster, load_topics, save_topics, topic_summary,
                             train_doc_vectors)

    if args.action == "fit":
        docs = _token_corpus(args.input)
        cfg = _flat_dataclass(DocVectorConfig, args.config, epochs=args.epochs, min_count=args.min_count)
        dv = train_doc_vectors({d: t for d, t in docs}, seed=args.seed, cfg=cfg)
        topics = kmeans_cluster(dv.vectors, args.k, seed=args.seed, doc_ids=dv.doc_ids)
        summary = topic_summary(topics, [t for _, t in docs], top_n=args.top)
        save_topics(topics, args.out, summary)
        _print_topics(topics, summary)
        return EXIT_OK
    topics, summary = load_topics(args.topics)
    if summary is None:
        raise ConfigError(f"{args.topics}: no stored term summary")
    _print_topics(topics, summary, args.top)
    return EXIT_OK


def _print_topics(topics, summary, top=None):
    for i, terms in enumerate(summary):
        size = int(np.sum(topics.labels == i))
        print(f"topic {i:2d} ({size} docs): " + " ".join(t for t, _ in terms[:top]))


# neural models -------------------------------------------------------------
def _model_trainer_configs(path, topology, seed, label_count, embed_dim=None):
    from dataclasses import fields

    from .config import coerce_fields, read_flat_config
    from .neuralnet import ModelConfig, TrainerConfig

    raw = read_flat_config(path) if path else {}
    model_keys = {f.name for f in fields(ModelConfig)}
    trainer_keys = {f.name for f in fields(TrainerConfig)}
    unknown = set(raw) - model_keys - trainer_keys
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    mk = coerce_fields(ModelConfig, {k: v for k, v in raw.items() if k in model_keys})
    tk = coerce_fields(TrainerConfig, {k: v for k, v in raw.items() if k in trainer_keys})
    if topology:
        mk["topology"] = topology
    mk["label_count"] = label_count
    # the input width follows the embeddings unless the config pins it
    if embed_dim is not None:
        mk.setdefault("embed_dim", embed_dim)
    if seed is not None:
        tk["seed"] = seed
    return ModelConfig(**mk), TrainerConfig(**tk)


def _labeled_data(args):
    from .embeddings import load_embeddings
    from .pipeline import read_labeled_sentences

    items = read_labeled_sentences(args.data)
    embeddings = load_embeddings(args.embeddings)
    return items, embeddings


def _label_order(items):
    from .taxonomy import label_space

    present = {x for s in items for x in s.labels}
    ordered = [x for x in label_space() if x in present]
    return ordered + sorted(present - set(ordered))


def cmd_train(args):
    from .neuralnet import build_model, save_checkpoint, train
    from .pipeline import encode, split_indices
    from .pipeline.experiment import write_curves

    items, embeddings = _labeled_data(args)
    labels = _label_order(items)
    model_cfg, trainer_cfg = _model_trainer_configs(args.config, args.topology, args.seed, len(labels),
                                                     embeddings.dim)
    if not all(s.split in ("train", "val", "test") for s in items):
        splits = split_indices(len(items), 0.1, 0.1, np.random.default_rng(trainer_cfg.seed))
        for name, idx in splits.items():
            for i in idx:
                items[i].split = name
    train_set = encode([s for s in items if s.split == "train"], labels, embeddings)
    val_set = encode([s for s in items if s.split == "val"], labels, embeddings)
    model = build_model(model_cfg, seed=trainer_cfg.seed, labels=labels)
    log = None
    if args.verbose:
        def log(epoch, c):
            print(f"epoch {epoch} loss {c['train_loss'][-1]:.4f} val_micro_f1 {c['val_micro_f1'][-1]:.4f}")
    best, curves = train(model, train_set, val_set, trainer_cfg, log=log)
    save_checkpoint(best, args.out, {"topology": model_cfg.topology, "epoch": curves["best_epoch"],
                                     "best_val_micro_f1": curves["best_score"], "seed": trainer_cfg.seed,
                                     "threshold": trainer_cfg.threshold})
    if args.curves:
        write_curves(curves, args.curves)
    print(f"best epoch {curves['best_epoch']} validation MicroF1 {curves['best_score']:.6f}")
    return EXIT_OK


def cmd_eval(args):
    from .neuralnet import load_checkpoint, score
    from .pipeline import encode

    model, meta = load_checkpoint(args.checkpoint)
    items, embeddings = _labeled_data(args)
    if args.split != "all":
        items = [s for s in items if s.split == args.split]
    data = encode(items, model.labels, embeddings)
    report = score(model, data, args.threshold if args.threshold is not None else meta.get("threshold", 0.5))
    print(report.format())
    return EXIT_OK


def cmd_gradcheck(args):
    from .neuralnet import TOPOLOGIES, grad_check
    from .neuralnet.gradcheck import toy_problem

    topologies = TOPOLOGIES if args.topology == "all" else [args.topology]
    worst = 0.0
    for t in topologies:
        model, seqs, targets = toy_problem(t, seed=args.seed)
        r = grad_check(model, seqs, targets, eps=args.eps, l2=args.l2)
        worst = max(worst, r.max_rel_error)
        print(f"{t}\tparameters {model.num_parameters()}\tmax relative error {r.max_rel_error:.3e}"
              f"\t({r.worst_parameter}{list(r.worst_index)})")
    return EXIT_OK if worst < args.tol else EXIT_FAIL


def cmd_cv(args):
    from .neuralnet import EncodedSet, cross_validate
    from .pipeline import encode

    items, embeddings = _labeled_data(args)
    labels = _label_order(items)
    model_cfg, trainer_cfg = _model_trainer_configs(args.config, args.topology, args.seed, len(labels),
                                                     embeddings.dim)
    data = encode(items, labels, embeddings)
    res = cross_validate(data, model_cfg, trainer_cfg, k=args.k, epochs=args.epochs)
    fh = _out(args)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "val_mean", "val_std", "train_mean", "train_std"])
        for i, e in enumerate(res["epoch"]):
            w.writerow([int(e)] + [f"{res[k][i]:.6f}" for k in ("val_mean", "val_std", "train_mean", "train_std")])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


# pipeline ------------------------------------------------------------------
def cmd_annotate(args):
    from .embeddings import load_embeddings
    from .neuralnet import load_checkpoint
    from .pipeline import ModelLabeler, annotate_dataset, write_dataset
    from .preprocess import read_reports

    model, meta = load_checkpoint(args.checkpoint)
    embeddings = load_embeddings(args.embeddings)
    threshold = args.threshold if args.threshold is not None else meta.get("threshold", 0.5)
    labeler = ModelLabeler(model, embeddings, threshold)
    rows = annotate_dataset(read_reports(args.reports), labeler, model_labels=model.labels)
    n = write_dataset(rows, args.out)
    print(f"annotated {n} reports")
    return EXIT_OK


def cmd_experiment(args):
    from .pipeline import ExperimentConfig, run_experiment

    cfg = (ExperimentConfig.from_file(args.config, seed=args.seed, out_dir=args.out_dir) if args.config
           else ExperimentConfig(**{k: v for k, v in (("seed", args.seed), ("out_dir", args.out_dir)) if v is not None}))
    log = None
    if args.verbose:
        def log(t, epoch, c):
            print(f"{t} epoch {epoch} loss {c['train_loss'][-1]:.4f} val_micro_f1 {c['val_micro_f1'][-1]:.4f}")
    result = run_experiment(cfg, log)
    print((Path(cfg.out_dir) / "results.csv").read_text(encoding="utf-8"), end="")
    print(f"best topology: {result.best_topology}")
    return EXIT_OK


def cmd_synth(args):
    from .pipeline import (SyntheticSpec, generate_synthetic_corpus, synthetic_reports, synthetic_sentences,
                           write_labeled_sentences)

    spec = SyntheticSpec(seed=args.seed, label_count=args.label_count, sentence_count=args.sentence_count,
                         noise_rate=args.noise_rate)
    corpus = generate_synthetic_corpus(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_labeled_sentences(synthetic_sentences(corpus), out / "sentences.csv")
    reports, gold = synthetic_reports(corpus, seed=args.seed)
    with open(out / "reports.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["report_id", "patient_id", "study_date", "text"])
        for r in reports:
            w.writerow([r.report_id, r.patient_id, r.study_date, r.text])
    with open(out / "gold_sentences.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["report_id", "index", "labels"])
        for (rid, idx), labels in gold.items():
            w.writerow([rid, idx, ";".join(labels)])
    print(f"{len(corpus.sentences)} sentences, {len(reports)} reports, {len(corpus.labels)} labels")
    return EXIT_OK


def cmd_metrics(args):
    from .metrics import evaluate_csv

    print(evaluate_csv(args.truth, args.pred).format())
    return EXIT_OK


def cmd_resolve_unchanged(args):
    from .pipeline import read_dataset, write_dataset
    from .taxonomy import StudyTimeline, resolve_unchanged

    rows = list(read_dataset(args.input))
    by_patient = {}
    for i, row in enumerate(rows):
        by_patient.setdefault(row.PatientID, []).append(i)
    for patient, idx in by_patient.items():
        idx.sort(key=lambda i: (rows[i].StudyID, i))
        timeline = resolve_unchanged(StudyTimeline(patient, [(rows[i].StudyID, rows[i].Labels) for i in idx]))
        for i, (_, labels) in zip(idx, timeline.studies):
            rows[i].Labels = labels
    write_dataset(rows, args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="radtag", description="Chest x-ray report labeling toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("preprocess", help="normalize, split and stem reports")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--config")
    s.add_argument("--stats", action="store_true")
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("taxonomy", help="inspect the label hierarchies")
    s.add_argument("action", choices=["check", "labels", "ancestors", "cui"])
    s.add_argument("labels", nargs="*", help="labels, or tree files for 'check'")
    s.add_argument("--tree", action="append", help="replace a shipped tree (kind taken from the file stem)")
    s.set_defaults(func=cmd_taxonomy)

    s = sub.add_parser("locextract", help="anatomical locations in stemmed sentences")
    s.add_argument("--input")
    s.add_argument("--sentence")
    s.add_argument("--rules")
    s.add_argument("--out")
    s.set_defaults(func=cmd_locextract)

    s = sub.add_parser("embed", help="subword word embeddings")
    s.add_argument("action", choices=["train", "query"])
    s.add_argument("tokens", nargs="*")
    s.add_argument("--input")
    s.add_argument("--out")
    s.add_argument("--vec")
    s.add_argument("--model")
    s.add_argument("--config")
    s.add_argument("--epochs", type=int)
    s.add_argument("--min-count", type=int)
    s.add_argument("--subsample", type=float)
    s.add_argument("--dim", type=int)
    s.add_argument("--similar", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("topics", help="document-vector k-means topics")
    s.add_argument("action", choices=["fit", "show"])
    s.add_argument("--input")
    s.add_argument("--out", default="topics.json")
    s.add_argument("--topics", default="topics.json")
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--config")
    s.add_argument("--epochs", type=int)
    s.add_argument("--min-count", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_topics)

    def data_args(s):
        s.add_argument("--data", required=True, help="labeled sentences CSV")
        s.add_argument("--embeddings", required=True, help="embedding model file")

    s = sub.add_parser("train", help="train one classifier")
    s.add_argument("--topology", choices=["cnn", "rnn", "cnn-att", "rnn-att"])
    s.add_argument("--config")
    data_args(s)
    s.add_argument("--out", required=True)
    s.add_argument("--curves")
    s.add_argument("--seed", type=int)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score a checkpoint on labeled sentences")
    s.add_argument("--checkpoint", required=True)
    data_args(s)
    s.add_argument("--split", default="all", choices=["all", "train", "val", "test"])
    s.add_argument("--threshold", type=float)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", help="finite-difference gradient check at toy size")
    s.add_argument("--topology", default="all", choices=["all", "cnn", "rnn", "cnn-att", "rnn-att"])
    s.add_argument("--eps", type=float, default=1e-5)
    s.add_argument("--l2", type=float, default=0.0)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("cv", help="k-fold cross-validation curves")
    s.add_argument("--k", type=int, default=11)
    s.add_argument("--epochs", type=int, default=150)
    s.add_argument("--topology", choices=["cnn", "rnn", "cnn-att", "rnn-att"])
    s.add_argument("--config")
    data_args(s)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_cv)

    s = sub.add_parser("annotate", help="label reports with a trained classifier")
    s.add_argument("--reports", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--embeddings", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threshold", type=float)
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("experiment", help="train and compare topologies end to end")
    s.add_argument("--config")
    s.add_argument("--out-dir")
    s.add_argument("--seed", type=int)
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--label-count", type=int, default=30)
    s.add_argument("--sentence-count", type=int, default=500)
    s.add_argument("--noise-rate", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("metrics", help="multi-label metrics from two label CSVs")
    s.add_argument("--truth", required=True)
    s.add_argument("--pred", required=True)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("resolve-unchanged", help="substitute 'unchanged' with prior-study labels")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_resolve_unchanged)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RadtagError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
