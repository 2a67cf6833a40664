"""Dataset I/O, synthetic corpora, annotation and experiment orchestration."""

from .annotate import GoldLabeler, ModelLabeler, annotate_dataset, annotate_report, check_label_space
from .dataset_io import FIELDS, DatasetRow, format_list, parse_list, read_dataset, write_dataset
from .experiment import (ExperimentConfig, ExperimentResult, LabeledSentence, encode, load_corpus,
                         read_labeled_sentences, run_experiment, synthetic_sentences, write_labeled_sentences)
from .synthetic import (SyntheticCorpus, SyntheticSentence, SyntheticSpec, TemplateInverter, candidate_labels,
                        generate_synthetic_corpus, split_indices, synthetic_reports)

__all__ = [
    "FIELDS", "DatasetRow", "format_list", "parse_list", "read_dataset", "write_dataset",
    "GoldLabeler", "ModelLabeler", "annotate_dataset", "annotate_report", "check_label_space",
    "ExperimentConfig", "ExperimentResult", "LabeledSentence", "encode", "load_corpus",
    "read_labeled_sentences", "write_labeled_sentences", "run_experiment", "synthetic_sentences",
    "SyntheticSpec", "SyntheticCorpus", "SyntheticSentence", "TemplateInverter", "candidate_labels",
    "generate_synthetic_corpus", "split_indices", "synthetic_reports",
]
