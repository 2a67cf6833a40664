"""Report text normalization, sentence splitting, stemming and corpus statistics."""

from .core import (
    CleanSentence,
    CorpusStats,
    PreprocessConfig,
    RawReport,
    corpus_stats,
    extract_radiography_section,
    load_config,
    normalize_text,
    preprocess_report,
    read_clean_sentences,
    read_reports,
    split_sentences,
    tokenize_filter_stem,
    write_clean_sentences,
)
from .stemmer import stem

__all__ = [
    "CleanSentence",
    "CorpusStats",
    "PreprocessConfig",
    "RawReport",
    "corpus_stats",
    "extract_radiography_section",
    "load_config",
    "normalize_text",
    "preprocess_report",
    "read_clean_sentences",
    "read_reports",
    "split_sentences",
    "stem",
    "tokenize_filter_stem",
    "write_clean_sentences",
]
