import csv
import re
import statistics
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

from ..config import read_flat_config
from ..errors import ConfigError, EmptyCorpus, SchemaError, SectionNotFound
from .stemmer import stem as snowball_stem

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

STOPWORD_EXCEPTIONS = frozenset({"sin", "no", "ni", "con"})
STEMMERS = {"snowball-spanish": snowball_stem, "none": lambda w: w}

_NOT_KEPT = re.compile(r"[^a-z0-9. ]+")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class RawReport:
    report_id: str
    patient_id: str = ""
    study_date: str = ""
    text: str = ""


@dataclass(frozen=True)
class CleanSentence:
    report_id: str
    index: int
    tokens: tuple
    raw: str


@dataclass(frozen=True)
class PreprocessConfig:
    section_regexes: tuple
    stopword_list: frozenset
    stopword_exceptions: frozenset = STOPWORD_EXCEPTIONS
    stemmer: str = "snowball-spanish"

    def __post_init__(self):
        if self.stemmer not in STEMMERS:
            raise ConfigError(f"unknown stemmer {self.stemmer!r}")

    @property
    def removed_words(self):
        return self.stopword_list - self.stopword_exceptions

    @classmethod
    def default(cls):
        return load_config(DATA_DIR / "preprocess.cfg")


@dataclass
class CorpusStats:
    sentence_count: int
    word_count: int
    vocab_before: int
    vocab_after: int
    mean_tokens: float
    median_tokens: float
    sentence_frequencies: list = field(repr=False)
    pareto: list = field(repr=False)

    @property
    def unique_sentences(self):
        return len(self.sentence_frequencies)

    def coverage(self, k):
        """Occurrences covered by the ``k`` most repeated unique sentences."""
        if k <= 0:
            return 0
        return self.pareto[min(k, len(self.pareto)) - 1]


def normalize_text(text):
    """Lowercase, fold accents to ASCII and keep only ``[a-z0-9. ]``.

    >>> normalize_text("Cambios Crónicos Severos.")
    'cambios cronicos severos.'
    """
    text = unicodedata.normalize("NFD", text.lower())
    text = "".join(c for c in text if not unicodedata.combining(c))
    text = _WS.sub(" ", text)
    text = _NOT_KEPT.sub("", text)
    return _WS.sub(" ", text).strip()


def _compile_section(pattern):
    return re.compile(pattern, re.IGNORECASE | re.DOTALL)


def extract_radiography_section(report, cfg):
    """Return the radiography description of ``report``.

    Patterns are tried in order; the first one that matches with a
    non-blank body wins. Raises :class:`SectionNotFound` otherwise.
    """
    if not cfg.section_regexes:
        raise ConfigError("no section patterns configured")
    text = report.text or ""
    for pattern in cfg.section_regexes:
        rx = pattern if hasattr(pattern, "search") else _compile_section(pattern)
        m = rx.search(text)
        if m is None:
            continue
        if "section" in rx.groupindex:
            body = m.group("section")
        elif rx.groups:
            body = m.group(1)
        else:
            body = m.group(0)
        if body and body.strip():
            return body.strip()
    raise SectionNotFound(f"report {report.report_id}: no radiography section")


def split_sentences(text):
    return [s.strip() for s in text.split(".") if s.strip()]


def tokenize_filter_stem(sentence, cfg):
    stemmer = STEMMERS[cfg.stemmer]
    removed = cfg.removed_words
    return [stemmer(tok) for tok in sentence.split() if tok not in removed]


def preprocess_report(report, cfg):
    section = extract_radiography_section(report, cfg)
    out = []
    for raw in split_sentences(normalize_text(section)):
        tokens = tokenize_filter_stem(raw, cfg)
        if tokens:
            out.append(CleanSentence(report.report_id, len(out), tuple(tokens), raw))
    return out


def corpus_stats(corpus):
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("corpus has no sentences")
    lengths = [len(s.tokens) for s in corpus]
    before = set()
    after = set()
    freq = Counter()
    for s in corpus:
        before.update(s.raw.split())
        after.update(s.tokens)
        freq[tuple(s.tokens)] += 1
    table = sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))
    pareto = []
    total = 0
    for _, count in table:
        total += count
        pareto.append(total)
    return CorpusStats(
        sentence_count=len(corpus),
        word_count=sum(lengths),
        vocab_before=len(before),
        vocab_after=len(after),
        mean_tokens=sum(lengths) / len(lengths),
        median_tokens=statistics.median(lengths),
        sentence_frequencies=table,
        pareto=pareto,
    )


@lru_cache(maxsize=None)
def _read_word_file(path):
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(normalize_text(line))
    words.discard("")
    return frozenset(words)


def _read_patterns(path):
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            out.append(line.strip())
    return tuple(out)


def load_config(path):
    """Load a flat ``key = value`` preprocessing config.

    Keys: ``stopwords``, ``section_patterns`` (paths, relative to the config
    file) and ``stemmer``. Stopwords are accent-folded on load so they match
    normalized tokens.
    """
    path = Path(path)
    raw = read_flat_config(path)
    unknown = set(raw) - {"stopwords", "section_patterns", "stemmer", "stopword_exceptions"}
    if unknown:
        raise ConfigError(f"unknown preprocess keys: {sorted(unknown)}")
    base = path.parent
    try:
        stop = _read_word_file(str(base / raw.get("stopwords", "spanish_stopwords.txt")))
        patterns = _read_patterns(base / raw.get("section_patterns", "section_patterns.txt"))
    except OSError as exc:
        raise ConfigError(str(exc)) from None
    exceptions = STOPWORD_EXCEPTIONS
    if "stopword_exceptions" in raw:
        exceptions = frozenset(w for w in raw["stopword_exceptions"].replace(",", " ").split())
    return PreprocessConfig(
        section_regexes=tuple(_compile_section(p) for p in patterns),
        stopword_list=stop,
        stopword_exceptions=exceptions,
        stemmer=raw.get("stemmer", "snowball-spanish"),
    )


REPORT_COLUMNS = ("report_id", "patient_id", "study_date", "text")
SENTENCE_COLUMNS = ("report_id", "index", "tokens", "raw")


def read_reports(path):
    """Read a report corpus: CSV with ``REPORT_COLUMNS``, or plain text with
    one report per non-blank line (ids assigned by line number)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        if path.suffix.lower() != ".csv":
            return [RawReport(str(i), "", "", line.rstrip("\n"))
                    for i, line in enumerate(fh) if line.strip()]
        reader = csv.DictReader(fh)
        missing = [c for c in REPORT_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(missing[0])
        return [RawReport(r["report_id"], r["patient_id"], r["study_date"], r["text"])
                for r in reader]


def write_clean_sentences(sentences, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SENTENCE_COLUMNS)
        for s in sentences:
            w.writerow([s.report_id, s.index, " ".join(s.tokens), s.raw])


def read_clean_sentences(path):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SENTENCE_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise SchemaError(missing[0])
        return [CleanSentence(r["report_id"], int(r["index"]), tuple(r["tokens"].split()), r["raw"])
                for r in reader]
