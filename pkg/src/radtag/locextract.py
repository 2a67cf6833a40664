"""Regex extraction of anatomical locations from stemmed sentences."""

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import BadPattern, UnknownConcept
from .taxonomy import default_trees

RULES_FILE = Path(__file__).resolve().parent / "data" / "location_rules.tsv"
LOC_PREFIX = "loc "


@dataclass(frozen=True)
class LocationRule:
    pattern: re.Pattern
    concept: str
    rank: int


@dataclass(frozen=True)
class LocationMatch:
    concept: str
    span: tuple
    rule_rank: int


def compile_rules(table, locations=None):
    """Compile ``(pattern, concept)`` rows; ``table`` is a path or an iterable
    of rows. Concepts are checked against the locations tree."""
    if isinstance(table, (str, Path)):
        rows = []
        for line in Path(table).read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                rows.append(None)
                continue
            if "\t" not in line:
                rows.append((line, ""))
                continue
            pat, concept = line.rsplit("\t", 1)
            rows.append((pat, concept.strip()))
    else:
        rows = list(table)
    if locations is None:
        locations = default_trees()["locations"]
    rules = []
    for row_no, row in enumerate(rows, 1):
        if row is None:
            continue
        pat, concept = row
        try:
            rx = re.compile(pat)
        except re.error as exc:
            raise BadPattern(row_no, str(exc)) from None
        if concept not in locations:
            raise UnknownConcept(row_no, concept)
        rules.append(LocationRule(rx, locations.canonical(concept), len(rules)))
    return rules


_DEFAULT_RULES = []


def default_rules():
    if not _DEFAULT_RULES:
        _DEFAULT_RULES.extend(compile_rules(RULES_FILE))
    return list(_DEFAULT_RULES)


def _contains(outer, inner):
    return outer[0] <= inner[0] and inner[1] <= outer[1]


def find_matches(sentence, rules):
    """Surviving matches after span-containment suppression.

    A match is dropped when another match's span strictly contains it, or
    when an earlier-ranked rule matched the identical span.
    """
    if not isinstance(sentence, str):
        sentence = " ".join(sentence)
    sentence = sentence.rstrip()
    found = []
    for rule in rules:
        for m in rule.pattern.finditer(sentence):
            if m.end() > m.start():
                found.append(LocationMatch(rule.concept, (m.start(), m.end()), rule.rank))
    kept = []
    for a in found:
        dominated = False
        for b in found:
            if b is a or not _contains(b.span, a.span):
                continue
            if b.span != a.span or b.rule_rank < a.rule_rank:
                dominated = True
                break
        if not dominated:
            kept.append(a)
    kept.sort(key=lambda m: (m.span[0], m.rule_rank))
    return kept


def extract_locations(sentence, rules):
    """Location concepts in ``sentence``, ordered by match start, deduplicated."""
    out = []
    for m in find_matches(sentence, rules):
        if m.concept not in out:
            out.append(m.concept)
    return out


def attach_locations(labels, sentence, rules):
    """Per-sentence sequence: the sentence's labels followed by its
    locations, each prefixed with ``"loc "``."""
    labels = list(labels)
    if not labels:
        return []
    return labels + [LOC_PREFIX + c for c in extract_locations(sentence, rules)]


def extract_csv(sentences_csv, rules, out_fh):
    """Write ``report_id,index,locations`` rows (locations ``;``-joined)."""
    w = csv.writer(out_fh, lineterminator="\n")
    w.writerow(["report_id", "index", "locations"])
    with Path(sentences_csv).open(newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            w.writerow([row["report_id"], row["index"],
                        ";".join(extract_locations(row["tokens"], rules))])
