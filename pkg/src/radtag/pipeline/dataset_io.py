"""Reading and writing the labeled-dataset CSV (non-image columns).

List columns use bracketed single-quoted lists, e.g.
``['pulmonary fibrosis', 'chronic changes']``, nested one level for the
by-sentence column. The reader also accepts the comma-less numpy style
``['C0034069' 'C0742362']``.
"""

import csv
from dataclasses import dataclass, field

from ..errors import SchemaError

FIELDS = [
    "ImageID", "ImageDir", "StudyID", "PatientID", "PatientBirth", "Projection", "Pediatric",
    "MethodProjection", "ReportID", "Report", "MethodLabel", "Labels", "Localizations",
    "LabelsLocalizationsBySentence", "LabelCUIS", "LocalizationsCUIS",
]
LIST_FIELDS = ("Labels", "Localizations", "LabelCUIS", "LocalizationsCUIS")
NESTED_FIELDS = ("LabelsLocalizationsBySentence",)
METHOD_LABELS = ("Physician", "RNN_model")
LOC_PREFIX = "loc "


@dataclass
class DatasetRow:
    ImageID: str = ""
    ImageDir: str = ""
    StudyID: str = ""
    PatientID: str = ""
    PatientBirth: str = ""
    Projection: str = ""
    Pediatric: str = ""
    MethodProjection: str = ""
    ReportID: str = ""
    Report: str = ""
    MethodLabel: str = "Physician"
    Labels: list = field(default_factory=list)
    Localizations: list = field(default_factory=list)
    LabelsLocalizationsBySentence: list = field(default_factory=list)
    LabelCUIS: list = field(default_factory=list)
    LocalizationsCUIS: list = field(default_factory=list)

    def validate(self):
        if self.MethodLabel not in METHOD_LABELS:
            raise SchemaError("MethodLabel", f"MethodLabel must be one of {METHOD_LABELS}, got {self.MethodLabel!r}")
        for name in LIST_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
                raise SchemaError(name, f"{name} must be a list of strings")
        for seq in self.LabelsLocalizationsBySentence:
            if not isinstance(seq, list) or not all(isinstance(x, str) for x in seq):
                raise SchemaError("LabelsLocalizationsBySentence", "expected a list of string lists")
        bad = [x for x in self.Localizations if not x.startswith(LOC_PREFIX)]
        if bad:
            raise SchemaError("Localizations", f"entries must start with {LOC_PREFIX!r}: {bad}")
        return self


def _quote(s):
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_list(items):
    """``['a', 'b']``; nested lists are formatted recursively."""
    return "[" + ", ".join(format_list(x) if isinstance(x, list) else _quote(x) for x in items) + "]"


def parse_list(text, column="list"):
    """Inverse of :func:`format_list`; separators between items are optional."""
    text = text.strip()
    pos = 0

    def fail(msg):
        raise SchemaError(column, f"{column}: {msg} in {text!r}")

    def skip():
        nonlocal pos
        while pos < len(text) and text[pos] in " \t\n\r,":
            pos += 1

    def parse_string():
        nonlocal pos
        quote = text[pos]
        pos += 1
        out = []
        while pos < len(text):
            c = text[pos]
            if c == "\\" and pos + 1 < len(text):
                out.append(text[pos + 1])
                pos += 2
                continue
            if c == quote:
                pos += 1
                return "".join(out)
            out.append(c)
            pos += 1
        fail("unterminated string")

    def parse_seq():
        nonlocal pos
        if pos >= len(text) or text[pos] != "[":
            fail("expected '['")
        pos += 1
        items = []
        while True:
            skip()
            if pos >= len(text):
                fail("unterminated list")
            c = text[pos]
            if c == "]":
                pos += 1
                return items
            if c == "[":
                items.append(parse_seq())
            elif c in "'\"":
                items.append(parse_string())
            else:
                fail(f"unexpected character {c!r}")

    if not text:
        return []
    result = parse_seq()
    skip()
    if pos != len(text):
        fail("trailing characters")
    return result


def row_to_record(row):
    out = {}
    for name in FIELDS:
        value = getattr(row, name)
        out[name] = format_list(value) if name in LIST_FIELDS + NESTED_FIELDS else str(value)
    return out


def record_to_row(record):
    values = {}
    for name in FIELDS:
        raw = record.get(name)
        if raw is None:
            raise SchemaError(name, f"missing column {name}")
        values[name] = parse_list(raw, name) if name in LIST_FIELDS + NESTED_FIELDS else raw
    for name in NESTED_FIELDS:
        if not all(isinstance(x, list) for x in values[name]):
            raise SchemaError(name, f"{name} must be a list of lists")
    return DatasetRow(**values).validate()


def _check_header(header, path):
    if header is None:
        raise SchemaError(FIELDS[0], f"{path}: empty file")
    missing = [f for f in FIELDS if f not in header]
    if missing:
        raise SchemaError(missing[0], f"{path}: missing column {missing[0]}")
    extra = [h for h in header if h not in FIELDS]
    if extra:
        raise SchemaError(extra[0], f"{path}: unexpected column {extra[0]}")
    if list(header) != FIELDS:
        raise SchemaError(header[0], f"{path}: columns out of order")


def read_dataset(path):
    """Yield :class:`DatasetRow` objects; the header must equal ``FIELDS``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        _check_header(reader.fieldnames, path)
        for record in reader:
            yield record_to_row(record)


def write_dataset(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
        writer.writeheader()
        count = 0
        for row in rows:
            writer.writerow(row_to_record(row.validate()))
            count += 1
    return count
