"""Multi-label evaluation: exact-match accuracy, macro, micro and weighted F1.

Every ratio with a zero denominator is taken as 0. Macro F1 is the
harmonic mean of macro precision and macro recall, not the mean of
per-label F1 scores.
"""

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import EmptyLabelSpace, LengthMismatch, SchemaError

FIELDS = ("accuracy", "macro_p", "macro_r", "macro_f1",
          "micro_p", "micro_r", "micro_f1", "weighted_f1")


@dataclass
class ConfusionCounts:
    labels: list
    tp: dict
    fp: dict
    fn: dict

    def support(self, label):
        return self.tp[label] + self.fn[label]


@dataclass
class MetricsReport:
    accuracy: float
    macro_p: float
    macro_r: float
    macro_f1: float
    micro_p: float
    micro_r: float
    micro_f1: float
    weighted_f1: float

    def as_dict(self):
        return asdict(self)

    def format(self):
        return "\n".join(f"{name:<12} {getattr(self, name):.6f}" for name in FIELDS)


def _ratio(num, den):
    return num / den if den else 0.0


def _harmonic(a, b):
    return 2 * a * b / (a + b) if a + b else 0.0


def confusion_counts(truth, pred, labels):
    truth = [set(t) for t in truth]
    pred = [set(p) for p in pred]
    if len(truth) != len(pred):
        raise LengthMismatch(f"{len(truth)} truth vs {len(pred)} predicted samples")
    labels = list(dict.fromkeys(labels))
    tp = dict.fromkeys(labels, 0)
    fp = dict.fromkeys(labels, 0)
    fn = dict.fromkeys(labels, 0)
    for t, p in zip(truth, pred):
        for label in t & p:
            if label in tp:
                tp[label] += 1
        for label in p - t:
            if label in fp:
                fp[label] += 1
        for label in t - p:
            if label in fn:
                fn[label] += 1
    return ConfusionCounts(labels, tp, fp, fn)


def evaluate(truth, pred, labels):
    truth = [frozenset(t) for t in truth]
    pred = [frozenset(p) for p in pred]
    labels = list(dict.fromkeys(labels))
    if not labels:
        raise EmptyLabelSpace("label space is empty")
    cc = confusion_counts(truth, pred, labels)
    n = len(labels)

    accuracy = _ratio(sum(t == p for t, p in zip(truth, pred)), len(truth))
    macro_r = sum(_ratio(cc.tp[x], cc.tp[x] + cc.fn[x]) for x in labels) / n
    macro_p = sum(_ratio(cc.tp[x], cc.tp[x] + cc.fp[x]) for x in labels) / n
    tp = sum(cc.tp.values())
    micro_r = _ratio(tp, tp + sum(cc.fn.values()))
    micro_p = _ratio(tp, tp + sum(cc.fp.values()))

    total_support = sum(cc.support(x) for x in labels)
    weighted = 0.0
    for x in labels:
        f1 = _harmonic(_ratio(cc.tp[x], cc.tp[x] + cc.fp[x]),
                       _ratio(cc.tp[x], cc.tp[x] + cc.fn[x]))
        weighted += f1 * cc.support(x)
    weighted = _ratio(weighted, total_support)

    return MetricsReport(
        accuracy=accuracy,
        macro_p=macro_p,
        macro_r=macro_r,
        macro_f1=_harmonic(macro_r, macro_p),
        micro_p=micro_p,
        micro_r=micro_r,
        micro_f1=_harmonic(micro_r, micro_p),
        weighted_f1=weighted,
    )


def read_label_csv(path):
    """``{sample_id: [labels]}`` from a two-column ``id,labels`` CSV with
    semicolon-joined labels."""
    out = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise SchemaError("labels", f"{path}: expected id,labels header")
        for row in reader:
            if not row:
                continue
            out[row[0]] = [x for x in row[1].split(";") if x] if len(row) > 1 else []
    return out


def evaluate_csv(truth_path, pred_path, labels=None):
    truth = read_label_csv(truth_path)
    pred = read_label_csv(pred_path)
    if set(truth) != set(pred):
        raise LengthMismatch("truth and prediction files cover different sample ids")
    ids = list(truth)
    if labels is None:
        labels = sorted({x for v in truth.values() for x in v} | {x for v in pred.values() for x in v})
    return evaluate([truth[i] for i in ids], [pred[i] for i in ids], labels)
