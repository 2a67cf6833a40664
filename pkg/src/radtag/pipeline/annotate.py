"""Report-level annotation: sentence labels, resolution rules, locations
and CUIs assembled into dataset rows."""

import numpy as np

from ..errors import LabelSpaceMismatch, SectionNotFound
from ..locextract import LOC_PREFIX, attach_locations, default_rules
from ..neuralnet.train import decide
from ..preprocess import PreprocessConfig, preprocess_report
from ..taxonomy import default_trees, map_labels_to_cuis, resolve_report_labels
from .dataset_io import DatasetRow


class GoldLabeler:
    """Looks sentence labels up by ``(report_id, sentence index)``;
    sentences without an entry get no labels."""

    method = "Physician"

    def __init__(self, gold):
        self.gold = {(str(r), int(i)): list(v) for (r, i), v in gold.items()}

    def __call__(self, sentences):
        return [self.gold.get((s.report_id, s.index), []) for s in sentences]


class ModelLabeler:
    """Embeds each sentence and thresholds the classifier's probabilities
    (argmax fallback when nothing clears the threshold)."""

    method = "RNN_model"

    def __init__(self, model, embeddings, threshold=0.5):
        self.model = model
        self.embeddings = embeddings
        self.threshold = threshold

    def __call__(self, sentences):
        if not sentences:
            return []
        seqs = [self.embeddings.embed_sentence(s.tokens) for s in sentences]
        probs = self.model.predict_proba(seqs)
        picks = decide(probs, self.threshold)
        return [[self.model.labels[j] for j in np.flatnonzero(row)] for row in picks]


def check_label_space(labels, trees=None):
    trees = trees or default_trees()
    missing = [x for x in labels if not any(x in t for k, t in trees.items() if k != "locations")]
    if missing:
        raise LabelSpaceMismatch(f"labels not in the taxonomy: {missing[:5]}")


def report_text(sentences):
    """The stemmed report string: sentences joined with ``" . "``."""
    return "".join(" ".join(s.tokens) + " . " for s in sentences).strip()


def annotate_report(report, labeler, cfg=None, trees=None, rules=None, method_label=None, extra=None):
    """Build one :class:`DatasetRow` for ``report``.

    Report labels follow the resolution rules over sentence labels. The
    by-sentence column keeps, per sentence, the labels that survive
    resolution followed by that sentence's locations; sentences left with
    no label are omitted. A report without a usable section yields
    ``Labels == ['exclude']``.
    """
    cfg = cfg or PreprocessConfig.default()
    trees = trees or default_trees()
    rules = rules if rules is not None else default_rules()
    row = DatasetRow(ReportID=str(report.report_id), PatientID=report.patient_id,
                     StudyID=report.study_date,
                     MethodLabel=method_label or getattr(labeler, "method", "RNN_model"),
                     **(extra or {}))
    try:
        sentences = preprocess_report(report, cfg)
    except SectionNotFound:
        sentences = []
    per_sentence = labeler(sentences) if sentences else []
    if not any(per_sentence):
        row.Labels = ["exclude"]
        row.LabelsLocalizationsBySentence = [["exclude"]]
        row.Report = report_text(sentences)
        row.LabelCUIS = map_labels_to_cuis(row.Labels, [trees["findings"], trees["diagnoses"]])
        return row
    labels = resolve_report_labels([x for x in per_sentence if x])
    kept = set(labels)
    by_sentence = []
    locations = []
    for sent, sent_labels in zip(sentences, per_sentence):
        seq = attach_locations([x for x in sent_labels if x in kept], " ".join(sent.tokens), rules)
        if seq:
            by_sentence.append(seq)
            for x in seq:
                if x.startswith(LOC_PREFIX) and x not in locations:
                    locations.append(x)
    row.Report = report_text(sentences)
    row.Labels = labels
    row.Localizations = locations
    row.LabelsLocalizationsBySentence = by_sentence
    row.LabelCUIS = map_labels_to_cuis(labels, [trees["findings"], trees["diagnoses"]])
    row.LocalizationsCUIS = map_labels_to_cuis([x[len(LOC_PREFIX):] for x in locations], [trees["locations"]])
    return row


def annotate_dataset(reports, labeler, cfg=None, trees=None, rules=None, model_labels=None):
    """Stream one row per report. ``model_labels``, when given, is checked
    against the taxonomy before any report is processed."""
    trees = trees or default_trees()
    if model_labels is not None:
        check_label_space(model_labels, trees)
    rules = rules if rules is not None else default_rules()
    cfg = cfg or PreprocessConfig.default()
    for report in reports:
        yield annotate_report(report, labeler, cfg, trees, rules)
