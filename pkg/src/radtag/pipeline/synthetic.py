"""Seeded synthetic sentence corpus built from a small Spanish grammar whose
phrases are keyed to taxonomy labels, plus the template-inversion labeler
that recovers gold labels from preprocessed tokens."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfig, SpecTooSmall
from ..preprocess import PreprocessConfig, normalize_text, tokenize_filter_stem

# label -> surface phrases; every phrase must stem to a sequence that no
# other label uses
ENTITY_PHRASES = {
    "cardiomegaly": ["cardiomegalia", "aumento del índice cardiotorácico"],
    "pleural effusion": ["derrame pleural"],
    "atelectasis": ["atelectasia"],
    "laminar atelectasis": ["atelectasia laminar"],
    "pneumonia": ["neumonía", "foco neumónico"],
    "consolidation": ["consolidación"],
    "infiltrates": ["infiltrados", "infiltrado"],
    "nodule": ["nódulo"],
    "multiple nodules": ["múltiples nódulos"],
    "pseudonodule": ["pseudonódulo"],
    "calcified granuloma": ["granuloma calcificado"],
    "aortic elongation": ["elongación aórtica"],
    "aortic atheromatosis": ["ateromatosis aórtica"],
    "aortic button enlargement": ["botón aórtico prominente"],
    "scoliosis": ["escoliosis"],
    "kyphosis": ["cifosis"],
    "chronic changes": ["cambios pulmonares crónicos"],
    "COPD signs": ["signos de epoc"],
    "emphysema": ["enfisema"],
    "pulmonary fibrosis": ["fibrosis pulmonar"],
    "interstitial pattern": ["patrón intersticial"],
    "ground glass pattern": ["patrón en vidrio deslustrado"],
    "alveolar pattern": ["patrón alveolar"],
    "hilar enlargement": ["aumento hiliar"],
    "pacemaker": ["marcapasos"],
    "sternotomy": ["esternotomía"],
    "hiatal hernia": ["hernia de hiato"],
    "pneumothorax": ["neumotórax"],
    "bronchiectasis": ["bronquiectasias"],
    "costophrenic angle blunting": ["pinzamiento del seno costofrénico"],
    "hemidiaphragm elevation": ["elevación del hemidiafragma"],
    "osteopenia": ["osteopenia"],
    "pulmonary edema": ["edema pulmonar"],
    "heart insufficiency": ["insuficiencia cardiaca"],
    "tuberculosis sequelae": ["secuelas de tuberculosis"],
    "air trapping": ["atrapamiento aéreo"],
    "central venous catheter": ["catéter venoso central"],
    "NSG tube": ["sonda nasogástrica"],
    "fibrotic band": ["tracto fibroso"],
    "volume loss": ["pérdida de volumen"],
}

SPECIAL_PHRASES = {
    "normal": ["sin alteraciones significativas", "silueta cardiaca normal",
               "no se observan hallazgos patológicos"],
    "unchanged": ["sin cambios respecto a estudio previo", "estable respecto al control previo"],
    "suboptimal study": ["estudio subóptimo por inspiración insuficiente"],
    "exclude": ["proyección no valorable"],
}

NEGATIONS = ["sin {}", "no se observa {}", "no hay {}"]
NEGATION_CUES = ("sin", "no")
OPENERS = ["", "se observa ", "se aprecia ", "presenta "]
LOCATION_PHRASES = [
    "en base derecha", "en base izquierda", "en ambas bases", "en región hiliar",
    "en lóbulo superior derecho", "en lóbulo inferior izquierdo", "en campo pulmonar medio",
    "en vértice derecho", "en región paratraqueal derecha", "en lóbulo medio",
]


def candidate_labels():
    """Label order used when a spec asks for ``label_count`` labels."""
    return ["normal", "unchanged"] + list(ENTITY_PHRASES) + ["suboptimal study", "exclude"]


@dataclass
class SyntheticSpec:
    seed: int = 0
    label_count: int = 30
    sentence_count: int = 500
    noise_rate: float = 0.0
    location_rate: float = 0.5
    extra_label_rate: float = 0.5
    max_entities: int = 3
    test_fraction: float = 0.1
    val_fraction: float = 0.1

    def __post_init__(self):
        if not 1 <= self.label_count <= len(candidate_labels()):
            raise InvalidConfig(f"label_count must lie in [1, {len(candidate_labels())}]")
        if self.sentence_count < 10 * self.label_count:
            raise SpecTooSmall(f"need at least {10 * self.label_count} sentences for {self.label_count} labels")
        for name in ("noise_rate", "location_rate", "extra_label_rate", "test_fraction", "val_fraction"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise InvalidConfig(f"{name} must lie in [0, 1)")
        if not 1 <= self.max_entities <= 8:
            raise InvalidConfig("max_entities must lie in [1, 8]")


@dataclass
class SyntheticSentence:
    sentence_id: str
    text: str
    tokens: tuple
    labels: list


@dataclass
class SyntheticCorpus:
    spec: SyntheticSpec
    labels: list
    sentences: list
    splits: dict = field(default_factory=dict)

    def subset(self, split):
        return [self.sentences[i] for i in self.splits[split]]


class TemplateInverter:
    """Recovers labels from stemmed tokens by greedy longest phrase match.

    A sentence opening with a negation cue and containing only entity
    phrases is labeled "normal"; special phrases keep their own label.
    """

    def __init__(self, labels=None, cfg=None):
        cfg = cfg or PreprocessConfig.default()
        allowed = set(labels) if labels is not None else None
        table = {}
        for label, phrases in list(ENTITY_PHRASES.items()) + list(SPECIAL_PHRASES.items()):
            for phrase in phrases:
                key = tuple(tokenize_filter_stem(normalize_text(phrase), cfg))
                if key in table and table[key] != label:
                    raise ValueError(f"phrase {phrase!r} collides with label {table[key]!r}")
                table[key] = label
        self.table = table
        self.allowed = allowed
        self.max_len = max(len(k) for k in table)

    def __call__(self, tokens):
        tokens = tuple(tokens)
        found = []
        i = 0
        while i < len(tokens):
            for n in range(min(self.max_len, len(tokens) - i), 0, -1):
                label = self.table.get(tokens[i:i + n])
                if label is not None:
                    found.append(label)
                    i += n
                    break
            else:
                i += 1
        negated = bool(tokens) and tokens[0] in NEGATION_CUES
        special = [x for x in found if x in SPECIAL_PHRASES]
        if negated and not special:
            found = ["normal"]
        out = list(dict.fromkeys(found))
        if self.allowed is not None:
            out = [x for x in out if x in self.allowed]
        return out


def _sentence(primary, labels, rng, spec):
    """Surface text and gold labels for one sentence led by ``primary``."""
    entities = [x for x in labels if x in ENTITY_PHRASES]
    pick = lambda pool: pool[int(rng.integers(len(pool)))]
    if primary in ("normal", "suboptimal study", "exclude") or (primary == "unchanged" and not entities):
        if primary == "normal" and entities and rng.random() < 0.6:
            return pick(NEGATIONS).format(pick(ENTITY_PHRASES[pick(entities)])), ["normal"]
        return pick(SPECIAL_PHRASES[primary]), [primary]
    if primary == "unchanged":
        chosen = [pick(entities)]
    else:
        chosen = [primary]
    if rng.random() < spec.extra_label_rate and len(entities) > 1:
        extra = int(rng.integers(1, spec.max_entities))
        for _ in range(extra):
            cand = pick(entities)
            if cand not in chosen:
                chosen.append(cand)
    words = [pick(ENTITY_PHRASES[x]) for x in chosen]
    body = words[0] if len(words) == 1 else ", ".join(words[:-1]) + " y " + words[-1]
    text = pick(OPENERS) + body
    if rng.random() < spec.location_rate:
        text += " " + pick(LOCATION_PHRASES)
    gold = list(chosen)
    if "unchanged" in labels and (primary == "unchanged" or rng.random() < 0.1):
        text += " " + pick(SPECIAL_PHRASES["unchanged"])
        gold.append("unchanged")
    return text, gold


def split_indices(n, test_fraction, val_fraction, rng):
    """Held-out test slice first, then the remainder split train/validation."""
    order = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    test, rest = order[:n_test], order[n_test:]
    n_val = max(1, int(round(len(rest) * val_fraction))) if val_fraction > 0 else 0
    val, train = rest[:n_val], rest[n_val:]
    return {"train": sorted(train.tolist()), "val": sorted(val.tolist()), "test": sorted(test.tolist())}


def generate_synthetic_corpus(spec=None, cfg=None):
    """Deterministic corpus for ``spec``: primary labels are assigned round
    robin so every label leads at least ``sentence_count // label_count``
    sentences. With ``noise_rate`` > 0 a fraction of gold sets has one label
    swapped for a random other label while the text stays unchanged."""
    spec = spec or SyntheticSpec()
    cfg = cfg or PreprocessConfig.default()
    rng = np.random.default_rng(spec.seed)
    labels = candidate_labels()[:spec.label_count]
    if not any(x in ENTITY_PHRASES for x in labels) and "unchanged" in labels:
        labels = [x for x in labels if x != "unchanged"]
    sentences = []
    for i in range(spec.sentence_count):
        primary = labels[i % len(labels)]
        text, gold = _sentence(primary, labels, rng, spec)
        text = text[0].upper() + text[1:]
        if spec.noise_rate and rng.random() < spec.noise_rate and len(labels) > 1:
            j = int(rng.integers(len(gold)))
            others = [x for x in labels if x not in gold]
            if others:
                gold[j] = others[int(rng.integers(len(others)))]
        tokens = tuple(tokenize_filter_stem(normalize_text(text), cfg))
        sentences.append(SyntheticSentence(f"s{i:05d}", text + ".", tokens, gold))
    splits = split_indices(len(sentences), spec.test_fraction, spec.val_fraction, rng)
    return SyntheticCorpus(spec, labels, sentences, splits)


def synthetic_reports(corpus, per_report=4, seed=0):
    """Group sentences into report texts with a radiography header.

    Returns ``(reports, gold)`` where ``gold`` maps ``(report_id, index)``
    to the sentence's gold labels.
    """
    from ..preprocess import RawReport

    rng = np.random.default_rng(seed)
    order = rng.permutation(len(corpus.sentences))
    reports, gold = [], {}
    for r, start in enumerate(range(0, len(order), per_report)):
        chunk = [corpus.sentences[i] for i in order[start:start + per_report]]
        rid = f"r{r:05d}"
        reports.append(RawReport(rid, patient_id=f"p{r // 3:05d}", study_date=f"2015-01-{r % 28 + 1:02d}",
                                 text="Rx de tórax: " + " ".join(s.text for s in chunk)))
        for idx, s in enumerate(x for x in chunk if x.tokens):
            gold[(rid, idx)] = list(s.labels)
    return reports, gold
