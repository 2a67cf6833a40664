"""Multi-axial label hierarchies and report-level label resolution.

Tree files hold one node per line. Depth is the number of leading tabs and
a node reads ``label [CUI:C0000000, counts:own, cumulative]`` where the
bracket, the CUI and each count are optional. A label may occur under
several parents; every occurrence is a separate :class:`ConceptNode`.
"""

import logging
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError, UnknownLabel

log = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / "data"
TREE_FILES = {
    "findings": DATA_DIR / "findings.tree",
    "diagnoses": DATA_DIR / "diagnoses.tree",
    "locations": DATA_DIR / "locations.tree",
}

NORMAL = "normal"
EXCLUDE = "exclude"
SUBOPTIMAL = "suboptimal study"
UNCHANGED = "unchanged"
SPECIAL_LABELS = (NORMAL, EXCLUDE, SUBOPTIMAL, UNCHANGED)
# labels that are not radiographic findings or diagnoses
NON_FINDINGS = frozenset({NORMAL, EXCLUDE, SUBOPTIMAL})

CUI_RE = re.compile(r"^C[0-9]{7}$")
_NODE_RE = re.compile(r"^(?P<label>[^\[\]]+?)\s*(?:\[(?P<attrs>[^\[\]]*)\])?\s*$")


def normalize_label(label):
    return " ".join(label.lower().split())


class CountMismatch(UserWarning):
    """A node's cumulative count differs from own + children."""


@dataclass(eq=False)
class ConceptNode:
    label: str
    cui: str = None
    own_count: int = None
    cumulative_count: int = None
    children: list = field(default_factory=list)
    parent: "ConceptNode" = field(default=None, repr=False)
    lineno: int = 0

    @property
    def key(self):
        return normalize_label(self.label)

    @property
    def depth(self):
        d = 0
        node = self.parent
        while node is not None:
            d += 1
            node = node.parent
        return d

    def path(self):
        out = []
        node = self
        while node is not None:
            out.append(node.label)
            node = node.parent
        return out[::-1]

    def walk(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass
class TaxonomyTree:
    kind: str
    roots: list
    mismatches: list = field(default_factory=list)

    def __post_init__(self):
        self._index = {}
        for node in self.nodes():
            self._index.setdefault(node.key, []).append(node)

    def nodes(self):
        for root in self.roots:
            yield from root.walk()

    def __contains__(self, label):
        return normalize_label(label) in self._index

    def occurrences(self, label):
        try:
            return list(self._index[normalize_label(label)])
        except KeyError:
            raise UnknownLabel(f"{label!r} not in {self.kind} tree") from None

    def canonical(self, label):
        return self.occurrences(label)[0].label

    def labels(self):
        """Distinct labels in file order (canonical spelling)."""
        return [nodes[0].label for nodes in self._index.values()]

    def cui(self, label):
        """First CUI defined for ``label`` in file order, or None."""
        for node in self.occurrences(label):
            if node.cui:
                return node.cui
        return None

    @property
    def special_labels(self):
        out = {}
        for name in SPECIAL_LABELS:
            if name in self:
                node = self.occurrences(name)[0]
                out[name] = node.own_count
        return out


def _parse_attrs(attrs, lineno):
    cui = None
    counts = []
    if not attrs or not attrs.strip():
        return cui, counts
    parts = [p.strip() for p in attrs.split(",")]
    i = 0
    while i < len(parts):
        part = parts[i]
        if part.startswith("CUI:"):
            cui = part[4:].strip()
            if not CUI_RE.match(cui):
                raise ParseError(lineno, f"malformed CUI {cui!r}")
        elif part.startswith("counts:"):
            counts.append(part[7:].strip())
            # the cumulative count follows as a bare comma-separated field
            while i + 1 < len(parts) and ":" not in parts[i + 1]:
                i += 1
                counts.append(parts[i])
        elif part:
            raise ParseError(lineno, f"unexpected attribute {part!r}")
        i += 1
    if len(counts) > 2:
        raise ParseError(lineno, "at most two counts allowed")
    try:
        counts = [int(c) for c in counts]
    except ValueError:
        raise ParseError(lineno, f"non-integer count in {attrs!r}") from None
    if any(c < 0 for c in counts):
        raise ParseError(lineno, "negative count")
    return cui, counts


def check_counts(roots):
    """Return ``(node, stated, expected)`` for every count-identity failure.

    Only nodes stating both counts are checked; children without counts
    contribute zero.
    """
    bad = []
    for root in roots:
        for node in root.walk():
            if node.own_count is None or node.cumulative_count is None:
                continue
            expected = node.own_count + sum(
                c.cumulative_count if c.cumulative_count is not None else (c.own_count or 0)
                for c in node.children
            )
            if expected != node.cumulative_count:
                bad.append((node, node.cumulative_count, expected))
    return bad


def parse_tree(text, kind="findings"):
    """Parse a tree file's text into a :class:`TaxonomyTree`.

    Count-identity failures are reported through :class:`CountMismatch`
    warnings and recorded on ``tree.mismatches``; they do not abort loading.
    """
    roots = []
    stack = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        depth = len(line) - len(line.lstrip("\t"))
        body = line[depth:]
        if body[:1].isspace():
            raise ParseError(lineno, "indentation must use tabs only")
        m = _NODE_RE.match(body)
        if m is None:
            raise ParseError(lineno, f"cannot parse node {body!r}")
        cui, counts = _parse_attrs(m.group("attrs"), lineno)
        node = ConceptNode(
            label=" ".join(m.group("label").split()),
            cui=cui,
            own_count=counts[0] if counts else None,
            cumulative_count=counts[1] if len(counts) > 1 else None,
            lineno=lineno,
        )
        if depth > len(stack):
            raise ParseError(lineno, f"indentation jumps to depth {depth}")
        del stack[depth:]
        if stack:
            node.parent = stack[-1]
            stack[-1].children.append(node)
        else:
            roots.append(node)
        stack.append(node)
    tree = TaxonomyTree(kind, roots)
    for node, stated, expected in check_counts(roots):
        msg = (f"{kind} line {node.lineno}: {node.label!r} cumulative {stated} "
               f"!= own + children {expected}")
        tree.mismatches.append(msg)
        warnings.warn(msg, CountMismatch, stacklevel=2)
    return tree


def load_tree(path, kind=None):
    path = Path(path)
    return parse_tree(path.read_text(encoding="utf-8"), kind or path.stem)


_DEFAULT = {}


def default_trees():
    """The three shipped trees keyed by kind (cached)."""
    if not _DEFAULT:
        for kind, path in TREE_FILES.items():
            _DEFAULT[kind] = load_tree(path, kind)
    return dict(_DEFAULT)


def label_space(trees=None):
    """Classifier label space: every findings label (special labels and the
    "radiological finding" root included) then the diagnoses below their root."""
    trees = trees or default_trees()
    out = []
    seen = set()
    for kind in ("findings", "diagnoses"):
        for label in trees[kind].labels():
            key = normalize_label(label)
            if key == "differential diagnosis" or key in seen:
                continue
            seen.add(key)
            out.append(label)
    return out


def ancestors_of(tree, label):
    """Root-to-node label paths, one per occurrence of ``label``."""
    return [node.path() for node in tree.occurrences(label)]


def expand_to_level(labels, tree, depth):
    """Replace each label by its ancestor(s) at ``depth`` (roots are depth 0)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    out = set()
    for label in labels:
        for path in ancestors_of(tree, label):
            out.add(path[min(depth, len(path) - 1)])
    return out


def is_finding(label):
    return normalize_label(label) not in NON_FINDINGS


def resolve_report_labels(per_sentence):
    """Merge sentence label sets into one report label list.

    Union in first-occurrence order; "normal" is kept only when no finding
    or diagnosis is present, and "exclude" only when it is the sole label.
    """
    per_sentence = list(per_sentence)
    if not per_sentence:
        raise ValueError("need at least one sentence label set")
    union = []
    seen = set()
    for labels in per_sentence:
        for label in labels:
            key = normalize_label(label)
            if key not in seen:
                seen.add(key)
                union.append(label)
    keys = [normalize_label(x) for x in union]
    if any(is_finding(k) for k in keys):
        union = [x for x, k in zip(union, keys) if k != NORMAL]
        keys = [k for k in keys if k != NORMAL]
    if len(union) > 1:
        union = [x for x, k in zip(union, keys) if k != EXCLUDE]
    return union


@dataclass
class StudyTimeline:
    patient_id: str
    studies: list  # [(study_date, labels), ...] ascending by date

    def __post_init__(self):
        dates = [d for d, _ in self.studies]
        if any(a > b for a, b in zip(dates, dates[1:])):
            raise ValueError("study dates must be non-decreasing")


def resolve_unchanged(timeline):
    """Substitute "unchanged" with the previous study's findings/diagnoses.

    The first study has no predecessor, so its "unchanged" is dropped.
    Studies whose labels do not include "unchanged" pass through.
    """
    out = []
    prior = None
    for date, labels in timeline.studies:
        labels = list(labels)
        keys = [normalize_label(x) for x in labels]
        if UNCHANGED in keys:
            rest = [x for x, k in zip(labels, keys) if k != UNCHANGED]
            inherited = [x for x in (prior or []) if is_finding(x)]
            merged = []
            seen = set()
            for x in inherited + rest:
                if normalize_label(x) not in seen:
                    seen.add(normalize_label(x))
                    merged.append(x)
            labels = resolve_report_labels([merged]) if merged else []
        out.append((date, labels))
        prior = labels
    return StudyTimeline(timeline.patient_id, out)


def map_labels_to_cuis(labels, trees):
    """CUIs for ``labels`` in order, skipping labels without one.

    ``trees`` is searched in order; a label missing from all of them raises
    :class:`UnknownLabel`. Duplicate CUIs keep their first position.
    """
    if isinstance(trees, dict):
        trees = list(trees.values())
    out = []
    for label in labels:
        owner = next((t for t in trees if label in t), None)
        if owner is None:
            raise UnknownLabel(f"{label!r} not found in any taxonomy")
        cui = owner.cui(label)
        if cui and cui not in out:
            out.append(cui)
    return out
