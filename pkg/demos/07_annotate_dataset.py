"""
Building the labeled dataset rows
=================================

Annotation stitches everything together: each report is preprocessed,
every sentence is labeled (here from gold annotations, in production by a
trained model), locations are attached, report-level rules are applied and
labels are mapped to concept identifiers.
"""

import tempfile
from pathlib import Path

from radtag.pipeline import GoldLabeler, annotate_dataset, write_dataset
from radtag.preprocess import RawReport

report = RawReport(
    "4991845",
    text="Rx de tórax: Cambios pulmonares crónicos severos. Signos de fibrosis bibasal. "
         "Sutiles infiltrados y pseudonódulos milimétricos en vidrio deslustrado localizados "
         "en bases. Cifosis severa.",
)
gold = {
    ("4991845", 0): ["chronic changes"],
    ("4991845", 1): ["pulmonary fibrosis"],
    ("4991845", 2): ["pseudonodule", "ground glass pattern"],
    ("4991845", 3): ["kyphosis"],
}

rows = list(annotate_dataset([report], GoldLabeler(gold)))
row = rows[0]
print(row.Report)
print(row.Labels)
print(row.LabelsLocalizationsBySentence)
print(row.LabelCUIS, row.LocalizationsCUIS)

# An empty report is kept in the dataset but flagged for exclusion.
print(next(iter(annotate_dataset([RawReport("empty", text="")], GoldLabeler({})))).Labels)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "dataset.csv"
    write_dataset(rows, path)
    print(path.read_text(encoding="utf-8").splitlines()[0])
