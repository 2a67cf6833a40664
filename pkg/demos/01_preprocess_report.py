"""
From a raw Spanish report to stemmed sentences
==============================================

A chest x-ray report arrives as free text with a header. This walk-through
isolates the radiography section, folds accents, splits sentences and
stems every remaining token.
"""

from radtag.preprocess import (PreprocessConfig, RawReport, extract_radiography_section, normalize_text,
                               preprocess_report, split_sentences)
from radtag.preprocess.stemmer import stem

cfg = PreprocessConfig.default()
report = RawReport(
    "4991845",
    text="Rx de tórax: Cambios pulmonares crónicos severos. Signos de fibrosis bibasal. "
         "Sutiles infiltrados y pseudonódulos milimétricos en vidrio deslustrado localizados "
         "en bases. Cifosis severa.",
)

# The header "Rx de tórax:" is stripped by the section patterns.
section = extract_radiography_section(report, cfg)
print(section)

# Accents are folded and everything outside [a-z0-9. ] is dropped.
folded = normalize_text(section)
print(folded)
print(split_sentences(folded))

# Stemming is the Snowball Spanish algorithm.
for word in ["pulmonares", "crónicos", "pseudonódulos", "localizados"]:
    print(f"{word:>15} -> {stem(word)}")

# Stop words are removed except the negation-bearing ones (sin, no, ni, con).
for sentence in preprocess_report(report, cfg):
    print(sentence.index, " ".join(sentence.tokens))
