"""
Walking the label hierarchy
===========================

Findings, differential diagnoses and anatomical locations live in three
tab-indented trees. A label may sit under several parents, so ancestry is a
set of paths rather than a single chain.
"""

from radtag.taxonomy import (StudyTimeline, ancestors_of, default_trees, expand_to_level, label_space,
                             map_labels_to_cuis, resolve_report_labels, resolve_unchanged)

trees = default_trees()
print({kind: len(list(tree.nodes())) for kind, tree in trees.items()})
print("classifier label space:", len(label_space(trees)))

# Own and cumulative counts are stored per node; parents add up their subtree.
node = trees["findings"].occurrences("granuloma")[0]
print("granuloma:", node.own_count, "+", [c.cumulative_count for c in node.children], "=", node.cumulative_count)

# "calcified granuloma" is both a calcified density and a granuloma.
for path in ancestors_of(trees["findings"], "calcified granuloma"):
    print(" > ".join(path))
print(expand_to_level({"calcified granuloma"}, trees["findings"], 1))

# Concept identifiers come straight from the trees.
print(map_labels_to_cuis(["pulmonary fibrosis", "kyphosis"], trees))

# Report-level rules: "normal" yields to any finding, "exclude" survives only alone.
print(resolve_report_labels([["normal"], ["cardiomegaly"]]))
print(resolve_report_labels([["exclude"], ["exclude"]]))

# "unchanged" is replaced by what the previous study of the same patient showed.
timeline = StudyTimeline("patient-1", [("2016-03-01", ["pleural effusion"]), ("2016-09-12", ["unchanged"])])
print(resolve_unchanged(timeline).studies)
