"""
Multi-label metrics by hand and by library
==========================================

Exact-match accuracy plus macro, micro and support-weighted F1 on a toy
prediction set, with the confusion counts shown along the way.
"""

from radtag.metrics import confusion_counts, evaluate

labels = ["a", "b", "c"]
truth = [{"a"}, {"b", "c"}, {"c"}, set()]
pred = [{"a"}, {"b"}, {"a", "c"}, set()]

counts = confusion_counts(truth, pred, labels)
print(counts)

report = evaluate(truth, pred, labels)
print(report.format())

# Micro F1 pools the counts: tp = 3, fp = 1, fn = 1, so 2*3 / (2*3 + 1 + 1).
print(6 / 8, report.micro_f1)
