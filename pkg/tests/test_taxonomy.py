import re
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from radtag.errors import ParseError, UnknownLabel
from radtag.taxonomy import (
    TREE_FILES,
    CountMismatch,
    StudyTimeline,
    ancestors_of,
    expand_to_level,
    label_space,
    load_tree,
    map_labels_to_cuis,
    parse_tree,
    resolve_report_labels,
    resolve_unchanged,
)

FINDINGS = ["cardiomegaly", "pleural effusion", "pneumonia", "atelectasis", "kyphosis"]
LABELS = st.sampled_from(FINDINGS + ["normal", "exclude", "suboptimal study"])
SENTENCE_SETS = st.lists(st.lists(LABELS, max_size=3), min_size=1, max_size=5)


class TestParseTree:
    def test_granuloma_identity(self, trees):
        node = trees["findings"].occurrences("granuloma")[0]
        assert node.own_count == 481
        assert [c.cumulative_count for c in node.children] == [2165]
        assert node.cumulative_count == 481 + 2165 == 2646

    def test_leaf_cumulative_equals_own(self, trees):
        for tree in trees.values():
            for node in tree.nodes():
                if not node.children and node.cumulative_count is not None:
                    assert node.cumulative_count == node.own_count

    def test_malformed_cui(self):
        with pytest.raises(ParseError):
            parse_tree("x [CUI:C12]")

    def test_mismatch_is_a_warning(self):
        with pytest.warns(CountMismatch):
            tree = parse_tree("a [counts:1, 5]\n\tb [counts:2, 2]")
        assert len(tree.mismatches) == 1
        assert "a" in tree

    def test_indentation_jump(self):
        with pytest.raises(ParseError):
            parse_tree("a\n\t\tb")

    def test_shipped_trees_are_consistent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error", CountMismatch)
            for kind, path in TREE_FILES.items():
                assert load_tree(path, kind).mismatches == []

    def test_cui_format(self, trees):
        for tree in trees.values():
            for node in tree.nodes():
                if node.cui is not None:
                    assert re.match(r"^C[0-9]{7}$", node.cui)

    def test_label_space_size(self, trees):
        space = label_space(trees)
        assert len(space) == len(set(space)) == 193
        assert "normal" in space and "unchanged" in space


class TestAncestors:
    def test_multi_axial(self, trees):
        paths = ancestors_of(trees["findings"], "calcified granuloma")
        parents = sorted(p[-2] for p in paths)
        assert parents == ["calcified densities", "granuloma"]

    def test_root(self, trees):
        assert ancestors_of(trees["findings"], "normal") == [["normal"]]

    def test_diagnosis(self, trees):
        (path,) = ancestors_of(trees["diagnoses"], "tuberculosis sequelae")
        assert path[-2:] == ["tuberculosis", "tuberculosis sequelae"]

    def test_unknown(self, trees):
        with pytest.raises(UnknownLabel):
            ancestors_of(trees["findings"], "no such label")

    def test_path_count_matches_file_occurrences(self, trees):
        for kind, path in TREE_FILES.items():
            text = path.read_text(encoding="utf-8")
            names = [re.sub(r"\s*\[.*$", "", line.strip()) for line in text.splitlines() if line.strip()]
            for label in set(names):
                assert len(ancestors_of(trees[kind], label)) == names.count(label)


class TestExpandToLevel:
    def test_child_to_parent(self, trees):
        assert expand_to_level({"laminar atelectasis"}, trees["findings"], 1) == {"atelectasis"}

    def test_already_at_depth(self, trees):
        assert expand_to_level({"atelectasis"}, trees["findings"], 1) == {"atelectasis"}

    def test_multi_axial_union(self, trees):
        expected = {p[1] for p in ancestors_of(trees["findings"], "calcified granuloma")}
        assert expand_to_level({"calcified granuloma"}, trees["findings"], 1) == expected
        assert expected == {"calcified densities", "granuloma"}


class TestResolveReportLabels:
    @pytest.mark.parametrize("sentences, expected", [
        ([["normal"], ["cardiomegaly"]], ["cardiomegaly"]),
        ([["exclude"], ["exclude"]], ["exclude"]),
        ([["exclude"], ["pneumonia"]], ["pneumonia"]),
    ])
    def test_examples(self, sentences, expected):
        assert resolve_report_labels(sentences) == expected

    def test_suboptimal_coexists_with_normal(self):
        assert set(resolve_report_labels([["normal"], ["suboptimal study"]])) == {"normal", "suboptimal study"}

    @given(SENTENCE_SETS)
    def test_normal_and_exclude_exclusivity(self, sentences):
        out = resolve_report_labels(sentences)
        if "normal" in out:
            assert not set(out) & set(FINDINGS)
        if "exclude" in out:
            assert out == ["exclude"]

    @given(SENTENCE_SETS)
    def test_idempotent(self, sentences):
        once = resolve_report_labels(sentences)
        assert resolve_report_labels([once]) == once

    @given(SENTENCE_SETS, st.randoms())
    def test_order_insensitive(self, sentences, rnd):
        shuffled = list(sentences)
        rnd.shuffle(shuffled)
        assert set(resolve_report_labels(shuffled)) == set(resolve_report_labels(sentences))


class TestResolveUnchanged:
    def _resolve(self, *studies):
        timeline = StudyTimeline("p", [(f"2020-01-0{i + 1}", s) for i, s in enumerate(studies)])
        return [labels for _, labels in resolve_unchanged(timeline).studies]

    def test_substitutes_prior(self):
        assert self._resolve(["cardiomegaly"], ["unchanged"])[1] == ["cardiomegaly"]

    def test_first_study_dropped(self):
        assert self._resolve(["unchanged"]) == [[]]

    def test_union_with_own_labels(self):
        out = self._resolve(["cardiomegaly"], ["unchanged", "pleural effusion"])
        assert set(out[1]) == {"cardiomegaly", "pleural effusion"}

    def test_chained(self):
        out = self._resolve(["pneumonia"], ["unchanged"], ["unchanged"])
        assert out == [["pneumonia"], ["pneumonia"], ["pneumonia"]]

    def test_dates_must_ascend(self):
        with pytest.raises(ValueError):
            StudyTimeline("p", [("2020-02-01", []), ("2020-01-01", [])])

    @given(st.lists(st.lists(st.sampled_from(FINDINGS + ["unchanged"]), max_size=3), min_size=1, max_size=5))
    def test_unchanged_never_survives(self, studies):
        for labels in self._resolve(*studies):
            assert "unchanged" not in labels

    @given(st.lists(st.sampled_from(FINDINGS), min_size=1, max_size=3))
    def test_prior_substituted(self, prior):
        out = self._resolve(prior, ["unchanged"])
        assert set(out[1]) == set(prior)


class TestCuis:
    def test_known_pair(self, trees):
        out = map_labels_to_cuis(["pulmonary fibrosis", "chronic changes"], [trees["findings"], trees["diagnoses"]])
        assert out == ["C0034069", "C0742362"]

    def test_label_without_cui(self, trees):
        assert map_labels_to_cuis(["NSG tube"], trees) == []

    def test_empty(self, trees):
        assert map_labels_to_cuis([], trees) == []

    def test_unknown(self, trees):
        with pytest.raises(UnknownLabel):
            map_labels_to_cuis(["no such label"], trees)
