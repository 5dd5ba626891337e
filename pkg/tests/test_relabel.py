"""Uncertainty reassignment policies and corpus state accounting."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import make_sheet
from radlabel.core import LabelState, MixedRegions, get_template
from radlabel.generate import CorpusProfile, generate_corpus
from radlabel.relabel import census, census_by_label, reassign_uncertain


class TestReassign:
    def test_inclusive_maps_uncertain_to_true(self, clavicle_template):
        sheet = make_sheet(clavicle_template, {"Ossicles": LabelState.UNCERTAIN})
        binary = reassign_uncertain(sheet, "inclusive")
        assert binary.assignments["Ossicles"] is True
        assert binary.policy == "inclusive"

    def test_exclusive_maps_uncertain_to_false(self, clavicle_template):
        sheet = make_sheet(clavicle_template, {"Ossicles": LabelState.UNCERTAIN})
        binary = reassign_uncertain(sheet, "exclusive")
        assert binary.assignments["Ossicles"] is False
        assert binary.policy == "exclusive"

    def test_definitive_states_pass_through(self, clavicle_template):
        sheet = make_sheet(clavicle_template, {"Displacement": LabelState.TRUE})
        for policy in ("inclusive", "exclusive"):
            binary = reassign_uncertain(sheet, policy)
            assert binary.assignments["Displacement"] is True
            assert sum(binary.assignments.values()) == 1

    def test_unknown_policy(self, clavicle_template):
        with pytest.raises(ValueError):
            reassign_uncertain(make_sheet(clavicle_template), "soft")

    def test_policies_differ_exactly_on_uncertain_cells(self, elbow_template):
        rng = np.random.default_rng(6)
        states = list(LabelState)
        for i in range(30):
            sheet = make_sheet(elbow_template, {
                label: states[int(rng.integers(0, 3))] for label in elbow_template.labels
            }, report_id=f"r-{i}")
            inclusive = reassign_uncertain(sheet, "inclusive")
            exclusive = reassign_uncertain(sheet, "exclusive")
            differing = {l for l in sheet.assignments
                         if inclusive.assignments[l] != exclusive.assignments[l]}
            assert differing == set(sheet.uncertain_labels())


class TestCensus:
    def test_empty_corpus(self):
        c = census([])
        assert (c.true_count, c.false_count, c.uncertain_count) == (0, 0, 0)

    def test_two_sheets_hand_count(self, clavicle_template):
        sheets = [
            make_sheet(clavicle_template, {"Displacement": LabelState.TRUE}, report_id="a"),
            make_sheet(clavicle_template, {"Ossicles": LabelState.TRUE}, report_id="b"),
        ]
        c = census(sheets)
        assert (c.true_count, c.false_count, c.uncertain_count) == (2, 50, 0)
        assert c.total == 2 * 26

    def test_mixed_regions_rejected(self, clavicle_template, thumb_template):
        with pytest.raises(MixedRegions):
            census([make_sheet(clavicle_template, report_id="a"),
                    make_sheet(thumb_template, report_id="b")])

    def test_sum_invariant_on_generated_corpus(self):
        _, truth = generate_corpus("thumb", 40, uncertainty_rate=0.2, seed=3)
        c = census(truth)
        assert c.total == 40 * 25


def _table_shape_profile() -> CorpusProfile:
    """937 clavicle reports shaped to corpus totals (1942 true, 42 uncertain).

    Counts sit on standalone labels so the hierarchy stays trivially feasible.
    """
    template = get_template("clavicle")
    standalone = [l for l in template.labels
                  if not any(l in edge for edge in template.hierarchy)]
    assert len(standalone) >= 12
    chosen = standalone[:12]
    true_counts = {label: 0 for label in template.labels}
    uncertain_counts = {label: 0 for label in template.labels}
    for i, label in enumerate(chosen):
        true_counts[label] = 162 if i < 10 else 161
        uncertain_counts[label] = 4 if i < 6 else 3
    profile = CorpusProfile(region="clavicle", n_reports=937,
                            true_counts=true_counts, uncertain_counts=uncertain_counts)
    assert sum(true_counts.values()) == 1942
    assert sum(uncertain_counts.values()) == 42
    return profile


@pytest.fixture(scope="module")
def training_pool_corpus():
    profile = _table_shape_profile()
    _, truth = generate_corpus("clavicle", 937, profile=profile, seed=11)
    return truth


class TestTrainingPoolAccounting:
    """Round-trip on a corpus shaped to the training-pool state totals."""

    @pytest.fixture()
    def corpus(self, training_pool_corpus):
        return training_pool_corpus

    def test_census_matches_profile_totals(self, corpus):
        c = census(corpus)
        assert (c.true_count, c.false_count, c.uncertain_count) == (1942, 22378, 42)

    def test_positive_count_identity(self, corpus):
        inclusive = [reassign_uncertain(s, "inclusive") for s in corpus]
        exclusive = [reassign_uncertain(s, "exclusive") for s in corpus]
        inclusive_pos = sum(sum(s.assignments.values()) for s in inclusive)
        exclusive_pos = sum(sum(s.assignments.values()) for s in exclusive)
        assert inclusive_pos == 1942 + 42 == 1984
        assert exclusive_pos == 1942

    def test_per_label_identity(self, corpus):
        by_label = census_by_label(corpus)
        inclusive = [reassign_uncertain(s, "inclusive") for s in corpus]
        for label, counts in by_label.items():
            pos = sum(s.assignments[label] for s in inclusive)
            assert pos == counts.true_count + counts.uncertain_count
