import numpy as np
import pytest
import torch

from ndn import data
from ndn.core import BoundingBox, CategoryTable, Layout, ValidationError, graph_from_layout
from ndn.metrics import (
    LayoutClassifier,
    MetricsReport,
    alignment_score,
    evaluate_generation,
    fid,
    fid_from_stats,
    train_classifier,
)

TABLE = CategoryTable(["canvas", "a", "b"])


def column_layout(lefts, widths=None, cat="a"):
    widths = widths or [0.2] * len(lefts)
    comps = tuple(
        (TABLE.by_name(cat), BoundingBox(l, 0.05 + 0.2 * i, w, 0.1))
        for i, (l, w) in enumerate(zip(lefts, widths))
    )
    return Layout((100, 100), comps)


class TestAlignment:
    def test_hand_computed_example(self):
        # Pairwise best alignment distances: 0.03 + 0.03 + 0.27.
        layout = column_layout([0.10, 0.13, 0.40])
        assert alignment_score([layout]) == pytest.approx(0.33)

    def test_shared_left_edge_scores_zero(self):
        layout = column_layout([0.25, 0.25])
        assert alignment_score([layout]) == 0.0

    def test_center_alignment_counts(self):
        # Different widths, same centers: the m-term fires.
        layout = column_layout([0.4, 0.3], widths=[0.2, 0.4])
        assert alignment_score([layout]) == pytest.approx(0.0)

    def test_duplication_invariance(self):
        layout = column_layout([0.1, 0.2, 0.5])
        once = alignment_score([layout])
        assert alignment_score([layout] * 4) == pytest.approx(once)

    def test_single_component_contributes_zero(self):
        assert alignment_score([column_layout([0.3])]) == 0.0

    def test_translation_equivariance(self):
        layout = column_layout([0.1, 0.2, 0.35])
        shifted = column_layout([0.2, 0.3, 0.45])
        assert alignment_score([layout]) == pytest.approx(alignment_score([shifted]))

    def test_empty_list_errors(self):
        with pytest.raises(ValidationError):
            alignment_score([])


class TestFid:
    def test_identical_sets_near_zero(self):
        feats = np.random.RandomState(0).randn(100, 16)
        assert abs(fid(feats, feats.copy())) < 1e-6

    def test_one_dimensional_closed_form(self):
        value = fid_from_stats(
            np.array([0.0]), np.array([[1.0]]), np.array([1.0]), np.array([[1.0]])
        )
        assert value == pytest.approx(1.0, abs=1e-5)

    def test_symmetry(self):
        rs = np.random.RandomState(3)
        a, b = rs.randn(60, 8), rs.randn(60, 8) + 0.5
        assert fid(a, b) == pytest.approx(fid(b, a), rel=1e-8)

    def test_distance_grows_with_mean_shift(self):
        rs = np.random.RandomState(4)
        base = rs.randn(200, 6)
        near = base + 0.1
        far = base + 2.0
        assert fid(base, near) < fid(base, far)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            fid(np.zeros((10, 4)), np.zeros((10, 5)))

    def test_needs_two_samples(self):
        with pytest.raises(ValidationError):
            fid(np.zeros((1, 4)), np.zeros((10, 4)))

    def test_torch_input_accepted(self):
        feats = torch.randn(50, 8)
        assert abs(fid(feats, feats.clone())) < 1e-6


class TestClassifier:
    def test_feature_shape(self):
        clf = LayoutClassifier(num_categories=4)
        layouts = data.synth_generate(5, seed=0)
        assert clf.features(layouts).shape == (5, 128)

    def test_content_hash_changes_with_weights(self):
        clf = LayoutClassifier(num_categories=4)
        before = clf.content_hash()
        with torch.no_grad():
            clf.fc3.weight += 1.0
        assert clf.content_hash() != before

    def test_single_class_input_rejected(self):
        layouts = data.synth_generate(10, seed=0)
        with pytest.raises(ValidationError):
            train_classifier(layouts, [], num_categories=4)

    def test_quick_training_learns_something(self):
        real = data.synth_generate(200, seed=1)
        negatives = data.make_negatives(real, seed=2)
        result = train_classifier(
            real, negatives, num_categories=4, steps=150, batch_size=32, seed=0
        )
        assert result.heldout_accuracy > 0.6
        assert result.train_accuracy >= result.heldout_accuracy - 0.1


class TestReport:
    def test_references_vs_references(self):
        layouts = data.synth_generate(30, seed=3)
        refs = layouts[:15]
        clf = LayoutClassifier(num_categories=4)
        report = evaluate_generation(
            refs, refs, [graph_from_layout(l) for l in refs], classifier=clf
        )
        assert report.fid == pytest.approx(0.0, abs=1e-4)
        assert report.consistency == 1.0
        assert report.classifier_hash == clf.content_hash()

    def test_no_classifier_no_fid(self):
        layouts = data.synth_generate(10, seed=4)
        report = evaluate_generation(layouts[:5], layouts[5:])
        assert report.fid is None and report.consistency is None

    def test_pred_error_passthrough(self):
        layouts = data.synth_generate(10, seed=4)
        report = evaluate_generation(layouts[:5], layouts[5:], pred_error=0.125)
        assert report.pred_error == 0.125

    def test_constraint_count_mismatch(self):
        layouts = data.synth_generate(10, seed=4)
        with pytest.raises(ValidationError):
            evaluate_generation(layouts[:5], layouts[5:], [graph_from_layout(layouts[0])])

    def test_report_validates_ranges(self):
        with pytest.raises(ValidationError):
            MetricsReport(alignment=float("nan"))
        with pytest.raises(ValidationError):
            MetricsReport(alignment=0.1, consistency=1.5)

    def test_json_round_trip(self):
        import json

        report = MetricsReport(alignment=0.25, fid=1.5, consistency=0.9, num_outputs=10)
        parsed = json.loads(report.to_json())
        assert parsed["alignment"] == 0.25 and parsed["consistency"] == 0.9
