import pytest
import torch

from ndn import data, metrics
from ndn.core import ValidationError, graph_from_layout
from ndn.refine import PERTURB_RANGE, LayoutRefiner, perturb, refine_loss


@pytest.fixture(scope="module")
def corpus():
    return data.synth_generate(60, seed=6)


class TestPerturb:
    def test_seed_determinism(self, corpus):
        assert perturb(corpus[0], seed=4) == perturb(corpus[0], seed=4)

    def test_offsets_bounded(self, corpus):
        for layout in corpus[:20]:
            noisy = perturb(layout, seed=1)
            for a, b in zip(layout.boxes, noisy.boxes):
                # Clamping can only shrink an offset, never grow it.
                assert abs(a.x - b.x) <= PERTURB_RANGE + 1e-12
                assert abs(a.y - b.y) <= PERTURB_RANGE + 1e-12

    def test_sizes_and_categories_preserved(self, corpus):
        noisy = perturb(corpus[1], seed=2)
        assert noisy.categories == corpus[1].categories
        for a, b in zip(corpus[1].boxes, noisy.boxes):
            assert (a.w, a.h) == (b.w, b.h)

    def test_stays_on_canvas(self, corpus):
        for seed in range(10):
            noisy = perturb(corpus[2], seed=seed)
            for b in noisy.boxes:
                assert b.x >= 0 and b.y >= 0 and b.right <= 1.0 and b.bottom <= 1.0


class TestRefineLoss:
    def test_identity(self, corpus):
        assert refine_loss(corpus[0], corpus[0]) == 0.0

    def test_single_coordinate_offset(self, corpus):
        layout = corpus[0]
        boxes = list(layout.boxes)
        moved = boxes[0]
        boxes[0] = type(moved)(moved.x, max(moved.y - 0.02, 0.0), moved.w, moved.h)
        shifted = layout.with_boxes(boxes)
        assert refine_loss(shifted, layout) == pytest.approx(
            abs(boxes[0].y - moved.y), abs=1e-12
        )

    def test_symmetry(self, corpus):
        noisy = perturb(corpus[0], seed=0)
        assert refine_loss(noisy, corpus[0]) == pytest.approx(refine_loss(corpus[0], noisy))

    def test_length_mismatch(self, corpus):
        a, b = corpus[0], corpus[1]
        if len(a) == len(b):
            pytest.skip("need different lengths")
        with pytest.raises(ValidationError):
            refine_loss(a, b)


class TestRefiner:
    def test_structure_preserved(self, corpus):
        refiner = LayoutRefiner(num_categories=4)
        layout = corpus[0]
        graph = graph_from_layout(layout)
        out = refiner.refine(graph, perturb(layout, seed=0))
        assert len(out) == len(layout)
        assert out.categories == layout.categories
        for b in out.boxes:
            assert b.x >= 0 and b.y >= 0 and b.right <= 1.0 + 1e-9 and b.bottom <= 1.0 + 1e-9

    def test_graph_layout_mismatch(self, corpus):
        refiner = LayoutRefiner(num_categories=4)
        a, b = corpus[0], next(l for l in corpus if l.categories != corpus[0].categories)
        with pytest.raises(ValidationError):
            refiner.refine(graph_from_layout(a), b)

    def test_training_loss_backward(self, corpus):
        refiner = LayoutRefiner(num_categories=4)
        clean = corpus[:6]
        graphs = [graph_from_layout(l) for l in clean]
        noisy = [perturb(l, seed=i) for i, l in enumerate(clean)]
        loss = refiner.training_loss(graphs, noisy, clean)
        loss.backward()
        assert torch.isfinite(loss)
        assert refiner.delta_head.weight.grad is not None


class TestTrainedRefiner:
    def test_moves_toward_clean_layouts(self, trained_pipeline):
        test = trained_pipeline.test[:300]
        refiner = trained_pipeline.models.refiner
        noisy = [perturb(l, seed=i) for i, l in enumerate(test)]
        refined = [
            refiner.refine(graph_from_layout(l), n) for l, n in zip(test, noisy)
        ]
        before = sum(refine_loss(n, l) for n, l in zip(noisy, test)) / len(test)
        after = sum(refine_loss(r, l) for r, l in zip(refined, test)) / len(test)
        assert after < before

    def test_alignment_improves(self, trained_pipeline):
        test = trained_pipeline.test[:300]
        refiner = trained_pipeline.models.refiner
        noisy = [perturb(l, seed=1000 + i) for i, l in enumerate(test)]
        refined = [
            refiner.refine(graph_from_layout(l), n) for l, n in zip(test, noisy)
        ]
        assert metrics.alignment_score(refined) < metrics.alignment_score(noisy)

    def test_second_pass_moves_less(self, trained_pipeline):
        test = trained_pipeline.test[:150]
        refiner = trained_pipeline.models.refiner
        noisy = [perturb(l, seed=2000 + i) for i, l in enumerate(test)]
        once = [refiner.refine(graph_from_layout(l), n) for l, n in zip(test, noisy)]
        twice = [refiner.refine(graph_from_layout(l), o) for l, o in zip(test, once)]
        first_move = sum(refine_loss(o, n) for o, n in zip(once, noisy)) / len(test)
        second_move = sum(refine_loss(t, o) for t, o in zip(twice, once)) / len(test)
        assert second_move < first_move
