"""Alignment refinement: a graph network that nudges boxes by small deltas.

Trained on ground-truth layouts whose positions were jittered by offsets
drawn from U(-0.05, 0.05); the refiner predicts residual corrections toward
the clean boxes.  Sizes and categories are never touched by the perturbation
and the canvas never moves.
"""

from __future__ import annotations

import random
from typing import Sequence

import torch
from torch import Tensor, nn

from .core import (
    BoundingBox,
    Layout,
    LayoutGraph,
    ValidationError,
)
from .nngraph import EMBED_DIM, HIDDEN_DIM, ConvStack, EmbeddingTable, embed_graphs

PERTURB_RANGE = 0.05


def perturb(layout: Layout, seed: int | None = None) -> Layout:
    """Jitter each component position by independent offsets from U(-0.05, 0.05).

    Sizes are preserved exactly; results are clamped on-canvas.
    """
    rng = random.Random(seed)
    boxes = []
    for box in layout.boxes:
        dx = rng.uniform(-PERTURB_RANGE, PERTURB_RANGE)
        dy = rng.uniform(-PERTURB_RANGE, PERTURB_RANGE)
        boxes.append(
            BoundingBox(
                min(max(box.x + dx, 0.0), 1.0 - box.w),
                min(max(box.y + dy, 0.0), 1.0 - box.h),
                box.w,
                box.h,
            )
        )
    return layout.with_boxes(boxes)


def refine_loss(pred: Layout, gt: Layout) -> float:
    """Sum of per-coordinate L1 distances between two equal-length layouts."""
    if len(pred) != len(gt):
        raise ValidationError("layouts must have the same component count")
    total = 0.0
    for a, b in zip(pred.boxes, gt.boxes):
        total += abs(a.x - b.x) + abs(a.y - b.y) + abs(a.w - b.w) + abs(a.h - b.h)
    return total


class LayoutRefiner(nn.Module):
    def __init__(self, num_categories: int, emb_dim: int = EMBED_DIM, hidden: int = HIDDEN_DIM):
        super().__init__()
        self.num_categories = num_categories
        self.table = EmbeddingTable(num_categories, emb_dim)
        self.net = ConvStack(node_in=emb_dim + 4, edge_in=emb_dim, hidden=hidden)
        self.delta_head = nn.Linear(hidden, 4)

    @property
    def config(self) -> dict:
        return {
            "num_categories": self.num_categories,
            "emb_dim": self.table.emb_dim,
            "hidden": self.delta_head.in_features,
        }

    def deltas(self, graphs: Sequence[LayoutGraph], layouts: Sequence[Layout]) -> Tensor:
        """Predicted per-node box corrections, [total_nodes, 4]."""
        for g, l in zip(graphs, layouts):
            if g.nodes[1:] != l.categories:
                raise ValidationError("graph nodes do not match layout categories")
        coords = []
        for l in layouts:
            coords.append((0.0, 0.0, 1.0, 1.0))
            coords.extend(b.as_tuple() for b in l.boxes)
        extra = torch.tensor(coords, dtype=torch.float32)
        gt, _ = embed_graphs(graphs, self.table, extra)
        return self.delta_head(self.net(gt).node_feats)

    @torch.no_grad()
    def refine(self, graph: LayoutGraph, layout: Layout) -> Layout:
        """Apply predicted deltas, clamped to valid boxes; canvas untouched."""
        deltas = self.deltas([graph], [layout])[1:]
        boxes = []
        for box, d in zip(layout.boxes, deltas.tolist()):
            w = min(max(box.w + d[2], 1e-3), 1.0)
            h = min(max(box.h + d[3], 1e-3), 1.0)
            x = min(max(box.x + d[0], 0.0), 1.0 - w)
            y = min(max(box.y + d[1], 0.0), 1.0 - h)
            boxes.append(BoundingBox(x, y, w, h))
        return layout.with_boxes(boxes)

    def training_loss(
        self,
        graphs: Sequence[LayoutGraph],
        noisy: Sequence[Layout],
        clean: Sequence[Layout],
    ) -> Tensor:
        """Mean per-layout L1 between corrected and clean boxes."""
        deltas = self.deltas(graphs, noisy)
        noisy_rows = []
        clean_rows = []
        keep = []
        row = 0
        for ln, lc in zip(noisy, clean):
            row += 1  # skip the canvas node
            for bn, bc in zip(ln.boxes, lc.boxes):
                noisy_rows.append(bn.as_tuple())
                clean_rows.append(bc.as_tuple())
                keep.append(row)
                row += 1
        noisy_t = torch.tensor(noisy_rows, dtype=deltas.dtype)
        clean_t = torch.tensor(clean_rows, dtype=deltas.dtype)
        corrected = noisy_t + deltas[torch.tensor(keep)]
        per_component = (corrected - clean_t).abs().sum(dim=1)
        return per_component.sum() / len(noisy)
