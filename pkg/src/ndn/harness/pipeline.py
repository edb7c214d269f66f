"""End-to-end inference flows: constrained generation and recommendation.

These compose the three trained modules: complete the user's partial graph,
place boxes for the completed graph, optionally refine, and score every
candidate against the constraints that were actually requested.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import torch

from ..boxgen import GenerationRequest, LayoutGenerator
from ..core import (
    BoundingBox,
    CANVAS_BOX,
    Category,
    Layout,
    LayoutGraph,
    LocationRelation,
    SizeRelation,
    ValidationError,
    canvas_category,
    check_consistency,
    extract_canvas_relation,
    extract_location_relation,
    extract_size_relation,
    graph_from_layout,
)
from ..metrics import LayoutClassifier
from ..refine import LayoutRefiner
from ..relnet import RelationPredictor
from .checkpoint import ModelCheckpoint


@dataclass
class LoadedModels:
    """A checkpoint's networks, built once and reused across requests."""

    checkpoint: ModelCheckpoint
    relnet: RelationPredictor
    boxgen: LayoutGenerator
    refiner: LayoutRefiner
    classifier: LayoutClassifier | None = None

    @classmethod
    def from_checkpoint(cls, ckpt: ModelCheckpoint) -> "LoadedModels":
        return cls(
            checkpoint=ckpt,
            relnet=ckpt.build_relnet(),
            boxgen=ckpt.build_boxgen(),
            refiner=ckpt.build_refiner(),
            classifier=ckpt.build_classifier(),
        )


def _wire_index(node: int) -> int:
    return -1 if node == 0 else node - 1


def constraint_report(requested: LayoutGraph, layout: Layout) -> list[dict]:
    """Requested-vs-extracted comparison for every user-specified relation."""
    extracted = graph_from_layout(layout)
    rows: list[dict] = []
    for k, (i, j) in enumerate(requested.pairs):
        if requested.loc[k] is not LocationRelation.UNKNOWN:
            rows.append(
                {
                    "kind": "loc",
                    "i": _wire_index(i),
                    "j": _wire_index(j),
                    "requested": requested.loc[k].value,
                    "extracted": extracted.loc[k].value,
                    "ok": requested.loc[k] is extracted.loc[k],
                }
            )
        if requested.size[k] is not SizeRelation.UNKNOWN:
            rows.append(
                {
                    "kind": "size",
                    "i": _wire_index(i),
                    "j": _wire_index(j),
                    "requested": requested.size[k].value,
                    "extracted": extracted.size[k].value,
                    "ok": requested.size[k] is extracted.size[k],
                }
            )
    return rows


@dataclass
class GenerationOutcome:
    layouts: list[Layout]
    consistency: list[float]
    completed_graphs: list[LayoutGraph]
    reports: list[list[dict]] = field(default_factory=list)


def generate_layouts(
    models: LoadedModels,
    constraints: LayoutGraph,
    num_samples: int = 1,
    seed: int = 0,
    fixed_sizes: dict[int, tuple[float, float]] | None = None,
    apply_refine: bool = True,
    order: Sequence[int] | None = None,
    canvas_px: tuple[int, int] = (360, 640),
) -> GenerationOutcome:
    """Complete the constraint graph (per sample) and place every component.

    Consistency is measured against the constraints the user actually gave,
    i.e. the non-unknown edges of ``constraints``.
    """
    if num_samples < 1:
        raise ValidationError("num_samples must be >= 1")
    layouts: list[Layout] = []
    completed_graphs: list[LayoutGraph] = []
    reports: list[list[dict]] = []
    consistency: list[float] = []
    for s in range(num_samples):
        completed = models.relnet.complete_graph(
            constraints, mode="sample", seed=seed * 7919 + 2 * s
        )
        request = GenerationRequest(
            graph=completed,
            order=tuple(order) if order else (),
            fixed_sizes=dict(fixed_sizes or {}),
            num_samples=1,
            seed=seed * 7919 + 2 * s + 1,
            canvas_px=canvas_px,
        )
        layout = models.boxgen.generate(request)[0]
        if apply_refine:
            refined = models.refiner.refine(completed, layout)
            if fixed_sizes:
                # Fixed sizes are hard constraints; pin those boxes through refine.
                boxes = list(refined.boxes)
                for node in fixed_sizes:
                    boxes[node - 1] = layout.boxes[node - 1]
                refined = refined.with_boxes(boxes)
            layout = refined
        layouts.append(layout)
        completed_graphs.append(completed)
        reports.append(constraint_report(constraints, layout))
        consistency.append(check_consistency(constraints, layout))
    return GenerationOutcome(
        layouts=layouts,
        consistency=consistency,
        completed_graphs=completed_graphs,
        reports=reports,
    )


# ---------------------------------------------------------------------------
# Recommendation


def build_recommendation_graph(
    placed: Layout, target_categories: Sequence[Category]
) -> LayoutGraph:
    """Partial graph for a recommendation: placed relations known (extracted
    from the current canvas), every edge touching a target unknown."""
    if len(placed) < 1:
        raise ValidationError("recommendation needs at least one placed component")
    if not target_categories:
        raise ValidationError("recommendation needs at least one target category")
    nodes = (canvas_category(),) + placed.categories + tuple(target_categories)
    graph = LayoutGraph.all_unknown(nodes)
    boxes = (CANVAS_BOX,) + placed.boxes
    n_known = len(boxes)
    loc_updates: dict[tuple[int, int], LocationRelation] = {}
    size_updates: dict[tuple[int, int], SizeRelation] = {}
    for i, j in graph.pairs:
        if j >= n_known:
            continue
        if i == 0:
            loc_updates[(i, j)] = extract_canvas_relation(boxes[j])
        else:
            loc_updates[(i, j)] = extract_location_relation(boxes[i], boxes[j])
        size_updates[(i, j)] = extract_size_relation(boxes[i], boxes[j])
    return graph.with_edges(loc_updates, size_updates)


def recommend(
    placed: Layout,
    target_categories: Sequence[Category],
    models: LoadedModels,
    mode: str = "sample",
    seed: int = 0,
    apply_refine: bool = False,
) -> list[BoundingBox]:
    """Boxes for new components on a partially designed canvas.

    mode "sample" draws the relation latent and box latents (seeded);
    mode "mean" completes with z=0 and decodes from the prior mean,
    which is fully deterministic.  Placed boxes are never moved.
    """
    if mode not in ("sample", "mean"):
        raise ValidationError(f"mode must be 'sample' or 'mean', got {mode!r}")
    partial = build_recommendation_graph(placed, target_categories)
    completed = models.relnet.complete_graph(
        partial,
        mode="sample" if mode == "sample" else "argmax",
        seed=seed,
    )
    n_placed = len(placed)
    target_nodes = list(range(n_placed + 1, n_placed + len(target_categories) + 1))
    generator = torch.Generator()
    generator.manual_seed(seed)
    out = models.boxgen.place_nodes(
        completed,
        {k + 1: box for k, box in enumerate(placed.boxes)},
        target_nodes,
        mode="prior" if mode == "sample" else "prior-mean",
        generator=generator,
    )
    if apply_refine:
        full = Layout(
            placed.canvas_px,
            tuple(placed.components) + tuple(zip(tuple(target_categories), tuple(out))),
        )
        refined = models.refiner.refine(completed, full)
        out = list(refined.boxes[n_placed:])
    return out
