"""Evaluation protocols: metric reports over a test split and the
constraint-fraction ablation."""

from __future__ import annotations

import random
from typing import Sequence

import numpy as np

from ..core import (
    BoundingBox,
    Layout,
    LayoutGraph,
    ValidationError,
    check_consistency,
    graph_from_layout,
)
from ..data import sample_partial_by_type
from ..metrics import MetricsReport, alignment_score, evaluate_generation
from .pipeline import LoadedModels, generate_layouts


def mean_box_baseline(train_layouts: Sequence[Layout]) -> dict[int, BoundingBox]:
    """Per-category average box over a training split."""
    sums: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    for layout in train_layouts:
        for cat, box in layout.components:
            sums[cat.id] = sums.get(cat.id, np.zeros(4)) + np.array(box.as_tuple())
            counts[cat.id] = counts.get(cat.id, 0) + 1
    out = {}
    for cid, total in sums.items():
        x, y, w, h = total / counts[cid]
        w = min(max(w, 1e-3), 1.0)
        h = min(max(h, 1e-3), 1.0)
        out[cid] = BoundingBox(min(x, 1 - w), min(y, 1 - h), w, h)
    return out


def _l1(a: BoundingBox, b: BoundingBox) -> float:
    return (
        abs(a.x - b.x) + abs(a.y - b.y) + abs(a.w - b.w) + abs(a.h - b.h)
    ) / 4.0


def leave_one_out_errors(
    models: LoadedModels,
    layouts: Sequence[Layout],
    baseline: dict[int, BoundingBox] | None = None,
) -> tuple[float, float | None]:
    """Mean per-coordinate L1 of generator predictions and of the baseline."""
    model_errors = []
    baseline_errors = []
    for layout in layouts:
        for idx in range(len(layout)):
            truth = layout.boxes[idx]
            pred = models.boxgen.leave_one_out_predict(layout, idx)
            model_errors.append(_l1(pred, truth))
            if baseline is not None:
                fallback = baseline.get(layout.categories[idx].id)
                if fallback is not None:
                    baseline_errors.append(_l1(fallback, truth))
    model_err = float(np.mean(model_errors))
    base_err = float(np.mean(baseline_errors)) if baseline_errors else None
    return model_err, base_err


def run_evaluation(
    models: LoadedModels,
    train_layouts: Sequence[Layout],
    test_layouts: Sequence[Layout],
    samples_per_design: int = 4,
    trials: int = 1,
    seed: int = 0,
    constraint_mode: str = "all",
    apply_refine: bool = True,
    max_designs: int | None = None,
) -> MetricsReport:
    """Generate for every test design and aggregate the metric suite.

    constraint_mode "all" conditions on the full ground-truth graph of each
    test design, "none" on an all-unknown graph over the same components.
    """
    if constraint_mode not in ("all", "none"):
        raise ValidationError("constraint_mode must be 'all' or 'none'")
    if models.classifier is None:
        raise ValidationError("checkpoint has no classifier; cannot compute FID")
    designs = list(test_layouts)[: max_designs or len(test_layouts)]
    if not designs:
        raise ValidationError("no test designs")
    per_trial: list[dict] = []
    all_outputs: list[Layout] = []
    all_constraints: list[LayoutGraph] = []
    for trial in range(trials):
        outputs: list[Layout] = []
        constraints: list[LayoutGraph] = []
        for d, layout in enumerate(designs):
            graph = graph_from_layout(layout)
            if constraint_mode == "none":
                graph = LayoutGraph.all_unknown(graph.nodes)
            outcome = generate_layouts(
                models,
                graph,
                num_samples=samples_per_design,
                seed=seed + trial * 100003 + d,
                apply_refine=apply_refine,
                canvas_px=layout.canvas_px,
            )
            outputs.extend(outcome.layouts)
            constraints.extend([graph] * len(outcome.layouts))
        report = evaluate_generation(outputs, list(designs), constraints, models.classifier)
        per_trial.append(
            {"fid": report.fid, "alignment": report.alignment, "consistency": report.consistency}
        )
        all_outputs.extend(outputs)
        all_constraints.extend(constraints)
    baseline = mean_box_baseline(train_layouts)
    pred_error, baseline_error = leave_one_out_errors(models, designs, baseline)
    aggregate = evaluate_generation(
        all_outputs,
        list(designs),
        all_constraints,
        models.classifier,
        pred_error=pred_error,
        config={
            "samples_per_design": samples_per_design,
            "trials": trials,
            "seed": seed,
            "constraint_mode": constraint_mode,
            "num_designs": len(designs),
            "baseline_pred_error": baseline_error,
            "per_trial": per_trial,
        },
    )
    return aggregate


def ablate_constraints(
    models: LoadedModels,
    layouts: Sequence[Layout],
    fractions: Sequence[float] = (0.0, 0.2, 1.0),
    seed: int = 0,
    apply_refine: bool = True,
) -> list[dict]:
    """Sweep the fraction of provided constraints per type, measuring how
    close the generated relations stay to the full ground-truth graph."""
    rng = random.Random(seed)
    rows = []
    for fraction in fractions:
        consistencies = []
        outputs = []
        for layout in layouts:
            full = graph_from_layout(layout)
            partial = sample_partial_by_type(
                full, fraction, fraction, fraction, fraction, seed=rng.randrange(2**31)
            )
            outcome = generate_layouts(
                models,
                partial,
                num_samples=1,
                seed=rng.randrange(2**31),
                apply_refine=apply_refine,
                canvas_px=layout.canvas_px,
            )
            consistencies.append(check_consistency(full, outcome.layouts[0]))
            outputs.append(outcome.layouts[0])
        rows.append(
            {
                "fraction": fraction,
                "consistency_vs_full": float(np.mean(consistencies)),
                "alignment": alignment_score(outputs),
            }
        )
    return rows
