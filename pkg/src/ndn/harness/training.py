"""Training loops for the three generative modules plus the FID classifier.

The modules train separately, in order relation predictor -> box generator ->
refiner, sharing only the data pipeline.  Every loop is deterministic under
the config seed (single-threaded numerics) and aborts on a non-finite loss.
"""

from __future__ import annotations

import csv
import math
import random
from collections import Counter, defaultdict
from pathlib import Path
from typing import Sequence

import torch

from ..boxgen import LayoutGenerator
from ..core import (
    CategoryTable,
    Layout,
    LayoutGraph,
    LocationRelation,
    SizeRelation,
    ValidationError,
    graph_from_layout,
)
from ..data import make_negatives, sample_partial
from ..metrics import LayoutClassifier, train_classifier
from ..refine import LayoutRefiner, perturb
from ..relnet import RelationPredictor, reparameterize
from .checkpoint import ModelCheckpoint
from .config import TrainingConfig


class TrainingDiverged(RuntimeError):
    """A loss became non-finite; training aborted."""


CurveRow = dict[str, float]


def write_curve(rows: Sequence[CurveRow], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        return
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _guard(step: int, name: str, value: float) -> None:
    if not math.isfinite(value):
        raise TrainingDiverged(f"{name} loss became non-finite at step {step}: {value}")


def _occurrence_ranks(layouts: Sequence[Layout]) -> dict[int, int]:
    counts = Counter(cat.id for layout in layouts for cat in layout.categories)
    ordered = sorted(counts, key=lambda cid: (-counts[cid], cid))
    return {cid: rank for rank, cid in enumerate(ordered)}


def component_order(
    layout: Layout,
    strategy: str,
    rng: random.Random,
    occurrence_rank: dict[int, int] | None = None,
) -> list[int]:
    """Node placement order (1..n) under one of the order strategies."""
    nodes = list(range(1, len(layout) + 1))
    if strategy == "random":
        rng.shuffle(nodes)
        return nodes
    if strategy == "size":
        return sorted(nodes, key=lambda k: (-layout.boxes[k - 1].area, k))
    if strategy == "occurrence":
        ranks = occurrence_rank or {}
        return sorted(nodes, key=lambda k: (ranks.get(layout.categories[k - 1].id, 0), k))
    raise ValueError(f"unknown order strategy {strategy!r}")


def _maybe_single_thread(config: TrainingConfig) -> None:
    if config.deterministic:
        torch.set_num_threads(1)


def _scheduler(opt, config: TrainingConfig, steps: int, enabled: bool | None = None):
    if not (config.cosine_lr_decay if enabled is None else enabled):
        return None
    return torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=steps)


# ---------------------------------------------------------------------------
# Relation predictor


def train_relnet(
    layouts: Sequence[Layout],
    categories: CategoryTable,
    config: TrainingConfig,
) -> tuple[RelationPredictor, list[CurveRow]]:
    _maybe_single_thread(config)
    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    graphs = [graph_from_layout(l) for l in layouts]
    model = RelationPredictor(num_categories=len(categories))
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas)
    scheduler = _scheduler(opt, config, config.relnet_steps)
    rows: list[CurveRow] = []
    for step in range(config.relnet_steps):
        idx = [rng.randrange(len(graphs)) for _ in range(config.batch_size)]
        batch = [graphs[i] for i in idx]
        partial = [sample_partial(g, seed=rng.randrange(2**31)) for g in batch]
        mu, logvar = model.encode_batch(batch)
        z = reparameterize(mu, logvar)
        logits = model.predict_edges_batch(partial, z)
        loss = model.relation_loss(
            logits, batch, mu, logvar, lambda_cls=config.lambda_cls, lambda_kl=config.lambda_kl1
        )
        opt.zero_grad()
        loss.total.backward()
        opt.step()
        if scheduler is not None:
            scheduler.step()
        total = loss.total.item()
        _guard(step, "relnet", total)
        if step % config.log_every == 0 or step == config.relnet_steps - 1:
            rows.append(
                {
                    "step": step,
                    "total": total,
                    "classification": loss.classification.item(),
                    "kl": loss.kl.item(),
                }
            )
    model.mark_trained(config.relnet_steps)
    model.eval()
    return model, rows


@torch.no_grad()
def edge_prediction_accuracy(
    model: RelationPredictor,
    graphs: Sequence[LayoutGraph],
    rate: float = 0.7,
    seed: int = 0,
) -> float:
    """Accuracy of completed edges measured on the previously-unknown ones."""
    rng = random.Random(seed)
    correct = 0
    total = 0
    for g in graphs:
        partial = sample_partial(g, rate=rate, seed=rng.randrange(2**31))
        completed = model.complete_graph(partial, mode="sample", seed=rng.randrange(2**31))
        for k in range(len(g.loc)):
            if partial.loc[k] is LocationRelation.UNKNOWN:
                total += 1
                correct += completed.loc[k] is g.loc[k]
            if partial.size[k] is SizeRelation.UNKNOWN:
                total += 1
                correct += completed.size[k] is g.size[k]
    return correct / total if total else 1.0


# ---------------------------------------------------------------------------
# Box generator


def train_boxgen(
    layouts: Sequence[Layout],
    categories: CategoryTable,
    config: TrainingConfig,
) -> tuple[LayoutGenerator, list[CurveRow]]:
    _maybe_single_thread(config)
    torch.manual_seed(config.seed + 1)
    rng = random.Random(config.seed + 1)
    graphs = [graph_from_layout(l) for l in layouts]
    buckets: dict[int, list[int]] = defaultdict(list)
    for i, layout in enumerate(layouts):
        buckets[len(layout)].append(i)
    bucket_sizes = {n: len(ids) for n, ids in buckets.items()}
    bucket_keys = sorted(buckets)
    weights = [bucket_sizes[n] for n in bucket_keys]
    occurrence = _occurrence_ranks(layouts)

    model = LayoutGenerator(num_categories=len(categories))
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=config.betas)
    scheduler = _scheduler(opt, config, config.boxgen_steps)
    rows: list[CurveRow] = []
    for step in range(config.boxgen_steps):
        n = rng.choices(bucket_keys, weights=weights)[0]
        ids = buckets[n]
        idx = [ids[rng.randrange(len(ids))] for _ in range(config.batch_size)]
        batch_graphs = [graphs[i] for i in idx]
        batch_layouts = [layouts[i] for i in idx]
        orders = [
            component_order(layouts[i], config.order_strategy, rng, occurrence) for i in idx
        ]
        loss = model.layout_loss(
            batch_graphs,
            batch_layouts,
            orders,
            fixed_size_mode=config.fixed_size_mode,
            lambda_recon=config.lambda_recon,
            lambda_kl=config.lambda_kl2,
            lambda_size_recon=config.lambda_size_recon,
        )
        opt.zero_grad()
        loss.total.backward()
        opt.step()
        if scheduler is not None:
            scheduler.step()
        total = loss.total.item()
        _guard(step, "boxgen", total)
        if step % config.log_every == 0 or step == config.boxgen_steps - 1:
            rows.append(
                {
                    "step": step,
                    "total": total,
                    "reconstruction": loss.reconstruction.item(),
                    "kl": loss.kl.item(),
                    "size_reconstruction": loss.size_reconstruction.item(),
                }
            )
    model.mark_trained(config.boxgen_steps)
    model.eval()
    return model, rows


# ---------------------------------------------------------------------------
# Refiner


def train_refiner(
    layouts: Sequence[Layout],
    categories: CategoryTable,
    config: TrainingConfig,
) -> tuple[LayoutRefiner, list[CurveRow]]:
    _maybe_single_thread(config)
    torch.manual_seed(config.seed + 2)
    rng = random.Random(config.seed + 2)
    graphs = [graph_from_layout(l) for l in layouts]
    model = LayoutRefiner(num_categories=len(categories))
    opt = torch.optim.Adam(model.parameters(), lr=config.refiner_lr, betas=config.betas)
    scheduler = _scheduler(
        opt, config, config.refiner_steps,
        enabled=config.refiner_cosine_decay or config.cosine_lr_decay,
    )
    rows: list[CurveRow] = []
    for step in range(config.refiner_steps):
        idx = [rng.randrange(len(layouts)) for _ in range(config.batch_size)]
        clean = [layouts[i] for i in idx]
        noisy = [perturb(l, seed=rng.randrange(2**31)) for l in clean]
        loss = model.training_loss([graphs[i] for i in idx], noisy, clean)
        opt.zero_grad()
        loss.backward()
        opt.step()
        if scheduler is not None:
            scheduler.step()
        total = loss.item()
        _guard(step, "refiner", total)
        if step % config.log_every == 0 or step == config.refiner_steps - 1:
            rows.append({"step": step, "total": total})
    model.eval()
    return model, rows


# ---------------------------------------------------------------------------
# Everything


def train_all(
    layouts: Sequence[Layout],
    categories: CategoryTable,
    config: TrainingConfig,
    out_dir: Path | str | None = None,
) -> ModelCheckpoint:
    """Train relation predictor, generator, refiner, and (optionally) the
    FID classifier; write per-module loss curves as CSV when out_dir is set."""
    if len(layouts) < 100:
        raise ValidationError(f"need at least 100 layouts to train, got {len(layouts)}")
    relnet, relnet_rows = train_relnet(layouts, categories, config)
    boxgen, boxgen_rows = train_boxgen(layouts, categories, config)
    refiner, refiner_rows = train_refiner(layouts, categories, config)
    training_config = config.to_dict()
    classifier: LayoutClassifier | None = None
    if config.with_classifier:
        negatives = make_negatives(list(layouts), seed=config.seed + 3)
        result = train_classifier(
            list(layouts),
            negatives,
            num_categories=len(categories),
            steps=config.classifier_steps,
            batch_size=config.batch_size,
            seed=config.seed + 3,
        )
        classifier = result.model
        training_config["classifier_heldout_accuracy"] = result.heldout_accuracy
        training_config["classifier_train_accuracy"] = result.train_accuracy
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_curve(relnet_rows, out_dir / "relnet_loss.csv")
        write_curve(boxgen_rows, out_dir / "boxgen_loss.csv")
        write_curve(refiner_rows, out_dir / "refiner_loss.csv")
    return ModelCheckpoint.from_models(
        categories=categories,
        relnet=relnet,
        boxgen=boxgen,
        refiner=refiner,
        classifier=classifier,
        training_config=training_config,
    )
