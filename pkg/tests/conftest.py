"""Shared fixtures.

The heavy session fixtures (toy overfits and the desk-scale trained
pipeline) are trained once per session and shared by module tests and the
acceptance suite.  Set NDN_TEST_CACHE to a directory to reuse checkpoints
across local runs while iterating; CI and acceptance runs leave it unset.
"""

from __future__ import annotations

import os
import random
import time
from dataclasses import dataclass
from pathlib import Path

import pytest
import torch

from ndn import core, data
from ndn.boxgen import LayoutGenerator
from ndn.core import BoundingBox, CategoryTable, Layout
from ndn.harness import pipeline, training
from ndn.relnet import RelationPredictor
from ndn.harness.checkpoint import ModelCheckpoint
from ndn.harness.config import TrainingConfig

torch.set_num_threads(min(torch.get_num_threads(), 2))

TOY_TABLE = CategoryTable(["canvas", "header", "body"])


def _cache_dir() -> Path | None:
    value = os.environ.get("NDN_TEST_CACHE")
    if not value:
        return None
    path = Path(value)
    path.mkdir(parents=True, exist_ok=True)
    return path


def toy_ruleset(n: int = 200, seed: int = 42) -> list[Layout]:
    """Two-category layouts where the header always sits above the body.

    Every relation in every layout is identical; only coordinates jitter.
    """
    rng = random.Random(seed)

    def jitter() -> float:
        return rng.uniform(-0.01, 0.01)

    layouts = []
    for _ in range(n):
        header = BoundingBox(0.1 + jitter(), 0.05 + jitter(), 0.8, 0.15)
        body = BoundingBox(0.1 + jitter(), 0.45 + jitter(), 0.8, 0.4)
        layouts.append(
            Layout(
                (360, 640),
                (
                    (TOY_TABLE.by_name("header"), header),
                    (TOY_TABLE.by_name("body"), body),
                ),
            )
        )
    return layouts


@dataclass
class ToyRelnet:
    model: RelationPredictor
    train_layouts: list[Layout]
    heldout_layouts: list[Layout]
    loss_rows: list[dict]
    steps: int
    seconds: float


@pytest.fixture(scope="session")
def toy_relnet() -> ToyRelnet:
    layouts = toy_ruleset()
    train, heldout = layouts[:160], layouts[160:]
    steps = 800
    config = TrainingConfig(
        relnet_steps=steps,
        boxgen_steps=1,
        refiner_steps=1,
        classifier_steps=1,
        batch_size=32,
        seed=0,
    )
    started = time.monotonic()
    model, rows = training.train_relnet(train, TOY_TABLE, config)
    return ToyRelnet(model, train, heldout, rows, steps, time.monotonic() - started)


@dataclass
class MemorizedBoxgen:
    model: LayoutGenerator
    layouts: list[Layout]
    steps: int
    seconds: float


MEMORIZE_STEPS = 3500
MEMORIZE_LR = 3e-4


def distinct_graph_layouts(n: int = 10, seed: int = 7) -> list[Layout]:
    """Banner layouts whose relation graphs are pairwise distinct and whose
    logo sits in one canvas cell.

    Identical graphs cannot be told apart by a deterministic decode, and
    mixing logo corners makes one discrete coordinate teeter between modes
    during training, so the memorization target avoids both.
    """
    pool = data.synth_generate(600, seed=seed, grammar="banner-ad")
    seen = set()
    picked: list[Layout] = []
    for layout in pool:
        logo = next(b for c, b in layout.components if c.name == "logo")
        if core.extract_canvas_relation(logo) is not core.LocationRelation.TOP_RIGHT:
            continue
        graph = core.graph_from_layout(layout)
        signature = (
            tuple(c.name for c in graph.nodes),
            tuple(r.value for r in graph.loc),
        )
        if signature in seen:
            continue
        seen.add(signature)
        picked.append(layout)
        if len(picked) == n:
            break
    return picked


@pytest.fixture(scope="session")
def memorized_boxgen() -> MemorizedBoxgen:
    layouts = distinct_graph_layouts()
    config = TrainingConfig(
        boxgen_steps=MEMORIZE_STEPS,
        relnet_steps=1,
        refiner_steps=1,
        classifier_steps=1,
        batch_size=10,
        learning_rate=MEMORIZE_LR,
        cosine_lr_decay=True,
        seed=0,
    )
    started = time.monotonic()
    model, _ = training.train_boxgen(layouts, data.BANNER_AD_CATEGORIES, config)
    return MemorizedBoxgen(model, layouts, MEMORIZE_STEPS, time.monotonic() - started)


@dataclass
class TrainedPipeline:
    models: pipeline.LoadedModels
    checkpoint: ModelCheckpoint
    train: list[Layout]
    val: list[Layout]
    test: list[Layout]
    config: TrainingConfig
    curves_dir: Path
    seconds: float
    corpus_size: int = 5000


PIPELINE_CONFIG = TrainingConfig(
    relnet_steps=2000,
    boxgen_steps=4000,
    refiner_steps=2000,
    classifier_steps=1500,
    batch_size=64,
    seed=0,
)


@pytest.fixture(scope="session")
def trained_pipeline(tmp_path_factory) -> TrainedPipeline:
    """Train all modules on the 5k mobile-ui corpus (tens of minutes on CPU)."""
    layouts = data.synth_generate(5000, seed=0)
    manifest = data.DatasetManifest(
        root=Path("."), categories=data.MOBILE_UI_CATEGORIES, split_seed=0
    )
    splits = data.split_dataset(layouts, manifest)
    cache = _cache_dir()
    curves_dir = cache / "curves" if cache else tmp_path_factory.mktemp("curves")
    ckpt_path = cache / "pipeline_ck.pt" if cache else None
    started = time.monotonic()
    if ckpt_path and ckpt_path.is_file():
        ckpt = ModelCheckpoint.load(ckpt_path)
    else:
        ckpt = training.train_all(
            splits["train"], data.MOBILE_UI_CATEGORIES, PIPELINE_CONFIG, out_dir=curves_dir
        )
        if ckpt_path:
            ckpt.save(ckpt_path)
    return TrainedPipeline(
        models=pipeline.LoadedModels.from_checkpoint(ckpt),
        checkpoint=ckpt,
        train=splits["train"],
        val=splits["val"],
        test=splits["test"],
        config=PIPELINE_CONFIG,
        curves_dir=Path(curves_dir),
        seconds=time.monotonic() - started,
    )


@pytest.fixture(scope="session")
def small_checkpoint(tmp_path_factory) -> Path:
    """A quickly trained checkpoint for service/CLI plumbing tests."""
    layouts = data.synth_generate(150, seed=11)
    config = TrainingConfig(
        relnet_steps=60,
        boxgen_steps=60,
        refiner_steps=30,
        classifier_steps=30,
        batch_size=16,
        seed=1,
    )
    ckpt = training.train_all(layouts, data.MOBILE_UI_CATEGORIES, config)
    path = tmp_path_factory.mktemp("ckpt") / "small.pt"
    ckpt.save(path)
    return path
