"""Dataset ingestion, synthetic corpora, partial-graph sampling, negatives.

The synthetic grammars stand in for real design corpora at desk scale: the
``mobile-ui`` grammar mimics app screens (toolbar / list items / button), the
``banner-ad`` grammar mimics image banner ads (image / logo / text / button).
Both are deterministic under a seed and keep their regularities learnable
(jitter <= 0.01) without being degenerate.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    BoundingBox,
    CategoryTable,
    Layout,
    LayoutGraph,
    LocationRelation,
    SchemaError,
    SizeRelation,
    ValidationError,
    layout_from_dict,
    layout_to_json,
)

GRAMMARS = ("mobile-ui", "banner-ad")

MOBILE_UI_CATEGORIES = CategoryTable(["canvas", "toolbar", "list-item", "button"])
BANNER_AD_CATEGORIES = CategoryTable(["canvas", "image", "logo", "text", "button"])

DEFAULT_SPLITS = {"train": 0.8, "val": 0.1, "test": 0.1}

# A coordinate above this is taken as a pixel value needing normalization.
_PIXEL_THRESHOLD = 1.0 + 0.01


@dataclass
class DatasetManifest:
    """Everything needed to reload and split a dataset deterministically."""

    root: Path
    categories: CategoryTable
    grammar: str | None = None
    splits: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_SPLITS))
    split_seed: int = 0
    max_components: int = 10

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "grammar": self.grammar,
            "categories": list(self.categories.names),
            "splits": self.splits,
            "split_seed": self.split_seed,
            "max_components": self.max_components,
        }

    def save(self, path: Path | None = None) -> Path:
        path = path or self.root / "manifest.json"
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load(cls, path: Path) -> "DatasetManifest":
        path = Path(path)
        if path.is_dir():
            path = path / "manifest.json"
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(obj, dict) or "categories" not in obj:
            raise SchemaError(f"manifest {path} is missing the category table")
        return cls(
            root=path.parent,
            categories=CategoryTable(obj["categories"]),
            grammar=obj.get("grammar"),
            splits=dict(obj.get("splits", DEFAULT_SPLITS)),
            split_seed=int(obj.get("split_seed", 0)),
            max_components=int(obj.get("max_components", 10)),
        )


@dataclass
class LoadResult:
    layouts: list[Layout]
    skipped: int
    errors: list[str]


def _normalize_pixels(obj: dict) -> dict:
    """Divide pixel-valued bboxes by canvas_px; normalized files pass through."""
    components = obj.get("components")
    canvas_px = obj.get("canvas_px")
    if not isinstance(components, list) or not isinstance(canvas_px, (list, tuple)):
        return obj
    needs_scaling = any(
        isinstance(c, dict)
        and isinstance(c.get("bbox"), list)
        and len(c["bbox"]) == 4
        and any(isinstance(v, (int, float)) and v > _PIXEL_THRESHOLD for v in c["bbox"])
        for c in components
    )
    if not needs_scaling:
        return obj
    w, h = float(canvas_px[0]), float(canvas_px[1])
    scaled = []
    for c in components:
        if isinstance(c, dict) and isinstance(c.get("bbox"), list) and len(c["bbox"]) == 4:
            x, y, bw, bh = c["bbox"]
            c = {**c, "bbox": [x / w, y / h, bw / w, bh / h]}
        scaled.append(c)
    return {**obj, "components": scaled}


def load_dataset(manifest: DatasetManifest) -> LoadResult:
    """Read every layout JSON under the manifest root, skipping invalid files."""
    root = Path(manifest.root)
    if not root.is_dir():
        raise ValidationError(f"dataset root {root} is not a directory")
    layouts: list[Layout] = []
    errors: list[str] = []
    for path in sorted(root.glob("*.json")):
        if path.name == "manifest.json":
            continue
        try:
            obj = json.loads(path.read_text())
            layout = layout_from_dict(_normalize_pixels(obj), manifest.categories)
        except (OSError, json.JSONDecodeError, SchemaError, ValidationError) as exc:
            errors.append(f"{path.name}: {exc}")
            continue
        if len(layout) > manifest.max_components:
            errors.append(f"{path.name}: {len(layout)} components exceeds max")
            continue
        layouts.append(layout)
    if not layouts:
        raise ValidationError(f"no valid layouts under {root}")
    return LoadResult(layouts=layouts, skipped=len(errors), errors=errors)


def split_dataset(
    layouts: list[Layout], manifest: DatasetManifest
) -> dict[str, list[Layout]]:
    """Disjoint train/val/test split, deterministic under the manifest seed."""
    order = list(range(len(layouts)))
    random.Random(manifest.split_seed).shuffle(order)
    n = len(layouts)
    n_train = int(round(manifest.splits.get("train", 0.8) * n))
    n_val = int(round(manifest.splits.get("val", 0.1) * n))
    idx = {
        "train": order[:n_train],
        "val": order[n_train : n_train + n_val],
        "test": order[n_train + n_val :],
    }
    return {name: [layouts[i] for i in ids] for name, ids in idx.items()}


# ---------------------------------------------------------------------------
# Synthetic grammars


def _jitter(rng: random.Random, amount: float = 0.004) -> float:
    return rng.uniform(-amount, amount)


def _mobile_ui_layout(rng: random.Random) -> Layout:
    table = MOBILE_UI_CATEGORIES
    comps: list[tuple] = []
    y_cursor = 0.02
    if rng.random() < 0.8:
        x = rng.uniform(0.0, 0.01)
        h = rng.uniform(0.06, 0.1)
        comps.append((table.by_name("toolbar"), BoundingBox(x, rng.uniform(0.0, 0.01), 1.0 - 2 * x, h)))
        y_cursor = comps[-1][1].bottom + rng.uniform(0.01, 0.03)
    n_items = rng.randint(2, 5)
    left = rng.uniform(0.02, 0.05)
    width = rng.uniform(0.82, 0.92)
    item_h = rng.uniform(0.07, 0.11)
    gap = rng.uniform(0.012, 0.02)
    for k in range(n_items):
        comps.append(
            (
                table.by_name("list-item"),
                BoundingBox(
                    max(0.0, left + _jitter(rng)),
                    y_cursor + k * (item_h + gap) + _jitter(rng),
                    width,
                    item_h,
                ),
            )
        )
    if rng.random() < 0.7:
        w = rng.uniform(0.3, 0.5)
        h = rng.uniform(0.05, 0.08)
        x = min(max(0.5 - w / 2 + _jitter(rng), 0.0), 1.0 - w)
        y = rng.uniform(0.85, 1.0 - h - 0.001)
        comps.append((table.by_name("button"), BoundingBox(x, y, w, h)))
    return Layout((360, 640), tuple(comps))


def _banner_ad_layout(rng: random.Random) -> Layout:
    table = BANNER_AD_CATEGORIES
    comps: list[tuple] = []
    image = BoundingBox(
        rng.uniform(0.01, 0.03),
        rng.uniform(0.01, 0.03),
        rng.uniform(0.5, 0.6),
        rng.uniform(0.6, 0.75),
    )
    comps.append((table.by_name("image"), image))
    corner = rng.choice(("canvas-top-right", "canvas-bottom-right", "image-top-left"))
    lw = rng.uniform(0.07, 0.1)
    lh = rng.uniform(0.07, 0.1)
    if corner == "canvas-top-right":
        logo = BoundingBox(rng.uniform(0.86, 0.9 - 0.001), rng.uniform(0.02, 0.05), lw, lh)
    elif corner == "canvas-bottom-right":
        logo = BoundingBox(rng.uniform(0.86, 0.9 - 0.001), rng.uniform(0.85, 0.88), lw, lh)
    else:
        logo = BoundingBox(image.x + rng.uniform(0.02, 0.04), image.y + rng.uniform(0.02, 0.04), lw, lh)
    comps.append((table.by_name("logo"), logo))
    text = BoundingBox(
        image.right + rng.uniform(0.03, 0.06),
        rng.uniform(0.25, 0.35),
        rng.uniform(0.2, 0.26),
        rng.uniform(0.15, 0.25),
    )
    comps.append((table.by_name("text"), text))
    if rng.random() < 0.85:
        button = BoundingBox(
            text.x + _jitter(rng),
            text.bottom + rng.uniform(0.03, 0.06),
            rng.uniform(0.14, 0.2),
            rng.uniform(0.06, 0.09),
        )
        comps.append((table.by_name("button"), button))
    return Layout((300, 250), tuple(comps))


_GRAMMAR_FNS = {"mobile-ui": _mobile_ui_layout, "banner-ad": _banner_ad_layout}


def grammar_categories(grammar: str) -> CategoryTable:
    if grammar == "mobile-ui":
        return MOBILE_UI_CATEGORIES
    if grammar == "banner-ad":
        return BANNER_AD_CATEGORIES
    raise ValidationError(f"unknown grammar {grammar!r}; expected one of {GRAMMARS}")


def synth_generate(n: int, seed: int, grammar: str = "mobile-ui") -> list[Layout]:
    """Generate n synthetic layouts, deterministic under the seed."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    make = _GRAMMAR_FNS.get(grammar)
    if make is None:
        raise ValidationError(f"unknown grammar {grammar!r}; expected one of {GRAMMARS}")
    rng = random.Random(seed)
    return [make(rng) for _ in range(n)]


def write_dataset(
    layouts: list[Layout],
    out_dir: Path,
    categories: CategoryTable,
    grammar: str | None = None,
    split_seed: int = 0,
) -> DatasetManifest:
    """Write one JSON per layout plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, layout in enumerate(layouts):
        (out_dir / f"{k:05d}.json").write_text(layout_to_json(layout))
    manifest = DatasetManifest(
        root=out_dir, categories=categories, grammar=grammar, split_seed=split_seed
    )
    manifest.save()
    return manifest


# ---------------------------------------------------------------------------
# Partial graphs and negatives


def sample_partial(
    graph: LayoutGraph, rate: float | None = None, seed: int | None = None
) -> LayoutGraph:
    """Drop each relation to unknown independently with probability ``rate``.

    When rate is None it is drawn from U(0.2, 0.9) per call, matching the
    dropout range used to make training-time partial graphs.
    """
    rng = random.Random(seed)
    if rate is None:
        rate = rng.uniform(0.2, 0.9)
    if not 0.0 <= rate <= 1.0:
        raise ValidationError(f"rate must be in [0, 1], got {rate}")
    loc = tuple(
        LocationRelation.UNKNOWN if rng.random() < rate else rel for rel in graph.loc
    )
    size = tuple(
        SizeRelation.UNKNOWN if rng.random() < rate else rel for rel in graph.size
    )
    return LayoutGraph(graph.nodes, loc, size)


def sample_partial_by_type(
    graph: LayoutGraph,
    keep_unary_loc: float,
    keep_binary_loc: float,
    keep_unary_size: float,
    keep_binary_size: float,
    seed: int | None = None,
) -> LayoutGraph:
    """Keep each relation with a per-type probability (ablation protocol).

    Unary relations are canvas-component edges, binary ones are
    component-component edges.
    """
    rng = random.Random(seed)
    loc = []
    size = []
    for k, (i, _) in enumerate(graph.pairs):
        keep_loc = keep_unary_loc if i == 0 else keep_binary_loc
        keep_size = keep_unary_size if i == 0 else keep_binary_size
        loc.append(graph.loc[k] if rng.random() < keep_loc else LocationRelation.UNKNOWN)
        size.append(graph.size[k] if rng.random() < keep_size else SizeRelation.UNKNOWN)
    return LayoutGraph(graph.nodes, tuple(loc), tuple(size))


def make_negatives(layouts: list[Layout], seed: int = 0) -> list[Layout]:
    """Bad-layout counterparts: every component relocated uniformly on-canvas.

    Sizes and categories are preserved; only (x, y) are resampled.  This is
    the aggressive noise model for classifier negatives; bounded jitter for
    refiner training lives in :mod:`ndn.refine`.
    """
    rng = random.Random(seed)
    out = []
    for layout in layouts:
        boxes = [
            BoundingBox(rng.uniform(0.0, 1.0 - b.w), rng.uniform(0.0, 1.0 - b.h), b.w, b.h)
            for b in layout.boxes
        ]
        out.append(layout.with_boxes(boxes))
    return out
