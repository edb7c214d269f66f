"""Domain types for layouts and relation graphs, plus the geometric oracle.

Everything in this module is pure and immutable: layouts, relation graphs,
the extractors that turn box geometry into categorical relations, the
consistency check, and JSON (de)serialization.  All neural modules consume
these types; none of them are allowed to re-derive geometry on their own.

Coordinate convention: normalized [0, 1], origin at the top-left corner,
y grows downward.  The canvas is the implicit node 0 with box (0, 0, 1, 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from typing import Iterator, Mapping, Sequence

# Tolerated overshoot for generated boxes before clamping.
BOX_EPS = 0.01

# Area-ratio band treated as "equal" size (closed interval).
SIZE_EQUAL_BAND = 1.1

CANVAS_CATEGORY_ID = 0
CANVAS_CATEGORY_NAME = "canvas"


class ValidationError(ValueError):
    """An object violates a domain invariant (e.g. a degenerate box)."""


class SchemaError(ValueError):
    """A JSON document does not conform to the wire schema."""


# ---------------------------------------------------------------------------
# Categories


@dataclass(frozen=True, order=True)
class Category:
    """A design-component class; id 0 is reserved for the canvas."""

    id: int
    name: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValidationError(f"category id must be >= 0, got {self.id}")
        if (self.id == CANVAS_CATEGORY_ID) != (self.name == CANVAS_CATEGORY_NAME):
            raise ValidationError(
                f"category id 0 is reserved for {CANVAS_CATEGORY_NAME!r}, "
                f"got id={self.id} name={self.name!r}"
            )

    @property
    def is_canvas(self) -> bool:
        return self.id == CANVAS_CATEGORY_ID


def canvas_category() -> Category:
    return Category(CANVAS_CATEGORY_ID, CANVAS_CATEGORY_NAME)


class CategoryTable:
    """Dense category vocabulary: ids 0..C-1, id 0 = canvas, unique names."""

    def __init__(self, names: Sequence[str]):
        if not names or names[0] != CANVAS_CATEGORY_NAME:
            raise ValidationError("category table must start with 'canvas'")
        if len(set(names)) != len(names):
            raise ValidationError("category names must be unique")
        self._categories = tuple(Category(i, n) for i, n in enumerate(names))
        self._by_name = {c.name: c for c in self._categories}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self._categories)

    @property
    def canvas(self) -> Category:
        return self._categories[0]

    def by_id(self, cat_id: int) -> Category:
        if not 0 <= cat_id < len(self._categories):
            raise ValidationError(f"category id {cat_id} out of range")
        return self._categories[cat_id]

    def by_name(self, name: str) -> Category:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown category name {name!r}") from None

    def __len__(self) -> int:
        return len(self._categories)

    def __iter__(self) -> Iterator[Category]:
        return iter(self._categories)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CategoryTable) and self.names == other.names

    def __repr__(self) -> str:
        return f"CategoryTable({list(self.names)!r})"


# ---------------------------------------------------------------------------
# Boxes and layouts


@dataclass(frozen=True)
class BoundingBox:
    """Normalized axis-aligned box: left x, top y, width, height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValidationError(f"box {name} must be a finite number, got {v!r}")
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"box origin must be non-negative, got ({self.x}, {self.y})")
        if self.w <= 0 or self.h <= 0:
            raise ValidationError(f"box must have positive size, got ({self.w}, {self.h})")
        if self.x + self.w > 1 + BOX_EPS or self.y + self.h > 1 + BOX_EPS:
            raise ValidationError(
                f"box extends past the canvas: x+w={self.x + self.w}, y+h={self.y + self.h}"
            )

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


CANVAS_BOX = BoundingBox(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class Layout:
    """An ordered sequence of placed components on a pixel canvas.

    Order is significant: it is the generation order.  The canvas itself is
    implicit (category id 0, box (0,0,1,1)) and never appears in components.
    """

    canvas_px: tuple[int, int]
    components: tuple[tuple[Category, BoundingBox], ...]

    def __post_init__(self) -> None:
        w, h = self.canvas_px
        if w <= 0 or h <= 0:
            raise ValidationError(f"canvas_px must be positive, got {self.canvas_px}")
        if len(self.components) < 1:
            raise ValidationError("layout must contain at least one component")
        for cat, _ in self.components:
            if cat.is_canvas:
                raise ValidationError("layout components must not use the canvas category")

    def __len__(self) -> int:
        return len(self.components)

    @property
    def categories(self) -> tuple[Category, ...]:
        return tuple(c for c, _ in self.components)

    @property
    def boxes(self) -> tuple[BoundingBox, ...]:
        return tuple(b for _, b in self.components)

    def with_boxes(self, boxes: Sequence[BoundingBox]) -> "Layout":
        if len(boxes) != len(self.components):
            raise ValidationError("box count does not match component count")
        return Layout(self.canvas_px, tuple(zip(self.categories, boxes)))


# ---------------------------------------------------------------------------
# Relation vocabularies


class LocationRelation(Enum):
    # Component-component values.
    ABOVE = "above"
    BELOW = "below"
    LEFT_OF = "left-of"
    RIGHT_OF = "right-of"
    UPPER_LEFT_OF = "upper-left-of"
    UPPER_RIGHT_OF = "upper-right-of"
    LOWER_LEFT_OF = "lower-left-of"
    LOWER_RIGHT_OF = "lower-right-of"
    SURROUNDING = "surrounding"
    INSIDE = "inside"
    # Canvas-component values (3x3 grid, edge always from the canvas).
    TOP_LEFT = "top-left"
    TOP_CENTER = "top-center"
    TOP_RIGHT = "top-right"
    CENTER_LEFT = "center-left"
    CENTER = "center"
    CENTER_RIGHT = "center-right"
    BOTTOM_LEFT = "bottom-left"
    BOTTOM_CENTER = "bottom-center"
    BOTTOM_RIGHT = "bottom-right"
    # Augmented value for unspecified constraints.
    UNKNOWN = "unknown"

    @property
    def index(self) -> int:
        return _LOC_INDEX[self]

    @property
    def is_canvas_relation(self) -> bool:
        return 10 <= self.index <= 18

    @property
    def is_component_relation(self) -> bool:
        return self.index <= 9


_LOC_ORDER = list(LocationRelation)
_LOC_INDEX = {rel: i for i, rel in enumerate(_LOC_ORDER)}
LOCATION_VOCAB_SIZE = len(_LOC_ORDER)          # includes unknown
LOCATION_NUM_CLASSES = LOCATION_VOCAB_SIZE - 1  # prediction targets exclude unknown
COMPONENT_LOCATION_CLASSES = range(0, 10)
CANVAS_LOCATION_CLASSES = range(10, 19)


class SizeRelation(Enum):
    SMALLER = "smaller"
    EQUAL = "equal"
    LARGER = "larger"
    UNKNOWN = "unknown"

    @property
    def index(self) -> int:
        return _SIZE_INDEX[self]


_SIZE_ORDER = list(SizeRelation)
_SIZE_INDEX = {rel: i for i, rel in enumerate(_SIZE_ORDER)}
SIZE_VOCAB_SIZE = len(_SIZE_ORDER)
SIZE_NUM_CLASSES = SIZE_VOCAB_SIZE - 1


_LOC_MIRROR = {
    LocationRelation.ABOVE: LocationRelation.BELOW,
    LocationRelation.BELOW: LocationRelation.ABOVE,
    LocationRelation.LEFT_OF: LocationRelation.RIGHT_OF,
    LocationRelation.RIGHT_OF: LocationRelation.LEFT_OF,
    LocationRelation.UPPER_LEFT_OF: LocationRelation.LOWER_RIGHT_OF,
    LocationRelation.LOWER_RIGHT_OF: LocationRelation.UPPER_LEFT_OF,
    LocationRelation.UPPER_RIGHT_OF: LocationRelation.LOWER_LEFT_OF,
    LocationRelation.LOWER_LEFT_OF: LocationRelation.UPPER_RIGHT_OF,
    LocationRelation.SURROUNDING: LocationRelation.INSIDE,
    LocationRelation.INSIDE: LocationRelation.SURROUNDING,
    LocationRelation.UNKNOWN: LocationRelation.UNKNOWN,
}

_SIZE_MIRROR = {
    SizeRelation.SMALLER: SizeRelation.LARGER,
    SizeRelation.LARGER: SizeRelation.SMALLER,
    SizeRelation.EQUAL: SizeRelation.EQUAL,
    SizeRelation.UNKNOWN: SizeRelation.UNKNOWN,
}


def mirror_location(rel: LocationRelation) -> LocationRelation:
    """Relation seen from the other endpoint; canvas values have no mirror."""
    try:
        return _LOC_MIRROR[rel]
    except KeyError:
        raise ValidationError(f"canvas relation {rel.value!r} cannot be mirrored") from None


def mirror_size(rel: SizeRelation) -> SizeRelation:
    return _SIZE_MIRROR[rel]


# ---------------------------------------------------------------------------
# Relation graphs


def canonical_pairs(num_nodes: int) -> tuple[tuple[int, int], ...]:
    """All ordered pairs (i, j) with i < j over num_nodes graph nodes."""
    return tuple(combinations(range(num_nodes), 2))


@dataclass(frozen=True)
class LayoutGraph:
    """Complete-topology relation graph over canvas + components.

    Edges exist for every pair (i, j) with i < j, stored in the canonical
    order produced by :func:`canonical_pairs`.  A graph is *complete* when no
    edge carries ``unknown``, *partial* otherwise.
    """

    nodes: tuple[Category, ...]
    loc: tuple[LocationRelation, ...]
    size: tuple[SizeRelation, ...]
    _pair_index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.nodes or not self.nodes[0].is_canvas:
            raise ValidationError("graph node 0 must be the canvas")
        for cat in self.nodes[1:]:
            if cat.is_canvas:
                raise ValidationError("only node 0 may be the canvas")
        pairs = canonical_pairs(len(self.nodes))
        if len(self.loc) != len(pairs) or len(self.size) != len(pairs):
            raise ValidationError(
                f"expected {len(pairs)} edges per relation set, "
                f"got loc={len(self.loc)}, size={len(self.size)}"
            )
        for (i, _), rel in zip(pairs, self.loc):
            if rel is LocationRelation.UNKNOWN:
                continue
            if i == 0 and not rel.is_canvas_relation:
                raise ValidationError(f"edge from canvas must use a canvas relation, got {rel.value!r}")
            if i > 0 and not rel.is_component_relation:
                raise ValidationError(f"component edge must use a component relation, got {rel.value!r}")
        object.__setattr__(self, "_pair_index", {p: k for k, p in enumerate(pairs)})

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_components(self) -> int:
        return len(self.nodes) - 1

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return canonical_pairs(len(self.nodes))

    def pair_index(self, i: int, j: int) -> int:
        try:
            return self._pair_index[(i, j)]
        except KeyError:
            raise ValidationError(f"({i}, {j}) is not a canonical node pair") from None

    def loc_at(self, i: int, j: int) -> LocationRelation:
        return self.loc[self.pair_index(i, j)]

    def size_at(self, i: int, j: int) -> SizeRelation:
        return self.size[self.pair_index(i, j)]

    @property
    def is_complete(self) -> bool:
        return (
            LocationRelation.UNKNOWN not in self.loc
            and SizeRelation.UNKNOWN not in self.size
        )

    def with_edges(
        self,
        loc_updates: Mapping[tuple[int, int], LocationRelation] | None = None,
        size_updates: Mapping[tuple[int, int], SizeRelation] | None = None,
    ) -> "LayoutGraph":
        loc = list(self.loc)
        size = list(self.size)
        for (i, j), rel in (loc_updates or {}).items():
            loc[self.pair_index(i, j)] = rel
        for (i, j), rel in (size_updates or {}).items():
            size[self.pair_index(i, j)] = rel
        return LayoutGraph(self.nodes, tuple(loc), tuple(size))

    @classmethod
    def all_unknown(cls, nodes: Sequence[Category]) -> "LayoutGraph":
        n_pairs = len(canonical_pairs(len(nodes)))
        return cls(
            tuple(nodes),
            (LocationRelation.UNKNOWN,) * n_pairs,
            (SizeRelation.UNKNOWN,) * n_pairs,
        )


# ---------------------------------------------------------------------------
# Geometric relation extraction (the oracle)


def _strictly_contains(a: BoundingBox, b: BoundingBox) -> bool:
    return a.x < b.x and a.y < b.y and a.right > b.right and a.bottom > b.bottom


def _overlap(lo_a: float, hi_a: float, lo_b: float, hi_b: float) -> float:
    return min(hi_a, hi_b) - max(lo_a, lo_b)


def extract_location_relation(a: BoundingBox, b: BoundingBox) -> LocationRelation:
    """Deterministic location relation of component a relative to component b.

    Rule order: containment, then vertical (above/below takes priority when
    the horizontal intervals overlap), then horizontal, then diagonal by
    center offsets.  Ties on equal centers resolve to above / right-of.
    """
    if _strictly_contains(a, b):
        return LocationRelation.SURROUNDING
    if _strictly_contains(b, a):
        return LocationRelation.INSIDE
    if _overlap(a.x, a.right, b.x, b.right) > 0:
        return LocationRelation.ABOVE if a.cy <= b.cy else LocationRelation.BELOW
    if _overlap(a.y, a.bottom, b.y, b.bottom) > 0:
        return LocationRelation.LEFT_OF if a.cx < b.cx else LocationRelation.RIGHT_OF
    if a.cx < b.cx:
        return LocationRelation.UPPER_LEFT_OF if a.cy < b.cy else LocationRelation.LOWER_LEFT_OF
    return LocationRelation.UPPER_RIGHT_OF if a.cy < b.cy else LocationRelation.LOWER_RIGHT_OF


def extract_size_relation(a: BoundingBox, b: BoundingBox) -> SizeRelation:
    """Relative area of a vs b with a +/-10% band treated as equal."""
    ratio = a.area / b.area
    if ratio > SIZE_EQUAL_BAND:
        return SizeRelation.LARGER
    if ratio < 1.0 / SIZE_EQUAL_BAND:
        return SizeRelation.SMALLER
    return SizeRelation.EQUAL


_CANVAS_GRID = (
    (LocationRelation.TOP_LEFT, LocationRelation.TOP_CENTER, LocationRelation.TOP_RIGHT),
    (LocationRelation.CENTER_LEFT, LocationRelation.CENTER, LocationRelation.CENTER_RIGHT),
    (LocationRelation.BOTTOM_LEFT, LocationRelation.BOTTOM_CENTER, LocationRelation.BOTTOM_RIGHT),
)


def extract_canvas_relation(b: BoundingBox) -> LocationRelation:
    """Which cell of the 3x3 canvas grid holds the box center."""
    row = min(max(int(math.floor(b.cy * 3)), 0), 2)
    col = min(max(int(math.floor(b.cx * 3)), 0), 2)
    return _CANVAS_GRID[row][col]


def graph_from_layout(layout: Layout) -> LayoutGraph:
    """Complete relation graph extracted from ground-truth boxes."""
    boxes = (CANVAS_BOX,) + layout.boxes
    nodes = (canvas_category(),) + layout.categories
    loc: list[LocationRelation] = []
    size: list[SizeRelation] = []
    for i, j in canonical_pairs(len(nodes)):
        if i == 0:
            loc.append(extract_canvas_relation(boxes[j]))
        else:
            loc.append(extract_location_relation(boxes[i], boxes[j]))
        size.append(extract_size_relation(boxes[i], boxes[j]))
    return LayoutGraph(nodes, tuple(loc), tuple(size))


def check_consistency(graph: LayoutGraph, layout: Layout) -> float:
    """Fraction of the graph's known relations that hold in the layout.

    Vacuously 1.0 when the graph carries no known edge.
    """
    expected_nodes = (canvas_category(),) + layout.categories
    if graph.nodes != expected_nodes:
        raise ValidationError(
            f"graph nodes {[c.name for c in graph.nodes]} do not match layout "
            f"categories {[c.name for c in expected_nodes]}"
        )
    reference = graph_from_layout(layout)
    total = 0
    matched = 0
    for k in range(len(graph.loc)):
        if graph.loc[k] is not LocationRelation.UNKNOWN:
            total += 1
            matched += graph.loc[k] is reference.loc[k]
        if graph.size[k] is not SizeRelation.UNKNOWN:
            total += 1
            matched += graph.size[k] is reference.size[k]
    return matched / total if total else 1.0


# ---------------------------------------------------------------------------
# JSON wire formats


def layout_to_dict(layout: Layout) -> dict:
    return {
        "canvas_px": list(layout.canvas_px),
        "components": [
            {"category": cat.name, "bbox": [box.x, box.y, box.w, box.h]}
            for cat, box in layout.components
        ],
    }


def layout_from_dict(obj: object, categories: CategoryTable) -> Layout:
    if not isinstance(obj, dict):
        raise SchemaError("layout document must be a JSON object")
    canvas_px = obj.get("canvas_px")
    if (
        not isinstance(canvas_px, (list, tuple))
        or len(canvas_px) != 2
        or not all(isinstance(v, (int, float)) for v in canvas_px)
    ):
        raise SchemaError("canvas_px: expected [width, height]")
    raw_components = obj.get("components")
    if not isinstance(raw_components, list):
        raise SchemaError("components: expected a list")
    components: list[tuple[Category, BoundingBox]] = []
    for idx, entry in enumerate(raw_components):
        if not isinstance(entry, dict):
            raise SchemaError(f"components[{idx}]: expected an object")
        name = entry.get("category")
        if not isinstance(name, str):
            raise SchemaError(f"components[{idx}].category: expected a string")
        cat = categories.by_name(name)
        bbox = entry.get("bbox")
        if (
            not isinstance(bbox, list)
            or len(bbox) != 4
            or not all(isinstance(v, (int, float)) for v in bbox)
        ):
            raise SchemaError(f"components[{idx}].bbox: expected [x, y, w, h]")
        components.append((cat, BoundingBox(*(float(v) for v in bbox))))
    return Layout((int(canvas_px[0]), int(canvas_px[1])), tuple(components))


def layout_to_json(layout: Layout) -> str:
    return json.dumps(layout_to_dict(layout))


def layout_from_json(text: str, categories: CategoryTable) -> Layout:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return layout_from_dict(obj, categories)


def _node_to_wire(node: int) -> int:
    return -1 if node == 0 else node - 1


def graph_to_dict(graph: LayoutGraph, categories: CategoryTable) -> dict:
    loc_entries = []
    size_entries = []
    for k, (i, j) in enumerate(graph.pairs):
        if graph.loc[k] is not LocationRelation.UNKNOWN:
            loc_entries.append([_node_to_wire(i), graph.loc[k].value, _node_to_wire(j)])
        if graph.size[k] is not SizeRelation.UNKNOWN:
            size_entries.append([_node_to_wire(i), graph.size[k].value, _node_to_wire(j)])
    return {
        "categories": list(categories.names),
        "components": [c.name for c in graph.nodes[1:]],
        "loc": loc_entries,
        "size": size_entries,
    }


def graph_to_json(graph: LayoutGraph, categories: CategoryTable) -> str:
    return json.dumps(graph_to_dict(graph, categories))


_LOC_BY_NAME = {rel.value: rel for rel in LocationRelation}
_SIZE_BY_NAME = {rel.value: rel for rel in SizeRelation}


def _wire_to_node(idx: object, n_components: int, where: str) -> int:
    if not isinstance(idx, int) or isinstance(idx, bool):
        raise SchemaError(f"{where}: component index must be an integer, got {idx!r}")
    if idx == -1:
        return 0
    if not 0 <= idx < n_components:
        raise SchemaError(f"{where}: component index {idx} out of range")
    return idx + 1


def graph_from_dict(obj: object) -> tuple[LayoutGraph, CategoryTable]:
    """Parse the constraint wire format; omitted pairs mean unknown."""
    if not isinstance(obj, dict):
        raise SchemaError("graph document must be a JSON object")
    raw_cats = obj.get("categories")
    if not isinstance(raw_cats, list) or not all(isinstance(n, str) for n in raw_cats):
        raise SchemaError("categories: expected a list of names")
    try:
        table = CategoryTable(raw_cats)
    except ValidationError as exc:
        raise SchemaError(f"categories: {exc}") from exc
    raw_comps = obj.get("components")
    if not isinstance(raw_comps, list) or not all(isinstance(n, str) for n in raw_comps):
        raise SchemaError("components: expected a list of category names")
    comp_cats = [table.by_name(n) for n in raw_comps]
    for k, cat in enumerate(comp_cats):
        if cat.is_canvas:
            raise SchemaError(f"components[{k}]: the canvas cannot be a component")
    nodes = (table.canvas,) + tuple(comp_cats)
    graph = LayoutGraph.all_unknown(nodes)

    loc_updates: dict[tuple[int, int], LocationRelation] = {}
    size_updates: dict[tuple[int, int], SizeRelation] = {}

    def parse_entries(key: str, vocab: dict, mirror, updates: dict) -> None:
        entries = obj.get(key, [])
        if not isinstance(entries, list):
            raise SchemaError(f"{key}: expected a list of [i, relation, j] triples")
        for k, entry in enumerate(entries):
            where = f"{key}[{k}]"
            if not isinstance(entry, (list, tuple)) or len(entry) != 3:
                raise SchemaError(f"{where}: expected [i, relation, j]")
            raw_i, raw_rel, raw_j = entry
            if not isinstance(raw_rel, str) or raw_rel not in vocab:
                raise SchemaError(f"{where}: unknown relation name {raw_rel!r}")
            i = _wire_to_node(raw_i, len(comp_cats), where)
            j = _wire_to_node(raw_j, len(comp_cats), where)
            if i == j:
                raise SchemaError(f"{where}: self-relations are not allowed")
            rel = vocab[raw_rel]
            if i > j:
                i, j = j, i
                rel = mirror(rel)
            if (i, j) in updates:
                raise SchemaError(f"{where}: duplicate relation for pair ({raw_i}, {raw_j})")
            updates[(i, j)] = rel

    def mirror_loc_checked(rel: LocationRelation) -> LocationRelation:
        if rel.is_canvas_relation:
            raise SchemaError(
                f"canvas relation {rel.value!r} must be written with the canvas (-1) first"
            )
        return mirror_location(rel)

    parse_entries("loc", _LOC_BY_NAME, mirror_loc_checked, loc_updates)
    parse_entries("size", _SIZE_BY_NAME, mirror_size, size_updates)
    for (i, j), rel in loc_updates.items():
        if rel is LocationRelation.UNKNOWN:
            continue
        if i == 0 and not rel.is_canvas_relation:
            raise SchemaError(
                f"loc: relation {rel.value!r} for canvas pair (-1, {j - 1}) "
                "must come from the canvas vocabulary"
            )
        if i > 0 and rel.is_canvas_relation:
            raise SchemaError(
                f"loc: canvas relation {rel.value!r} used between components ({i - 1}, {j - 1})"
            )
    try:
        return graph.with_edges(loc_updates, size_updates), table
    except ValidationError as exc:
        raise SchemaError(str(exc)) from exc


def graph_from_json(text: str) -> tuple[LayoutGraph, CategoryTable]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from exc
    return graph_from_dict(obj)
