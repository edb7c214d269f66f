"""Constraint-driven graphic layout generation toolkit."""

from .core import (
    BoundingBox,
    Category,
    CategoryTable,
    Layout,
    LayoutGraph,
    LocationRelation,
    SizeRelation,
    check_consistency,
    extract_canvas_relation,
    extract_location_relation,
    extract_size_relation,
    graph_from_layout,
)

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "Category",
    "CategoryTable",
    "Layout",
    "LayoutGraph",
    "LocationRelation",
    "SizeRelation",
    "check_consistency",
    "extract_canvas_relation",
    "extract_location_relation",
    "extract_size_relation",
    "graph_from_layout",
    "__version__",
]
