"""Stateless HTTP JSON API over one immutable loaded checkpoint.

Request and response bodies use the constraint/layout wire formats from
:mod:`ndn.core`.  Malformed bodies return 4xx with a field-level message;
inference failures return 5xx with an opaque id.  There is no live model
reloading: restart to swap checkpoints.
"""

from __future__ import annotations

import logging
import uuid
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from ..core import (
    SchemaError,
    ValidationError,
    graph_from_dict,
    graph_to_dict,
    layout_from_dict,
    layout_to_dict,
)
from .checkpoint import ModelCheckpoint
from .pipeline import LoadedModels, generate_layouts, recommend

logger = logging.getLogger(__name__)

MAX_SAMPLES = 64


def _bad_request(field: str, message: str) -> HTTPException:
    return HTTPException(status_code=400, detail={"field": field, "message": message})


def _expect(body: Any, field: str, types, default=None, required: bool = False):
    value = body.get(field, default) if isinstance(body, dict) else None
    if value is None:
        if required:
            raise _bad_request(field, "field is required")
        return default
    if types is not None and not isinstance(value, types):
        raise _bad_request(field, f"expected {types}, got {type(value).__name__}")
    return value


def create_app(checkpoint: ModelCheckpoint) -> FastAPI:
    models = LoadedModels.from_checkpoint(checkpoint)
    table = checkpoint.categories
    ckpt_hash = checkpoint.content_hash
    app = FastAPI(title="ndn layout service")

    @app.exception_handler(Exception)
    async def runtime_error_handler(request: Request, exc: Exception):
        error_id = uuid.uuid4().hex[:12]
        logger.exception("inference failure %s on %s", error_id, request.url.path)
        return JSONResponse(status_code=500, content={"error_id": error_id})

    def parse_constraints(body: dict):
        raw = _expect(body, "constraints", dict, required=True)
        try:
            graph, graph_table = graph_from_dict(raw)
        except SchemaError as exc:
            raise _bad_request("constraints", str(exc)) from exc
        if graph_table.names != table.names:
            raise _bad_request(
                "constraints.categories",
                f"expected the checkpoint vocabulary {list(table.names)}",
            )
        return graph

    def parse_fixed_sizes(body: dict, n_components: int) -> dict[int, tuple[float, float]]:
        raw = _expect(body, "fixed_sizes", dict, default={})
        out: dict[int, tuple[float, float]] = {}
        for key, value in raw.items():
            try:
                comp = int(key)
            except (TypeError, ValueError):
                raise _bad_request("fixed_sizes", f"bad component index {key!r}") from None
            if not 0 <= comp < n_components:
                raise _bad_request("fixed_sizes", f"component index {comp} out of range")
            if (
                not isinstance(value, (list, tuple))
                or len(value) != 2
                or not all(isinstance(v, (int, float)) for v in value)
            ):
                raise _bad_request("fixed_sizes", f"expected [w, h] for component {comp}")
            w, h = float(value[0]), float(value[1])
            if not (0 < w <= 1 and 0 < h <= 1):
                raise _bad_request("fixed_sizes", f"sizes must be in (0, 1], got {value}")
            out[comp + 1] = (w, h)
        return out

    @app.get("/api/health")
    def health():
        return {"status": "ok", "checkpoint": ckpt_hash}

    @app.get("/api/categories")
    def categories():
        return {"categories": list(table.names)}

    @app.post("/api/complete")
    async def complete(request: Request):
        body = await _json_body(request)
        graph = parse_constraints(body)
        mode = _expect(body, "mode", str, default="sample")
        if mode not in ("sample", "argmax"):
            raise _bad_request("mode", "expected 'sample' or 'argmax'")
        seed = _expect(body, "seed", int, default=0)
        completed = models.relnet.complete_graph(graph, mode=mode, seed=seed)
        return graph_to_dict(completed, table)

    @app.post("/api/generate")
    async def generate(request: Request):
        body = await _json_body(request)
        graph = parse_constraints(body)
        samples = _expect(body, "samples", int, default=1)
        if not 1 <= samples <= MAX_SAMPLES:
            raise _bad_request("samples", f"expected 1..{MAX_SAMPLES}")
        seed = _expect(body, "seed", int, default=0)
        apply_refine = bool(_expect(body, "refine", bool, default=True))
        fixed_sizes = parse_fixed_sizes(body, graph.num_components)
        canvas_px = _expect(body, "canvas_px", (list, tuple), default=[360, 640])
        if len(canvas_px) != 2 or not all(isinstance(v, (int, float)) and v > 0 for v in canvas_px):
            raise _bad_request("canvas_px", "expected [width, height]")
        try:
            outcome = generate_layouts(
                models,
                graph,
                num_samples=samples,
                seed=seed,
                fixed_sizes=fixed_sizes,
                apply_refine=apply_refine,
                canvas_px=(int(canvas_px[0]), int(canvas_px[1])),
            )
        except ValidationError as exc:
            raise _bad_request("constraints", str(exc)) from exc
        return {
            "layouts": [layout_to_dict(l) for l in outcome.layouts],
            "consistency": outcome.consistency,
            "reports": outcome.reports,
            "seed": seed,
            "checkpoint": ckpt_hash,
        }

    @app.post("/api/recommend")
    async def recommend_endpoint(request: Request):
        body = await _json_body(request)
        raw_layout = _expect(body, "layout", dict, required=True)
        try:
            placed = layout_from_dict(raw_layout, table)
        except (SchemaError, ValidationError) as exc:
            raise _bad_request("layout", str(exc)) from exc
        raw_targets = _expect(body, "targets", list, required=True)
        if not raw_targets or not all(isinstance(t, str) for t in raw_targets):
            raise _bad_request("targets", "expected a non-empty list of category names")
        try:
            targets = [table.by_name(t) for t in raw_targets]
        except SchemaError as exc:
            raise _bad_request("targets", str(exc)) from exc
        if any(t.is_canvas for t in targets):
            raise _bad_request("targets", "the canvas cannot be a target")
        mode = _expect(body, "mode", str, default="sample")
        if mode not in ("sample", "mean"):
            raise _bad_request("mode", "expected 'sample' or 'mean'")
        seed = _expect(body, "seed", int, default=0)
        try:
            boxes = recommend(placed, targets, models, mode=mode, seed=seed)
        except ValidationError as exc:
            raise _bad_request("layout", str(exc)) from exc
        return {
            "boxes": [[b.x, b.y, b.w, b.h] for b in boxes],
            "targets": raw_targets,
            "checkpoint": ckpt_hash,
        }

    return app


async def _json_body(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise HTTPException(
            status_code=400, detail={"field": "<body>", "message": f"invalid JSON: {exc}"}
        ) from exc
    if not isinstance(body, dict):
        raise HTTPException(
            status_code=400, detail={"field": "<body>", "message": "expected a JSON object"}
        )
    return body


def serve(checkpoint_path: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    """Blocking entry point used by the CLI."""
    import uvicorn

    app = create_app(ModelCheckpoint.load(checkpoint_path))
    uvicorn.run(app, host=host, port=port, log_level="info")
