"""Command line interface.

Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.
Every command is non-interactive; all outputs are files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..core import (
    SchemaError,
    ValidationError,
    graph_from_json,
    graph_from_layout,
    graph_to_json,
    layout_from_json,
    layout_to_json,
)
from ..data import (
    DatasetManifest,
    GRAMMARS,
    grammar_categories,
    load_dataset,
    split_dataset,
    synth_generate,
    write_dataset,
)
from .checkpoint import ENV_CHECKPOINT, ModelCheckpoint
from .config import ORDER_STRATEGIES, TrainingConfig
from .pipeline import LoadedModels, generate_layouts, recommend
from .training import TrainingDiverged, train_all

checkpoint_option = click.option(
    "--checkpoint",
    envvar=ENV_CHECKPOINT,
    required=True,
    type=click.Path(dir_okay=False),
    help=f"Checkpoint file (or set {ENV_CHECKPOINT}).",
)


@click.group()
def cli():
    """Constraint-driven layout generation toolkit."""


@cli.command()
@click.option("--grammar", type=click.Choice(GRAMMARS), default="mobile-ui", show_default=True)
@click.option("--n", type=int, default=1000, show_default=True, help="Number of layouts.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output dataset directory.")
def synth(grammar: str, n: int, seed: int, out: str):
    """Write a synthetic corpus: one layout JSON per file plus a manifest."""
    layouts = synth_generate(n, seed=seed, grammar=grammar)
    manifest = write_dataset(
        layouts, Path(out), grammar_categories(grammar), grammar=grammar, split_seed=seed
    )
    click.echo(f"wrote {len(layouts)} layouts and {manifest.root / 'manifest.json'}")


@cli.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(), help="Checkpoint output path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--batch", type=int, default=64, show_default=True)
@click.option("--lr", type=float, default=1e-4, show_default=True)
@click.option("--relnet-steps", type=int, default=3000, show_default=True)
@click.option("--boxgen-steps", type=int, default=8000, show_default=True)
@click.option("--refiner-steps", type=int, default=2500, show_default=True)
@click.option("--classifier-steps", type=int, default=1500, show_default=True)
@click.option("--order", type=click.Choice(ORDER_STRATEGIES), default="random", show_default=True)
@click.option("--no-classifier", is_flag=True, help="Skip training the FID classifier.")
@click.option("--curves-dir", type=click.Path(), default=None, help="Where to write loss CSVs.")
def train(
    dataset: str,
    out: str,
    seed: int,
    batch: int,
    lr: float,
    relnet_steps: int,
    boxgen_steps: int,
    refiner_steps: int,
    classifier_steps: int,
    order: str,
    no_classifier: bool,
    curves_dir: str | None,
):
    """Train all modules on a dataset directory and write one checkpoint."""
    manifest = DatasetManifest.load(Path(dataset))
    result = load_dataset(manifest)
    if result.skipped:
        click.echo(f"skipped {result.skipped} invalid files", err=True)
    splits = split_dataset(result.layouts, manifest)
    config = TrainingConfig(
        learning_rate=lr,
        batch_size=batch,
        relnet_steps=relnet_steps,
        boxgen_steps=boxgen_steps,
        refiner_steps=refiner_steps,
        classifier_steps=classifier_steps,
        seed=seed,
        order_strategy=order,
        with_classifier=not no_classifier,
    )
    ckpt = train_all(splits["train"], manifest.categories, config, out_dir=curves_dir)
    path = ckpt.save(out)
    click.echo(f"wrote checkpoint {path} ({ckpt.content_hash})")


def _load_models(checkpoint: str) -> LoadedModels:
    return LoadedModels.from_checkpoint(ModelCheckpoint.load(checkpoint))


@cli.command()
@click.option("--constraints", "constraints_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--mode", type=click.Choice(["sample", "argmax"]), default="sample", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@checkpoint_option
def complete(constraints_path: str, out: str, mode: str, seed: int, checkpoint: str):
    """Fill the unknown relations of a partial constraint graph."""
    models = _load_models(checkpoint)
    graph, table = graph_from_json(Path(constraints_path).read_text())
    if table.names != models.checkpoint.categories.names:
        raise ValidationError(
            f"constraint categories {list(table.names)} do not match the checkpoint"
        )
    completed = models.relnet.complete_graph(graph, mode=mode, seed=seed)
    Path(out).write_text(graph_to_json(completed, table))
    click.echo(f"wrote {out}")


@cli.command()
@click.option("--constraints", "constraints_path", required=True, type=click.Path(exists=True))
@click.option("--samples", type=int, default=4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@click.option("--no-refine", is_flag=True, help="Skip the refinement pass.")
@click.option(
    "--fixed-size",
    "fixed_sizes",
    multiple=True,
    help="COMPONENT=WxH, e.g. 2=0.3x0.1 (repeatable).",
)
@click.option("--canvas-px", default="360x640", show_default=True, help="WxH pixels.")
@checkpoint_option
def generate(
    constraints_path: str,
    samples: int,
    seed: int,
    out: str,
    no_refine: bool,
    fixed_sizes: tuple[str, ...],
    canvas_px: str,
    checkpoint: str,
):
    """Generate layouts for a (possibly partial) constraint graph."""
    models = _load_models(checkpoint)
    graph, table = graph_from_json(Path(constraints_path).read_text())
    if table.names != models.checkpoint.categories.names:
        raise ValidationError(
            f"constraint categories {list(table.names)} do not match the checkpoint"
        )
    sizes: dict[int, tuple[float, float]] = {}
    for spec_str in fixed_sizes:
        try:
            comp, wh = spec_str.split("=")
            w, h = wh.lower().split("x")
            sizes[int(comp) + 1] = (float(w), float(h))
        except ValueError:
            raise ValidationError(f"bad --fixed-size {spec_str!r}, expected COMPONENT=WxH") from None
    try:
        cw, ch = (int(v) for v in canvas_px.lower().split("x"))
    except ValueError:
        raise ValidationError(f"bad --canvas-px {canvas_px!r}, expected WxH") from None
    outcome = generate_layouts(
        models,
        graph,
        num_samples=samples,
        seed=seed,
        fixed_sizes=sizes,
        apply_refine=not no_refine,
        canvas_px=(cw, ch),
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, layout in enumerate(outcome.layouts):
        (out_dir / f"sample_{k:03d}.json").write_text(layout_to_json(layout))
    summary = {
        "samples": samples,
        "seed": seed,
        "consistency": outcome.consistency,
        "reports": outcome.reports,
        "checkpoint": models.checkpoint.content_hash,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2))
    click.echo(f"wrote {samples} layouts to {out_dir}")


@cli.command("refine")
@click.option("--layout", "layout_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@checkpoint_option
def refine_cmd(layout_path: str, out: str, checkpoint: str):
    """Refine an existing layout toward better alignment."""
    models = _load_models(checkpoint)
    layout = layout_from_json(Path(layout_path).read_text(), models.checkpoint.categories)
    refined = models.refiner.refine(graph_from_layout(layout), layout)
    Path(out).write_text(layout_to_json(refined))
    click.echo(f"wrote {out}")


@cli.command("recommend")
@click.option("--layout", "layout_path", required=True, type=click.Path(exists=True))
@click.option("--targets", required=True, help="Comma-separated category names.")
@click.option("--mode", type=click.Choice(["sample", "mean"]), default="sample", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
@checkpoint_option
def recommend_cmd(layout_path: str, targets: str, mode: str, seed: int, out: str, checkpoint: str):
    """Recommend boxes for new components on a partial canvas."""
    models = _load_models(checkpoint)
    table = models.checkpoint.categories
    placed = layout_from_json(Path(layout_path).read_text(), table)
    target_cats = [table.by_name(name.strip()) for name in targets.split(",") if name.strip()]
    boxes = recommend(placed, target_cats, models, mode=mode, seed=seed)
    payload = {
        "targets": [c.name for c in target_cats],
        "boxes": [[b.x, b.y, b.w, b.h] for b in boxes],
    }
    Path(out).write_text(json.dumps(payload, indent=2))
    click.echo(f"wrote {out}")


@cli.command("eval")
@click.option("--dataset", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--samples", type=int, default=4, show_default=True, help="Samples per design.")
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--constraints",
    "constraint_mode",
    type=click.Choice(["all", "none"]),
    default="all",
    show_default=True,
)
@click.option("--max-designs", type=int, default=None, help="Cap on test designs.")
@checkpoint_option
def eval_cmd(
    dataset: str,
    report_path: str,
    samples: int,
    trials: int,
    seed: int,
    constraint_mode: str,
    max_designs: int | None,
    checkpoint: str,
):
    """Evaluate a checkpoint on a dataset's test split; write a JSON report."""
    from .evaluation import run_evaluation

    models = _load_models(checkpoint)
    manifest = DatasetManifest.load(Path(dataset))
    result = load_dataset(manifest)
    splits = split_dataset(result.layouts, manifest)
    report = run_evaluation(
        models,
        splits["train"],
        splits["test"],
        samples_per_design=samples,
        trials=trials,
        seed=seed,
        constraint_mode=constraint_mode,
        max_designs=max_designs,
    )
    Path(report_path).write_text(report.to_json())
    click.echo(f"wrote {report_path}")


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@checkpoint_option
def serve(host: str, port: int, checkpoint: str):
    """Run the inference HTTP service."""
    from .service import serve as run_server

    run_server(checkpoint, host=host, port=port)


def main(argv: list[str] | None = None) -> None:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (ValidationError, SchemaError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except TrainingDiverged as exc:
        click.echo(f"training diverged: {exc}", err=True)
        sys.exit(2)
    except click.exceptions.Abort:
        sys.exit(1)
    except Exception as exc:  # pragma: no cover - safety net
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
