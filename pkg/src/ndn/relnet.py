"""Relation prediction: translate a partial constraint graph into a complete one.

A conditional graph-to-graph translator: an encoder reads the complete
target graph into a 32-dim Gaussian latent (training only), a translator
reads the partial graph with the latent concatenated to every node feature,
and a per-edge predictor emits logits over both relation vocabularies.
Known edges are hard constraints: completion never overwrites them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
from torch import Tensor, nn
from torch.nn import functional as F

from .core import (
    CANVAS_LOCATION_CLASSES,
    COMPONENT_LOCATION_CLASSES,
    LOCATION_NUM_CLASSES,
    SIZE_NUM_CLASSES,
    LayoutGraph,
    LocationRelation,
    SizeRelation,
    ValidationError,
)
from .nngraph import (
    EMBED_DIM,
    HIDDEN_DIM,
    ConvStack,
    EmbeddingTable,
    embed_graphs,
    graph_pool,
    mlp3,
)

LATENT_DIM = 32

_LOC_CLASSES = list(LocationRelation)[:LOCATION_NUM_CLASSES]
_SIZE_CLASSES = list(SizeRelation)[:SIZE_NUM_CLASSES]


def gaussian_kl_standard(mu: Tensor, logvar: Tensor) -> Tensor:
    """KL(N(mu, sigma^2) || N(0, I)), summed over dims, averaged over batch."""
    kl = 0.5 * (mu.pow(2) + logvar.exp() - 1.0 - logvar).sum(dim=-1)
    return kl.mean()


def reparameterize(mu: Tensor, logvar: Tensor, generator: torch.Generator | None = None) -> Tensor:
    eps = torch.randn(mu.shape, generator=generator, dtype=mu.dtype, device=mu.device)
    return mu + torch.exp(0.5 * logvar) * eps


@dataclass
class RelationLoss:
    total: Tensor  # L_rel
    classification: Tensor  # L_cls
    kl: Tensor  # L_KL1


@dataclass
class EdgeLogits:
    """Per-edge class scores for a batch of graphs, excluding unknown."""

    loc: Tensor  # [total_pairs, LOCATION_NUM_CLASSES]
    size: Tensor  # [total_pairs, SIZE_NUM_CLASSES]
    pair_offsets: list[int]  # start row of each graph's pairs


class RelationPredictor(nn.Module):
    def __init__(
        self,
        num_categories: int,
        emb_dim: int = EMBED_DIM,
        hidden: int = HIDDEN_DIM,
        latent_dim: int = LATENT_DIM,
    ):
        super().__init__()
        self.num_categories = num_categories
        self.latent_dim = latent_dim
        self.table = EmbeddingTable(num_categories, emb_dim)
        self.encoder = ConvStack(node_in=emb_dim, edge_in=emb_dim, hidden=hidden)
        self.mu_head = nn.Linear(hidden, latent_dim)
        self.logvar_head = nn.Linear(hidden, latent_dim)
        self.translator = ConvStack(node_in=emb_dim + latent_dim, edge_in=emb_dim, hidden=hidden)
        self.loc_head = mlp3(hidden, hidden, LOCATION_NUM_CLASSES)
        self.size_head = mlp3(hidden, hidden, SIZE_NUM_CLASSES)
        self.register_buffer("trained_steps", torch.zeros((), dtype=torch.long))

    def mark_trained(self, steps: int) -> None:
        self.trained_steps += steps

    @property
    def config(self) -> dict:
        return {
            "num_categories": self.num_categories,
            "emb_dim": self.table.emb_dim,
            "hidden": self.mu_head.in_features,
            "latent_dim": self.latent_dim,
        }

    # -- encoding ----------------------------------------------------------

    def encode_batch(self, graphs: Sequence[LayoutGraph]) -> tuple[Tensor, Tensor]:
        """Posterior parameters (mu, logvar), one row per graph."""
        for g in graphs:
            if not g.is_complete:
                raise ValidationError("encoder requires complete graphs (no unknown edges)")
        gt, _ = embed_graphs(graphs, self.table)
        pooled = graph_pool(self.encoder(gt))
        return self.mu_head(pooled), self.logvar_head(pooled)

    def encode_complete(self, graph: LayoutGraph) -> tuple[Tensor, Tensor]:
        """Posterior (mu, logvar) for one complete graph, both shaped [latent_dim]."""
        mu, logvar = self.encode_batch([graph])
        return mu[0], logvar[0]

    # -- translation -------------------------------------------------------

    def predict_edges(self, graph: LayoutGraph, z: Tensor) -> tuple[Tensor, Tensor]:
        """(loc_logits [P, 19], size_logits [P, 3]) for one graph and one z [32]."""
        if z.ndim != 1 or z.shape[0] != self.latent_dim:
            raise ValidationError(f"z must be a vector of length {self.latent_dim}")
        logits = self.predict_edges_batch([graph], z.unsqueeze(0))
        return logits.loc, logits.size

    def predict_edges_batch(self, graphs: Sequence[LayoutGraph], z: Tensor) -> EdgeLogits:
        """Logits for every edge of the complete edge set, known edges included.

        z is [B, latent_dim]; row b is concatenated to every node feature of
        graph b before translation.
        """
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ValidationError(f"z must be [batch, {self.latent_dim}]")
        counts = [g.num_nodes for g in graphs]
        z_rows = torch.repeat_interleave(z, torch.tensor(counts), dim=0)
        gt, index = embed_graphs(graphs, self.table)
        gt.node_feats = torch.cat([gt.node_feats, z_rows], dim=1)
        out = self.translator(gt)
        loc_rows = torch.cat(
            [out.edge_feats[a:b] for a, b in index.loc_slices], dim=0
        )
        size_rows = torch.cat(
            [out.edge_feats[a:b] for a, b in index.size_slices], dim=0
        )
        pair_offsets = []
        total = 0
        for a, b in index.loc_slices:
            pair_offsets.append(total)
            total += b - a
        return EdgeLogits(self.loc_head(loc_rows), self.size_head(size_rows), pair_offsets)

    # -- losses ------------------------------------------------------------

    def relation_loss(
        self,
        logits: EdgeLogits,
        targets: Sequence[LayoutGraph],
        mu: Tensor,
        logvar: Tensor,
        lambda_cls: float = 1.0,
        lambda_kl: float = 0.005,
    ) -> RelationLoss:
        """Cross-entropy over all edges of both heads plus the latent KL."""
        loc_targets = torch.tensor(
            [rel.index for g in targets for rel in g.loc], dtype=torch.long
        )
        size_targets = torch.tensor(
            [rel.index for g in targets for rel in g.size], dtype=torch.long
        )
        if loc_targets.shape[0] != logits.loc.shape[0]:
            raise ValidationError("target edge count does not match logits")
        if int(loc_targets.max()) >= LOCATION_NUM_CLASSES or int(size_targets.max()) >= SIZE_NUM_CLASSES:
            raise ValidationError("targets must be complete graphs (no unknown)")
        l_cls = F.cross_entropy(logits.loc, loc_targets) + F.cross_entropy(
            logits.size, size_targets
        )
        l_kl = gaussian_kl_standard(mu, logvar)
        total = lambda_cls * l_cls + lambda_kl * l_kl
        return RelationLoss(total=total, classification=l_cls, kl=l_kl)

    # -- inference ---------------------------------------------------------

    @torch.no_grad()
    def complete_graph(
        self,
        partial: LayoutGraph,
        mode: str = "sample",
        seed: int | None = None,
    ) -> LayoutGraph:
        """Fill every unknown edge; known edges are copied verbatim.

        mode "sample" draws z ~ N(0, I) (seeded); mode "argmax" uses z = 0.
        Each unknown edge takes the argmax class of its own sub-vocabulary
        (canvas edges only take canvas values, component edges only
        component values); ties resolve to the lowest class index.
        """
        if mode not in ("sample", "argmax"):
            raise ValidationError(f"mode must be 'sample' or 'argmax', got {mode!r}")
        if int(self.trained_steps) == 0:
            raise ValidationError("relation predictor has not been trained")
        if mode == "sample":
            generator = torch.Generator()
            if seed is not None:
                generator.manual_seed(seed)
            z = torch.randn((1, self.latent_dim), generator=generator)
        else:
            z = torch.zeros((1, self.latent_dim))
        logits = self.predict_edges_batch([partial], z)
        loc_logits = logits.loc.clone()
        comp_mask = torch.full((LOCATION_NUM_CLASSES,), float("-inf"))
        comp_mask[list(COMPONENT_LOCATION_CLASSES)] = 0.0
        canvas_mask = torch.full((LOCATION_NUM_CLASSES,), float("-inf"))
        canvas_mask[list(CANVAS_LOCATION_CLASSES)] = 0.0
        loc_updates: dict[tuple[int, int], LocationRelation] = {}
        size_updates: dict[tuple[int, int], SizeRelation] = {}
        for k, (i, j) in enumerate(partial.pairs):
            if partial.loc[k] is LocationRelation.UNKNOWN:
                mask = canvas_mask if i == 0 else comp_mask
                cls = int(torch.argmax(loc_logits[k] + mask).item())
                loc_updates[(i, j)] = _LOC_CLASSES[cls]
            if partial.size[k] is SizeRelation.UNKNOWN:
                cls = int(torch.argmax(logits.size[k]).item())
                size_updates[(i, j)] = _SIZE_CLASSES[cls]
        return partial.with_edges(loc_updates, size_updates)
