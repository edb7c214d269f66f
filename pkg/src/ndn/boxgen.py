"""Iterative bounding-box generation conditioned on a complete relation graph.

One conditional VAE step per component: a feature network reads the relation
graph once, a context network re-reads it at every step with the boxes placed
so far injected as 5-dim node slots (x, y, w, h, placed flag), and fully
connected heads encode/decode the current box.  Training uses teacher
forcing; inference feeds each decoded box back into the next step's slots
and samples the latent from a learned conditional prior.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import torch
from torch import Tensor, nn

from .core import (
    BoundingBox,
    Layout,
    LayoutGraph,
    ValidationError,
    graph_from_layout,
)
from .nngraph import (
    EMBED_DIM,
    HIDDEN_DIM,
    ConvStack,
    EmbeddingTable,
    GraphTensor,
    embed_graphs,
    mlp3,
)
from .relnet import LATENT_DIM, reparameterize

MIN_SIDE = 1e-3  # decoded boxes never collapse below this

CANVAS_SLOT = (0.0, 0.0, 1.0, 1.0, 1.0)


@dataclass
class GenerationRequest:
    """What to generate: a complete graph plus placement options.

    ``order`` and ``fixed_sizes`` use node indices (components are nodes
    1..n; node 0 is the canvas and is never placed).
    """

    graph: LayoutGraph
    order: tuple[int, ...] = ()
    fixed_sizes: dict[int, tuple[float, float]] = field(default_factory=dict)
    num_samples: int = 1
    seed: int = 0
    canvas_px: tuple[int, int] = (360, 640)

    def __post_init__(self) -> None:
        n = self.graph.num_components
        if not self.order:
            self.order = tuple(range(1, n + 1))
        if sorted(self.order) != list(range(1, n + 1)):
            raise ValidationError(f"order must be a permutation of 1..{n}, got {self.order}")
        for node, (w, h) in self.fixed_sizes.items():
            if not 1 <= node <= n:
                raise ValidationError(f"fixed size for unknown node {node}")
            if not (0 < w <= 1 and 0 < h <= 1):
                raise ValidationError(f"fixed size for node {node} must be in (0, 1]")
        if self.num_samples < 1:
            raise ValidationError("num_samples must be >= 1")


@dataclass
class LayoutLoss:
    total: Tensor
    reconstruction: Tensor  # L1 over all coordinates, summed per layout
    kl: Tensor  # posterior-vs-conditional-prior KL, averaged over steps
    size_reconstruction: Tensor  # (w, h) path, zero when disabled


def gaussian_kl(mu_q: Tensor, logvar_q: Tensor, mu_p: Tensor, logvar_p: Tensor) -> Tensor:
    """KL(N_q || N_p) between diagonal Gaussians, summed over the last dim."""
    return 0.5 * (
        (logvar_q.exp() + (mu_q - mu_p).pow(2)) / logvar_p.exp()
        - 1.0
        + logvar_p
        - logvar_q
    ).sum(dim=-1)


def box_l1(pred: Tensor, target: Tensor) -> Tensor:
    """Per-row sum of absolute coordinate differences, [..., 4] -> [...]."""
    return (pred - target).abs().sum(dim=-1)


class LayoutGenerator(nn.Module):
    def __init__(
        self,
        num_categories: int,
        emb_dim: int = EMBED_DIM,
        hidden: int = HIDDEN_DIM,
        latent_dim: int = LATENT_DIM,
    ):
        super().__init__()
        self.num_categories = num_categories
        self.hidden = hidden
        self.latent_dim = latent_dim
        self.table = EmbeddingTable(num_categories, emb_dim)
        self.feature_net = ConvStack(node_in=emb_dim, edge_in=emb_dim, hidden=hidden)
        self.context_net = ConvStack(node_in=hidden + 5, edge_in=emb_dim, hidden=hidden)
        self.posterior_enc = mlp3(4 + hidden, hidden, 2 * latent_dim)
        self.prior_enc = mlp3(hidden, hidden, 2 * latent_dim)
        self.size_enc = mlp3(2 + hidden, hidden, 2 * latent_dim)
        self.decoder = mlp3(latent_dim + hidden, hidden, 4)
        self.register_buffer("trained_steps", torch.zeros((), dtype=torch.long))

    def mark_trained(self, steps: int) -> None:
        self.trained_steps += steps

    @property
    def config(self) -> dict:
        return {
            "num_categories": self.num_categories,
            "emb_dim": self.table.emb_dim,
            "hidden": self.hidden,
            "latent_dim": self.latent_dim,
        }

    # -- graph reading -------------------------------------------------------

    def _embedded(self, graphs: Sequence[LayoutGraph]):
        for g in graphs:
            if not g.is_complete:
                raise ValidationError("generator requires complete graphs")
        return embed_graphs(graphs, self.table)

    def encode_features_batch(self, graphs: Sequence[LayoutGraph]):
        """Relation-aware node features: ([total_nodes, hidden], GraphTensor, BatchIndex)."""
        gt, index = self._embedded(graphs)
        feats = self.feature_net(gt).node_feats
        return feats, gt, index

    def encode_features(self, graph: LayoutGraph) -> Tensor:
        """[n+1, hidden] features for one complete graph."""
        feats, _, _ = self.encode_features_batch([graph])
        return feats

    def context_vectors(
        self,
        feats: Tensor,
        slots: Tensor,
        base: GraphTensor,
        target_nodes: Tensor,
    ) -> Tensor:
        """Run the context network and gather the rows of the nodes being placed."""
        ctx_in = GraphTensor(
            torch.cat([feats, slots], dim=1),
            base.edge_feats,
            base.edge_index,
            base.node_graph,
        )
        return self.context_net(ctx_in).node_feats[target_nodes]

    def update_context(self, graph: LayoutGraph, placed: Mapping[int, BoundingBox], k: int) -> Tensor:
        """Context vector c_k for node k given the boxes placed so far."""
        if not 1 <= k <= graph.num_components:
            raise ValidationError(f"node {k} out of range")
        if k in placed:
            raise ValidationError(f"node {k} is already placed")
        feats = self.encode_features(graph)
        gt, _ = self._embedded([graph])
        slots = self._slots(graph.num_nodes, placed)
        return self.context_vectors(feats, slots, gt, torch.tensor([k]))[0]

    @staticmethod
    def _slots(num_nodes: int, placed: Mapping[int, BoundingBox]) -> Tensor:
        slots = torch.zeros((num_nodes, 5))
        slots[0] = torch.tensor(CANVAS_SLOT)
        for node, box in placed.items():
            if not 1 <= node < num_nodes:
                raise ValidationError(f"placed node {node} out of range")
            slots[node] = torch.tensor((*box.as_tuple(), 1.0))
        return slots

    # -- single-step CVAE ----------------------------------------------------

    def _posterior(self, box: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        return self.posterior_enc(torch.cat([box, c], dim=-1)).chunk(2, dim=-1)

    def _prior(self, c: Tensor) -> tuple[Tensor, Tensor]:
        return self.prior_enc(c).chunk(2, dim=-1)

    def _size_posterior(self, wh: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        return self.size_enc(torch.cat([wh, c], dim=-1)).chunk(2, dim=-1)

    def _decode(self, z: Tensor, c: Tensor) -> Tensor:
        return torch.sigmoid(self.decoder(torch.cat([z, c], dim=-1)))

    def box_step(
        self,
        c: Tensor,
        mode: str = "prior",
        gt_box: BoundingBox | None = None,
        seed: int | None = None,
    ) -> tuple[BoundingBox, Tensor, Tensor]:
        """Decode one box from a context vector.

        mode "posterior" encodes the given ground-truth box (training view);
        mode "prior" samples from the conditional prior; mode "prior-mean"
        decodes deterministically from the prior mean.
        """
        c = c.reshape(1, -1)
        generator = None
        if seed is not None:
            generator = torch.Generator()
            generator.manual_seed(seed)
        if mode == "posterior":
            if gt_box is None:
                raise ValidationError("posterior mode requires the ground-truth box")
            mu, logvar = self._posterior(torch.tensor([gt_box.as_tuple()]), c)
            z = reparameterize(mu, logvar, generator)
        elif mode == "prior":
            mu, logvar = self._prior(c)
            z = reparameterize(mu, logvar, generator)
        elif mode == "prior-mean":
            mu, logvar = self._prior(c)
            z = mu
        else:
            raise ValidationError(f"unknown box_step mode {mode!r}")
        decoded = self._decode(z, c)[0]
        return self._to_box(decoded), mu[0], logvar[0]

    @staticmethod
    def _to_box(
        decoded: Tensor, fixed: tuple[float, float] | None = None
    ) -> BoundingBox:
        x, y, w, h = decoded.detach().tolist()
        if fixed is not None:
            w, h = fixed
        else:
            w = min(max(w, MIN_SIDE), 1.0)
            h = min(max(h, MIN_SIDE), 1.0)
        x = min(max(x, 0.0), 1.0 - w)
        y = min(max(y, 0.0), 1.0 - h)
        return BoundingBox(x, y, w, h)

    # -- training loss ---------------------------------------------------------

    def layout_loss(
        self,
        graphs: Sequence[LayoutGraph],
        layouts: Sequence[Layout],
        orders: Sequence[Sequence[int]],
        generator: torch.Generator | None = None,
        fixed_size_mode: bool = True,
        lambda_recon: float = 1.0,
        lambda_kl: float = 1.0,
        lambda_size_recon: float = 10.0,
    ) -> LayoutLoss:
        """Teacher-forced objective over a batch of same-length layouts."""
        n = len(layouts[0])
        if any(len(l) != n for l in layouts):
            raise ValidationError("layout_loss batches must share a component count")
        if any(sorted(o) != list(range(1, n + 1)) for o in orders):
            raise ValidationError("each order must be a permutation of 1..n")
        feats, base, index = self.encode_features_batch(graphs)
        batch = len(layouts)
        slots = torch.zeros((feats.shape[0], 5))
        for off in index.node_offsets:
            slots[off] = torch.tensor(CANVAS_SLOT)
        recon = feats.new_zeros(batch)
        size_recon = feats.new_zeros(batch)
        kl_steps = []
        offsets = torch.tensor(index.node_offsets)
        for s in range(n):
            step_nodes = offsets + torch.tensor([o[s] for o in orders])
            c = self.context_vectors(feats, slots, base, step_nodes)
            boxes = torch.tensor(
                [layouts[b].boxes[orders[b][s] - 1].as_tuple() for b in range(batch)],
                dtype=feats.dtype,
            )
            mu_q, logvar_q = self._posterior(boxes, c)
            z = reparameterize(mu_q, logvar_q, generator)
            decoded = self._decode(z, c)
            recon = recon + box_l1(decoded, boxes)
            mu_p, logvar_p = self._prior(c)
            kl_steps.append(gaussian_kl(mu_q, logvar_q, mu_p, logvar_p))
            if fixed_size_mode:
                mu_s, logvar_s = self._size_posterior(boxes[:, 2:4], c)
                z_s = reparameterize(mu_s, logvar_s, generator)
                decoded_s = self._decode(z_s, c)
                size_recon = size_recon + box_l1(decoded_s[:, 2:4], boxes[:, 2:4])
            slots = slots.clone()
            slots[step_nodes] = torch.cat([boxes, boxes.new_ones(batch, 1)], dim=1)
        l_recon = recon.mean()
        l_kl = torch.stack(kl_steps).mean()
        l_size = size_recon.mean()
        total = lambda_recon * l_recon + lambda_kl * l_kl
        if fixed_size_mode:
            total = total + lambda_size_recon * l_size
        return LayoutLoss(total=total, reconstruction=l_recon, kl=l_kl, size_reconstruction=l_size)

    # -- inference ---------------------------------------------------------------

    @torch.no_grad()
    def place_nodes(
        self,
        graph: LayoutGraph,
        placed: Mapping[int, BoundingBox],
        nodes: Sequence[int],
        mode: str = "prior",
        generator: torch.Generator | None = None,
        fixed_sizes: Mapping[int, tuple[float, float]] | None = None,
    ) -> list[BoundingBox]:
        """Place the given nodes sequentially, feeding each box back as context.

        mode "prior" samples the latent from the conditional prior,
        "prior-mean" decodes deterministically from its mean.
        """
        if mode not in ("prior", "prior-mean"):
            raise ValidationError(f"unknown placement mode {mode!r}")
        if int(self.trained_steps) == 0:
            raise ValidationError("layout generator has not been trained")
        fixed_sizes = fixed_sizes or {}
        feats, base, _ = self.encode_features_batch([graph])
        slots = self._slots(graph.num_nodes, placed)
        out: list[BoundingBox] = []
        for node in nodes:
            c = self.context_vectors(feats, slots, base, torch.tensor([node]))
            mu_p, logvar_p = self._prior(c)
            z = reparameterize(mu_p, logvar_p, generator) if mode == "prior" else mu_p
            decoded = self._decode(z, c)[0]
            box = self._to_box(decoded, fixed_sizes.get(node))
            out.append(box)
            slots = slots.clone()
            slots[node] = torch.tensor((*box.as_tuple(), 1.0))
        return out

    @torch.no_grad()
    def generate(self, request: GenerationRequest) -> list[Layout]:
        """Sample ``num_samples`` layouts for a complete constraint graph."""
        graph = request.graph
        n = graph.num_components
        generator = torch.Generator()
        generator.manual_seed(request.seed)
        out: list[Layout] = []
        for _ in range(request.num_samples):
            placed = self.place_nodes(
                graph, {}, request.order, "prior", generator, request.fixed_sizes
            )
            boxes = dict(zip(request.order, placed))
            out.append(
                Layout(
                    request.canvas_px,
                    tuple((graph.nodes[k], boxes[k]) for k in range(1, n + 1)),
                )
            )
        return out

    @torch.no_grad()
    def leave_one_out_predict(self, layout: Layout, target_index: int) -> BoundingBox:
        """Re-predict one component's box with every other box fixed.

        Deterministic: decodes from the conditional prior mean.
        """
        if not 0 <= target_index < len(layout):
            raise ValidationError(f"target index {target_index} out of range")
        graph = graph_from_layout(layout)
        placed = {
            k + 1: box for k, box in enumerate(layout.boxes) if k != target_index
        }
        return self.place_nodes(graph, placed, [target_index + 1], "prior-mean")[0]
