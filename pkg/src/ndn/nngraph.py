"""Message-passing building blocks shared by every neural module.

A relation graph is embedded into a flat :class:`GraphTensor`: one feature
row per node, one per edge, with location and size edges living side by side
in a single edge list (each canonical pair contributes two parallel edges).
Graph convolutions use triple updates: per edge (i, r, j) an MLP maps the
concatenated (v_i, e_r, v_j) to candidate features for all three, nodes then
average their incident candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import torch
from torch import Tensor, nn

from .core import (
    LOCATION_VOCAB_SIZE,
    SIZE_VOCAB_SIZE,
    LayoutGraph,
    ValidationError,
)

HIDDEN_DIM = 128
EMBED_DIM = 64
LEAKY_SLOPE = 0.2


@dataclass
class GraphTensor:
    """Numeric graph batch: the currency of all neural modules."""

    node_feats: Tensor  # [N, Dn]
    edge_feats: Tensor  # [M, De]
    edge_index: Tensor  # [M, 2] long, (src, dst)
    node_graph: Tensor | None = None  # [N] long, graph id per node when batched

    def __post_init__(self) -> None:
        if self.node_feats.ndim != 2 or self.edge_feats.ndim != 2:
            raise ValidationError("node and edge features must be 2-D")
        if self.edge_index.shape != (self.edge_feats.shape[0], 2):
            raise ValidationError("edge_index must be [M, 2]")
        if self.edge_index.numel() and (
            self.edge_index.min() < 0 or self.edge_index.max() >= self.node_feats.shape[0]
        ):
            raise ValidationError("edge_index out of node range")

    @property
    def num_nodes(self) -> int:
        return self.node_feats.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edge_feats.shape[0]


@dataclass
class BatchIndex:
    """Bookkeeping for a batch of graphs packed into one GraphTensor.

    Edge layout per graph g: its P_g location edges first, then its P_g size
    edges, all blocks concatenated in graph order.
    """

    node_offsets: list[int]  # start node of each graph
    node_counts: list[int]
    loc_slices: list[tuple[int, int]]  # [start, stop) into the edge list
    size_slices: list[tuple[int, int]]

    @property
    def num_graphs(self) -> int:
        return len(self.node_offsets)


class EmbeddingTable(nn.Module):
    """Trained dictionary mapping for categories and both relation vocabularies."""

    def __init__(self, num_categories: int, emb_dim: int = EMBED_DIM):
        super().__init__()
        self.num_categories = num_categories
        self.emb_dim = emb_dim
        self.category = nn.Embedding(num_categories, emb_dim)
        self.loc_relation = nn.Embedding(LOCATION_VOCAB_SIZE, emb_dim)
        self.size_relation = nn.Embedding(SIZE_VOCAB_SIZE, emb_dim)


def embed_graphs(
    graphs: Sequence[LayoutGraph],
    table: EmbeddingTable,
    extra_node_feats: Tensor | None = None,
) -> tuple[GraphTensor, BatchIndex]:
    """Embed a batch of graphs into one GraphTensor.

    extra_node_feats, when given, is [total_nodes, K] and is concatenated to
    the category embeddings row by row (used to inject box coordinates).
    """
    device = table.category.weight.device
    cat_ids: list[int] = []
    loc_ids_all: list[list[int]] = []
    size_ids_all: list[list[int]] = []
    node_offsets: list[int] = []
    node_counts: list[int] = []
    pair_lists: list[list[tuple[int, int]]] = []
    offset = 0
    for g in graphs:
        node_offsets.append(offset)
        node_counts.append(g.num_nodes)
        cat_ids.extend(c.id for c in g.nodes)
        if any(c.id >= table.num_categories for c in g.nodes):
            raise ValidationError("category id outside embedding table range")
        loc_ids_all.append([r.index for r in g.loc])
        size_ids_all.append([r.index for r in g.size])
        pair_lists.append([(i + offset, j + offset) for i, j in g.pairs])
        offset += g.num_nodes

    edge_index: list[tuple[int, int]] = []
    loc_slices: list[tuple[int, int]] = []
    size_slices: list[tuple[int, int]] = []
    loc_ids: list[int] = []
    size_ids: list[int] = []
    for pairs, locs, sizes in zip(pair_lists, loc_ids_all, size_ids_all):
        start = len(edge_index)
        edge_index.extend(pairs)
        loc_slices.append((start, len(edge_index)))
        loc_ids.extend(locs)
        start = len(edge_index)
        edge_index.extend(pairs)
        size_slices.append((start, len(edge_index)))
        size_ids.extend(sizes)

    node_feats = table.category(torch.tensor(cat_ids, dtype=torch.long, device=device))
    if extra_node_feats is not None:
        if extra_node_feats.shape[0] != node_feats.shape[0]:
            raise ValidationError(
                f"extra node features have {extra_node_feats.shape[0]} rows, "
                f"expected {node_feats.shape[0]}"
            )
        node_feats = torch.cat([node_feats, extra_node_feats.to(node_feats.dtype)], dim=1)

    n_loc = len(loc_ids)
    edge_feats = torch.empty(0, table.emb_dim, device=device)
    order = torch.empty(0, dtype=torch.long)
    if edge_index:
        # Edge blocks interleave loc/size per graph; embed per kind then scatter back.
        loc_emb = table.loc_relation(torch.tensor(loc_ids, dtype=torch.long, device=device))
        size_emb = table.size_relation(torch.tensor(size_ids, dtype=torch.long, device=device))
        edge_feats = torch.empty(n_loc + len(size_ids), table.emb_dim, device=device)
        positions_loc = [p for s in loc_slices for p in range(*s)]
        positions_size = [p for s in size_slices for p in range(*s)]
        edge_feats[torch.tensor(positions_loc, dtype=torch.long)] = loc_emb
        edge_feats[torch.tensor(positions_size, dtype=torch.long)] = size_emb
        order = torch.tensor(edge_index, dtype=torch.long, device=device)
    else:
        order = torch.zeros((0, 2), dtype=torch.long, device=device)

    node_graph = torch.tensor(
        [g for g, count in enumerate(node_counts) for _ in range(count)],
        dtype=torch.long,
        device=device,
    )
    gt = GraphTensor(node_feats, edge_feats, order, node_graph)
    index = BatchIndex(node_offsets, node_counts, loc_slices, size_slices)
    return gt, index


def embed_graph(
    graph: LayoutGraph,
    table: EmbeddingTable,
    extra_node_feats: Tensor | None = None,
) -> GraphTensor:
    gt, _ = embed_graphs([graph], table, extra_node_feats)
    return replace(gt, node_graph=None)


class GraphConv(nn.Module):
    """One triple-update message-passing layer.

    Per edge, a two-layer perceptron maps (v_src, e, v_dst) to candidate
    features for source, edge, and destination; nodes average incident
    candidates and pass through a leaky rectifier, edges keep their
    candidate.  Nodes with no incident edge fall back to a learned
    self-update.
    """

    def __init__(self, node_in: int, edge_in: int, out_dim: int, hidden: int | None = None):
        super().__init__()
        hidden = hidden or out_dim
        self.out_dim = out_dim
        self.mlp = nn.Sequential(
            nn.Linear(2 * node_in + edge_in, hidden),
            nn.LeakyReLU(LEAKY_SLOPE),
            nn.Linear(hidden, 3 * out_dim),
        )
        self.self_update = nn.Linear(node_in, out_dim)

    def forward(self, gt: GraphTensor) -> GraphTensor:
        nodes, edges, index = gt.node_feats, gt.edge_feats, gt.edge_index
        n = nodes.shape[0]
        if edges.shape[0] == 0:
            new_nodes = torch.nn.functional.leaky_relu(self.self_update(nodes), LEAKY_SLOPE)
            new_edges = edges.new_zeros((0, self.out_dim))
            return replace(gt, node_feats=new_nodes, edge_feats=new_edges)
        src, dst = index[:, 0], index[:, 1]
        triples = torch.cat([nodes[src], edges, nodes[dst]], dim=1)
        out = self.mlp(triples)
        cand_src, new_edges, cand_dst = torch.split(out, self.out_dim, dim=1)
        sums = nodes.new_zeros((n, self.out_dim))
        counts = nodes.new_zeros((n,))
        sums.index_add_(0, src, cand_src)
        sums.index_add_(0, dst, cand_dst)
        ones = nodes.new_ones(src.shape[0])
        counts.index_add_(0, src, ones)
        counts.index_add_(0, dst, ones)
        isolated = counts == 0
        mean = sums / counts.clamp(min=1.0).unsqueeze(1)
        if bool(isolated.any()):
            mean = torch.where(isolated.unsqueeze(1), self.self_update(nodes), mean)
        new_nodes = torch.nn.functional.leaky_relu(mean, LEAKY_SLOPE)
        return replace(gt, node_feats=new_nodes, edge_feats=new_edges)


class ConvStack(nn.Module):
    """A fixed-depth stack of graph convolutions (3 layers by default)."""

    def __init__(
        self,
        node_in: int,
        edge_in: int,
        hidden: int = HIDDEN_DIM,
        num_layers: int = 3,
    ):
        super().__init__()
        layers = [GraphConv(node_in, edge_in, hidden)]
        layers += [GraphConv(hidden, hidden, hidden) for _ in range(num_layers - 1)]
        self.layers = nn.ModuleList(layers)

    def forward(self, gt: GraphTensor) -> GraphTensor:
        for layer in self.layers:
            gt = layer(gt)
        return gt


def graph_pool(gt: GraphTensor) -> Tensor:
    """Mean over nodes: [D] for a single graph, [B, D] when batched."""
    if gt.num_nodes == 0:
        raise ValidationError("cannot pool an empty graph")
    if gt.node_graph is None:
        return gt.node_feats.mean(dim=0)
    num_graphs = int(gt.node_graph.max().item()) + 1
    dim = gt.node_feats.shape[1]
    sums = gt.node_feats.new_zeros((num_graphs, dim))
    counts = gt.node_feats.new_zeros((num_graphs,))
    sums.index_add_(0, gt.node_graph, gt.node_feats)
    counts.index_add_(0, gt.node_graph, gt.node_feats.new_ones(gt.num_nodes))
    return sums / counts.unsqueeze(1)


def mlp3(in_dim: int, hidden: int, out_dim: int) -> nn.Sequential:
    """Three fully connected layers with leaky-rectifier activations."""
    return nn.Sequential(
        nn.Linear(in_dim, hidden),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Linear(hidden, hidden),
        nn.LeakyReLU(LEAKY_SLOPE),
        nn.Linear(hidden, out_dim),
    )
