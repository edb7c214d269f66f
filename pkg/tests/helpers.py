"""Shared test utilities."""

from __future__ import annotations

import torch

from ndn.nngraph import GraphConv, GraphTensor


def graph_conv_gradient_error(seed: int = 11) -> float:
    """Worst relative error between autograd and central finite differences
    over every parameter of one small float64 graph convolution."""
    torch.manual_seed(seed)
    n, d_in, d_out = 4, 6, 5
    layer = GraphConv(node_in=d_in, edge_in=d_in, out_dim=d_out, hidden=8).double()
    nodes = torch.randn(n, d_in, dtype=torch.float64)
    edges = torch.randn(3, d_in, dtype=torch.float64)
    index = torch.tensor([[0, 1], [0, 2], [1, 2]])  # node 3 isolated on purpose
    weight_n = torch.randn(n, d_out, dtype=torch.float64)
    weight_e = torch.randn(3, d_out, dtype=torch.float64)

    def loss_value() -> torch.Tensor:
        out = layer(GraphTensor(nodes, edges, index))
        return (out.node_feats * weight_n).sum() + (out.edge_feats * weight_e).sum()

    loss = loss_value()
    loss.backward()
    eps = 1e-6
    worst = 0.0
    for param in layer.parameters():
        grad = param.grad.view(-1)
        flat = param.data.view(-1)
        for k in range(flat.numel()):
            original = flat[k].item()
            flat[k] = original + eps
            up = loss_value().item()
            flat[k] = original - eps
            down = loss_value().item()
            flat[k] = original
            numeric = (up - down) / (2 * eps)
            analytic = grad[k].item()
            scale = max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / scale)
    return worst
