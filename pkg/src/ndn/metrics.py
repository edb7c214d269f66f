"""Layout quality metrics: alignment, Frechet distance, consistency, report.

The Frechet distance runs over features tapped from a binary good-vs-bad
layout classifier (four graph convolutions, three fully connected layers;
the tap is the activation of the second-from-last linear layer).  FID values
are only comparable under the same classifier, so reports embed the
classifier's content hash.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from torch import Tensor, nn

from .core import Layout, LayoutGraph, ValidationError, check_consistency, graph_from_layout
from .nngraph import (
    EMBED_DIM,
    HIDDEN_DIM,
    LEAKY_SLOPE,
    ConvStack,
    EmbeddingTable,
    embed_graphs,
    graph_pool,
)


def alignment_score(layouts: Sequence[Layout]) -> float:
    """Mean per-layout sum of nearest left/center/right edge distances.

    Lower is better aligned.  Components compare edge-to-edge (left with
    left, center with center, right with right); a single-component layout
    contributes 0.
    """
    if not layouts:
        raise ValidationError("alignment_score requires at least one layout")
    total = 0.0
    for layout in layouts:
        boxes = layout.boxes
        if len(boxes) < 2:
            continue
        lefts = [b.x for b in boxes]
        centers = [b.cx for b in boxes]
        rights = [b.right for b in boxes]
        for i in range(len(boxes)):
            best = min(
                min(
                    abs(lefts[i] - lefts[j]),
                    abs(centers[i] - centers[j]),
                    abs(rights[i] - rights[j]),
                )
                for j in range(len(boxes))
                if j != i
            )
            total += best
    return total / len(layouts)


# ---------------------------------------------------------------------------
# Binary layout classifier


class LayoutClassifier(nn.Module):
    """Good-vs-bad layout discriminator whose penultimate layer feeds FID."""

    def __init__(
        self,
        num_categories: int,
        emb_dim: int = EMBED_DIM,
        hidden: int = HIDDEN_DIM,
        feature_dim: int = HIDDEN_DIM,
    ):
        super().__init__()
        self.num_categories = num_categories
        self.feature_dim = feature_dim
        self.table = EmbeddingTable(num_categories, emb_dim)
        self.net = ConvStack(node_in=emb_dim + 4, edge_in=emb_dim, hidden=hidden, num_layers=4)
        self.fc1 = nn.Linear(hidden, hidden)
        self.fc2 = nn.Linear(hidden, feature_dim)
        self.fc3 = nn.Linear(feature_dim, 1)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)

    @property
    def config(self) -> dict:
        return {
            "num_categories": self.num_categories,
            "emb_dim": self.table.emb_dim,
            "hidden": self.fc1.in_features,
            "feature_dim": self.feature_dim,
        }

    def _pooled(self, layouts: Sequence[Layout]) -> Tensor:
        graphs = [graph_from_layout(l) for l in layouts]
        coords = []
        for l in layouts:
            coords.append((0.0, 0.0, 1.0, 1.0))
            coords.extend(b.as_tuple() for b in l.boxes)
        extra = torch.tensor(coords, dtype=torch.float32)
        gt, _ = embed_graphs(graphs, self.table, extra)
        return graph_pool(self.net(gt))

    def features(self, layouts: Sequence[Layout]) -> Tensor:
        """Per-layout feature rows from the second-from-last linear layer."""
        h = self.act(self.fc1(self._pooled(layouts)))
        return self.act(self.fc2(h))

    def logits(self, layouts: Sequence[Layout]) -> Tensor:
        return self.fc3(self.features(layouts)).squeeze(-1)

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for name, param in sorted(self.state_dict().items()):
            digest.update(name.encode())
            digest.update(param.numpy().tobytes())
        return digest.hexdigest()[:16]


@dataclass
class ClassifierTrainResult:
    model: LayoutClassifier
    heldout_accuracy: float
    train_accuracy: float
    steps: int


def train_classifier(
    real: Sequence[Layout],
    negatives: Sequence[Layout],
    num_categories: int,
    steps: int = 1500,
    batch_size: int = 64,
    lr: float = 1e-3,
    seed: int = 0,
    heldout_fraction: float = 0.1,
) -> ClassifierTrainResult:
    """Train the binary good-vs-bad classifier and report held-out accuracy."""
    if not real or not negatives:
        raise ValidationError("need both real layouts and negatives")
    torch.manual_seed(seed)
    rng = random.Random(seed)
    examples = [(l, 1.0) for l in real] + [(l, 0.0) for l in negatives]
    rng.shuffle(examples)
    n_heldout = max(2, int(len(examples) * heldout_fraction))
    heldout, train = examples[:n_heldout], examples[n_heldout:]
    if not any(y > 0.5 for _, y in train) or not any(y < 0.5 for _, y in train):
        raise ValidationError("training split is single-class")
    model = LayoutClassifier(num_categories)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    bce = nn.BCEWithLogitsLoss()
    for _ in range(steps):
        batch = [train[rng.randrange(len(train))] for _ in range(batch_size)]
        layouts = [l for l, _ in batch]
        labels = torch.tensor([y for _, y in batch])
        opt.zero_grad()
        loss = bce(model.logits(layouts), labels)
        loss.backward()
        opt.step()
    model.eval()

    @torch.no_grad()
    def accuracy(pairs) -> float:
        correct = 0
        for start in range(0, len(pairs), 256):
            chunk = pairs[start : start + 256]
            preds = model.logits([l for l, _ in chunk]) > 0
            correct += sum(
                int(p) == int(y > 0.5) for p, y in zip(preds.tolist(), (y for _, y in chunk))
            )
        return correct / len(pairs)

    return ClassifierTrainResult(
        model=model,
        heldout_accuracy=accuracy(heldout),
        train_accuracy=accuracy(train),
        steps=steps,
    )


# ---------------------------------------------------------------------------
# Frechet distance


def _sqrtm_psd(mat: np.ndarray) -> np.ndarray:
    """Matrix square root of a symmetric PSD matrix via eigendecomposition."""
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid_from_stats(
    mu_a: np.ndarray, sigma_a: np.ndarray, mu_b: np.ndarray, sigma_b: np.ndarray, eps: float = 1e-6
) -> float:
    """||mu_a-mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))."""
    mu_a = np.atleast_1d(np.asarray(mu_a, dtype=np.float64))
    mu_b = np.atleast_1d(np.asarray(mu_b, dtype=np.float64))
    sigma_a = np.atleast_2d(np.asarray(sigma_a, dtype=np.float64))
    sigma_b = np.atleast_2d(np.asarray(sigma_b, dtype=np.float64))
    if mu_a.shape != mu_b.shape or sigma_a.shape != sigma_b.shape:
        raise ValidationError("feature statistics have mismatched dimensions")
    offset = np.eye(sigma_a.shape[0]) * eps
    sigma_a = sigma_a + offset
    sigma_b = sigma_b + offset
    diff = mu_a - mu_b
    root_a = _sqrtm_psd(sigma_a)
    # Tr sqrt(S_a S_b) equals Tr sqrt(S_a^(1/2) S_b S_a^(1/2)), which is symmetric.
    inner = _sqrtm_psd(root_a @ sigma_b @ root_a)
    return float(diff @ diff + np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * np.trace(inner))


def fid(features_a: np.ndarray | Tensor, features_b: np.ndarray | Tensor) -> float:
    """Frechet distance between Gaussian fits of two feature matrices."""
    a = np.asarray(features_a.detach() if isinstance(features_a, Tensor) else features_a, dtype=np.float64)
    b = np.asarray(features_b.detach() if isinstance(features_b, Tensor) else features_b, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValidationError("need at least 2 samples per side")
    if a.shape[1] != b.shape[1]:
        raise ValidationError("feature dimensions differ")
    return fid_from_stats(
        a.mean(axis=0), np.cov(a, rowvar=False), b.mean(axis=0), np.cov(b, rowvar=False)
    )


# ---------------------------------------------------------------------------
# Aggregate report


@dataclass
class MetricsReport:
    alignment: float
    fid: float | None = None
    consistency: float | None = None
    pred_error: float | None = None
    num_outputs: int = 0
    num_references: int = 0
    classifier_hash: str | None = None
    config: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("alignment", "fid", "consistency", "pred_error"):
            v = getattr(self, name)
            if v is not None and not np.isfinite(v):
                raise ValidationError(f"metric {name} is not finite: {v}")
        if self.consistency is not None and not 0.0 <= self.consistency <= 1.0:
            raise ValidationError(f"consistency out of range: {self.consistency}")

    def to_dict(self) -> dict:
        return {
            "alignment": self.alignment,
            "fid": self.fid,
            "consistency": self.consistency,
            "pred_error": self.pred_error,
            "num_outputs": self.num_outputs,
            "num_references": self.num_references,
            "classifier_hash": self.classifier_hash,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@torch.no_grad()
def evaluate_generation(
    outputs: Sequence[Layout],
    references: Sequence[Layout],
    constraints: Sequence[LayoutGraph] | None = None,
    classifier: LayoutClassifier | None = None,
    pred_error: float | None = None,
    config: dict | None = None,
) -> MetricsReport:
    """Aggregate alignment, FID, and constraint consistency for a generated set."""
    if not outputs or not references:
        raise ValidationError("need non-empty output and reference sets")
    fid_value = None
    cls_hash = None
    if classifier is not None:
        fid_value = fid(classifier.features(outputs), classifier.features(references))
        cls_hash = classifier.content_hash()
    consistency = None
    if constraints is not None:
        if len(constraints) != len(outputs):
            raise ValidationError("need one constraint graph per output")
        consistency = float(
            np.mean([check_consistency(g, l) for g, l in zip(constraints, outputs)])
        )
    return MetricsReport(
        alignment=alignment_score(outputs),
        fid=fid_value,
        consistency=consistency,
        pred_error=pred_error,
        num_outputs=len(outputs),
        num_references=len(references),
        classifier_hash=cls_hash,
        config=config or {},
    )
