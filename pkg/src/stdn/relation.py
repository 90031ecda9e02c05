"""Multi-scale spatial and temporal relation modeling.

Spatial relations: for each scale l in 2..K, the expectation over size-l
subsets of the K group features of a single linear projection of their
concatenation (all C(K,l) subsets enumerated while that count stays within
`subset_cap`, otherwise a seeded sample without replacement). Subsets are
concatenated in canonical ascending index order.

Temporal relations: the same construction over time-ordered frame tuples
n_1 < ... < n_m for scales m in 2..N, preserving the relative frame order.

The relation discrimination loss classifies each temporal relation feature
into one of (N-1)*C joint (class, scale) labels, which keeps the features of
different time scales from collapsing onto each other.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn


@dataclass
class RelationFeatureSet:
    frame_features: torch.Tensor  # (B, N, F) integrated per-frame features
    temporal_features: torch.Tensor  # (B, N-1, D_t), scales m=2..N ascending


def index_subsets(
    n: int, size: int, cap: int, rng: np.random.Generator | None = None
) -> torch.Tensor:
    """Ascending index tuples of the given size, shape (S, size) int64.

    Enumerates all C(n, size) tuples when that count is within `cap`;
    otherwise draws `cap` distinct tuples uniformly without replacement,
    which keeps the subset mean an unbiased estimate of the full expectation.
    """
    if not 1 <= size <= n:
        raise ValueError(f"subset size {size} out of range for n={n}")
    total = math.comb(n, size)
    if total <= cap:
        combos = list(itertools.combinations(range(n), size))
        return torch.tensor(combos, dtype=torch.int64)
    if rng is None:
        raise ValueError(
            f"C({n},{size})={total} exceeds cap {cap}; sampling needs an RNG"
        )
    if total <= 100_000:
        combos = list(itertools.combinations(range(n), size))
        picked = rng.choice(total, size=cap, replace=False)
        chosen = [combos[i] for i in sorted(picked)]
    else:
        seen: set[tuple[int, ...]] = set()
        while len(seen) < cap:
            draw = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
            seen.add(draw)
        chosen = sorted(seen)
    return torch.tensor(chosen, dtype=torch.int64)


def _mean_projected_tuples(
    features: torch.Tensor,
    subsets: torch.Tensor,
    projection: nn.Linear,
) -> torch.Tensor:
    """Mean over index tuples of projection(concat of selected features).

    features: (..., n, F); subsets: (S, size) -> (..., out_dim).
    """
    gathered = features[..., subsets, :]  # (..., S, size, F)
    stacked = gathered.flatten(start_dim=-2)  # (..., S, size*F)
    return projection(stacked).mean(dim=-2)


class SpatialRelationBank(nn.Module):
    """One linear projection per space scale l = 2..K, shared across frames."""

    def __init__(
        self,
        num_groups: int,
        feature_dim: int,
        out_dim: int,
        subset_cap: int = 16,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.num_groups = num_groups
        self.out_dim = out_dim
        self.subset_cap = subset_cap
        self.projections = nn.ModuleDict(
            {
                str(l): nn.Linear(l * feature_dim, out_dim)
                for l in range(2, num_groups + 1)
            }
        )
        self.to(dtype)

    def relation(
        self,
        group_features: torch.Tensor,
        scale: int,
        rng: np.random.Generator | None = None,
    ) -> torch.Tensor:
        """(B, N, K, D) -> (B, N, out_dim) relation feature at one scale."""
        if not 2 <= scale <= self.num_groups:
            raise ValueError(
                f"space scale must be in [2, {self.num_groups}], got {scale}"
            )
        subsets = index_subsets(self.num_groups, scale, self.subset_cap, rng)
        return _mean_projected_tuples(
            group_features, subsets, self.projections[str(scale)]
        )

    def forward(
        self, group_features: torch.Tensor, rng: np.random.Generator | None = None
    ) -> torch.Tensor:
        """All K-1 scales stacked ascending: (B, N, K-1, out_dim)."""
        feats = [
            self.relation(group_features, l, rng)
            for l in range(2, self.num_groups + 1)
        ]
        return torch.stack(feats, dim=-2)


class GlobalFeature(nn.Module):
    """Pointwise projection (1x1 conv) of the feature map, average-pooled."""

    def __init__(self, feature_dim: int, out_dim: int, dtype: torch.dtype = torch.float32):
        super().__init__()
        self.proj = nn.Linear(feature_dim, out_dim)
        self.to(dtype)

    def forward(self, maps: torch.Tensor) -> torch.Tensor:
        """(B, N, H, W, D) -> (B, N, out_dim)."""
        return self.proj(maps).mean(dim=(-3, -2))


def build_frame_features(
    spatial_relations: torch.Tensor, global_features: torch.Tensor
) -> torch.Tensor:
    """Concatenate scale features (ascending) with the global feature last.

    spatial_relations: (B, N, K-1, D_s); global_features: (B, N, D_s)
    -> (B, N, K*D_s).
    """
    b, n = global_features.shape[:2]
    flat = spatial_relations.reshape(b, n, -1)
    return torch.cat([flat, global_features], dim=-1)


class TemporalRelationBank(nn.Module):
    """One linear projection per time scale m = 2..N over ordered frame tuples."""

    def __init__(
        self,
        n_segments: int,
        frame_dim: int,
        out_dim: int,
        subset_cap: int = 16,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.n_segments = n_segments
        self.out_dim = out_dim
        self.subset_cap = subset_cap
        self.projections = nn.ModuleDict(
            {
                str(m): nn.Linear(m * frame_dim, out_dim)
                for m in range(2, n_segments + 1)
            }
        )
        self.to(dtype)

    def relation(
        self,
        frame_features: torch.Tensor,
        scale: int,
        rng: np.random.Generator | None = None,
    ) -> torch.Tensor:
        """(B, N, F) -> (B, out_dim) relation feature at one time scale."""
        if not 2 <= scale <= self.n_segments:
            raise ValueError(
                f"time scale must be in [2, {self.n_segments}], got {scale}"
            )
        subsets = index_subsets(self.n_segments, scale, self.subset_cap, rng)
        return _mean_projected_tuples(
            frame_features, subsets, self.projections[str(scale)]
        )

    def forward(
        self, frame_features: torch.Tensor, rng: np.random.Generator | None = None
    ) -> torch.Tensor:
        """All N-1 scales stacked ascending: (B, N-1, out_dim)."""
        feats = [
            self.relation(frame_features, m, rng)
            for m in range(2, self.n_segments + 1)
        ]
        return torch.stack(feats, dim=-2)


def relation_labels(
    labels: torch.Tensor | int, n_segments: int, num_classes: int
) -> torch.Tensor:
    """Joint (class, scale) labels y*(N-1) + (m-2) for scales m=2..N.

    Returns shape (N-1,) for an int label or (B, N-1) for a batch; the map
    (y, m) -> label is a bijection onto {0, ..., (N-1)*C - 1}.
    """
    y = torch.as_tensor(labels, dtype=torch.int64)
    if torch.any(y < 0) or torch.any(y >= num_classes):
        raise ValueError(f"class labels must lie in [0, {num_classes}), got {labels}")
    scales = torch.arange(n_segments - 1, dtype=torch.int64)
    return y.unsqueeze(-1) * (n_segments - 1) + scales


class RelationClassifier(nn.Module):
    """MLP over temporal relation features predicting (N-1)*C joint labels."""

    def __init__(
        self,
        in_dim: int,
        n_segments: int,
        num_classes: int,
        hidden: int = 512,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.out_dim = (n_segments - 1) * num_classes
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.SiLU(),
            nn.Linear(hidden, self.out_dim),
        )
        self.to(dtype)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


def relation_discrimination_loss(
    temporal_features: torch.Tensor,
    labels: torch.Tensor,
    classifier: RelationClassifier,
    n_segments: int,
    num_classes: int,
) -> torch.Tensor:
    """Mean over time scales of the joint-label cross-entropy.

    temporal_features: (B, N-1, D_t); labels: (B,) class indices.
    """
    joint = relation_labels(labels, n_segments, num_classes)  # (B, N-1)
    losses = []
    for idx in range(n_segments - 1):
        logits = classifier(temporal_features[:, idx])
        losses.append(nn.functional.cross_entropy(logits, joint[:, idx]))
    return torch.stack(losses).mean()
