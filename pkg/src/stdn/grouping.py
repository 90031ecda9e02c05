"""Spatial grouping: soft partitioning of frame features into K groups.

A lightweight two-layer conv net predicts, for each of the K groups, a
weight map over the HW positions; anchors are the weight-softmax combinations
of the spatial features. Positions are then soft-assigned to groups by a
tempered softmax over negative Euclidean distances to the anchors, and each
group feature is the assignment-weighted mean of its member features. Two
entropy losses regularize the assignments: per-position entropy is pushed
down (confident membership) while the entropy of the per-frame mean
assignment is pushed up (all groups stay in use).
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

LOG_EPS = 1e-8  # inside log()
MASS_EPS = 1e-6  # added to per-group assignment mass before division


@dataclass
class GroupingResult:
    anchors: torch.Tensor  # (B, N, K, D)
    assignments: torch.Tensor  # (B, N, HW, K), rows sum to 1
    group_features: torch.Tensor  # (B, N, K, D)
    mean_assignment: torch.Tensor  # (B, N, K), rows sum to 1


def anchors_from_weights(maps: torch.Tensor, weight_logits: torch.Tensor) -> torch.Tensor:
    """Weighted combinations of spatial features, weights softmaxed over HW.

    maps: (B, N, H, W, D); weight_logits: (B, N, K, HW) -> anchors (B, N, K, D).
    """
    b, n, h, w, d = maps.shape
    flat = maps.reshape(b, n, h * w, d)
    weights = torch.softmax(weight_logits, dim=-1)
    return torch.einsum("bnkp,bnpd->bnkd", weights, flat)


def assign_to_anchors(
    maps: torch.Tensor, anchors: torch.Tensor, tau: float
) -> torch.Tensor:
    """Tempered softmax over negative Euclidean distances to the anchors.

    maps: (B, N, H, W, D); anchors: (B, N, K, D) -> assignments (B, N, HW, K).
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    b, n, h, w, d = maps.shape
    flat = maps.reshape(b, n, h * w, d)
    sq = (
        flat.square().sum(-1, keepdim=True)
        + anchors.square().sum(-1).unsqueeze(-2)
        - 2.0 * torch.einsum("bnpd,bnkd->bnpk", flat, anchors)
    )
    dist = torch.sqrt(torch.clamp(sq, min=1e-18))
    return torch.softmax(-dist / tau, dim=-1)


def aggregate_groups(maps: torch.Tensor, assignments: torch.Tensor) -> torch.Tensor:
    """Per-group weighted mean of spatial features, mass-guarded.

    maps: (B, N, H, W, D); assignments: (B, N, HW, K) -> (B, N, K, D).
    """
    b, n, h, w, d = maps.shape
    flat = maps.reshape(b, n, h * w, d)
    weighted = torch.einsum("bnpk,bnpd->bnkd", assignments, flat)
    mass = assignments.sum(dim=-2).unsqueeze(-1)
    return weighted / (mass + MASS_EPS)


def entropy_min_loss(assignments: torch.Tensor) -> torch.Tensor:
    """Mean per-position assignment entropy (minimized => confident rows).

    assignments: (..., N, HW, K); averages over every leading dimension, so a
    batched value equals the mean of per-video values.
    """
    p = assignments
    return -(p * torch.log(p + LOG_EPS)).sum(dim=-1).mean()


def entropy_max_loss(assignments: torch.Tensor) -> torch.Tensor:
    """Negative entropy of the mean assignment (minimized => balanced groups)."""
    p_bar = assignments.mean(dim=-2)
    return (p_bar * torch.log(p_bar + LOG_EPS)).sum(dim=-1).mean()


class SpatialGrouping(nn.Module):
    def __init__(
        self,
        feature_dim: int,
        num_groups: int,
        tau: float,
        hidden_min: int = 16,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        if num_groups < 2:
            raise ValueError("need at least 2 groups")
        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.num_groups = num_groups
        self.tau = tau
        hidden = max(feature_dim // 4, hidden_min)
        self.weight_net = nn.Sequential(
            nn.Conv2d(feature_dim, hidden, kernel_size=3, padding=1),
            nn.SiLU(),
            nn.Conv2d(hidden, num_groups, kernel_size=1),
        )
        self.to(dtype)

    def weight_logits(self, maps: torch.Tensor) -> torch.Tensor:
        """(B, N, H, W, D) -> per-group spatial weight logits (B, N, K, HW)."""
        b, n, h, w, d = maps.shape
        x = maps.reshape(b * n, h, w, d).permute(0, 3, 1, 2)
        logits = self.weight_net(x)
        return logits.reshape(b, n, self.num_groups, h * w)

    def generate_anchors(self, maps: torch.Tensor) -> torch.Tensor:
        return anchors_from_weights(maps, self.weight_logits(maps))

    def forward(self, maps: torch.Tensor) -> GroupingResult:
        b, n, h, w, d = maps.shape
        if h * w < self.num_groups:
            raise ValueError(
                f"feature map has {h * w} positions, fewer than {self.num_groups} groups"
            )
        anchors = self.generate_anchors(maps)
        assignments = assign_to_anchors(maps, anchors, self.tau)
        group_features = aggregate_groups(maps, assignments)
        return GroupingResult(
            anchors=anchors,
            assignments=assignments,
            group_features=group_features,
            mean_assignment=assignments.mean(dim=-2),
        )
