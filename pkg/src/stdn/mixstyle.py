"""Video-adapted MixStyle feature augmentation.

Per-channel feature statistics are pooled jointly over space AND time within
each instance (the video adaptation; image MixStyle pools over space only).
With probability `prob` per batch, instances are paired by a seeded shuffle,
each instance is normalized by its own statistics, and re-styled with a
Beta(alpha, alpha) convex mix of its own and its partner's statistics.
Evaluation mode is exactly the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

STD_EPS = 1e-6  # added to the per-channel std before dividing


@dataclass
class StyleStats:
    mean: torch.Tensor  # (B, 1, 1, 1, C)
    std: torch.Tensor  # (B, 1, 1, 1, C), >= 0


def compute_style_stats(features: torch.Tensor) -> StyleStats:
    """Per-instance per-channel stats over all N*H*W positions.

    features: (B, N, H, W, C) channels-last.
    """
    if features.ndim != 5:
        raise ValueError(f"expected (B, N, H, W, C), got {tuple(features.shape)}")
    mean = features.mean(dim=(1, 2, 3), keepdim=True)
    var = features.var(dim=(1, 2, 3), keepdim=True, unbiased=False)
    return StyleStats(mean=mean, std=torch.sqrt(torch.clamp(var, min=1e-12)))


def video_mixstyle(
    features: torch.Tensor,
    prob: float,
    alpha: float,
    rng: np.random.Generator,
    training: bool = True,
    lam: float | None = None,
    permutation: np.ndarray | None = None,
) -> torch.Tensor:
    """Mix per-instance feature statistics across the batch.

    features: (B, N, H, W, C). Identity when not training, when the batch
    coin (probability `prob`) comes up tails, or when the batch has a single
    instance. `lam` and `permutation` override the random draws (used by
    tests to force endpoint behavior).
    """
    if features.ndim != 5:
        raise ValueError(f"expected (B, N, H, W, C), got {tuple(features.shape)}")
    if not training:
        return features
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    batch = features.shape[0]
    if rng.random() >= prob:
        return features
    if batch < 2:
        return features  # no partner to mix with

    stats = compute_style_stats(features)
    if permutation is None:
        permutation = rng.permutation(batch)
    permutation = np.asarray(permutation)
    if lam is None:
        lam_values = rng.beta(alpha, alpha, size=batch)
    else:
        lam_values = np.full(batch, float(lam))
    lam_t = torch.as_tensor(lam_values, dtype=features.dtype).view(-1, 1, 1, 1, 1)

    perm_idx = torch.as_tensor(permutation, dtype=torch.int64)
    own_std = stats.std + STD_EPS
    partner_std = stats.std[perm_idx] + STD_EPS
    mixed_mean = stats.mean + (1.0 - lam_t) * (stats.mean[perm_idx] - stats.mean)
    mixed_std = own_std + (1.0 - lam_t) * (partner_std - own_std)
    # scale/shift form keeps lam=1 and self-pairing exactly the identity
    ratio = mixed_std / own_std
    shift = mixed_mean - stats.mean * ratio
    return features * ratio + shift
