"""Per-frame convolutional feature extraction.

A small stack of conv/GroupNorm/SiLU stages applied to every sampled frame
with shared weights. The default layout (channels 16-32-64-64, strides
2-2-2-1) turns a 64x64 frame into an 8x8x64 feature map; channel and stride
tuples are configurable, so larger extractors (e.g. a 224 -> 7x7 stride
schedule) can be plugged in behind the same contract.

Inputs and outputs are channels-last: frames (B, N, H, W, C) in, feature
maps (B, N, H', W', D) out. Optional coordinate channels append normalized
(x, y) grids to the input so the otherwise translation-equivariant stack can
encode absolute sprite position, which the synthetic motion classes require.
"""

from __future__ import annotations

from typing import Callable

import torch
from torch import nn


def _norm_group_count(requested: int, channels: int) -> int:
    """Largest divisor of `channels` not exceeding the requested group count."""
    for g in range(min(requested, channels), 0, -1):
        if channels % g == 0:
            return g
    return 1


class FrameBackbone(nn.Module):
    def __init__(
        self,
        in_channels: int = 3,
        channels: tuple[int, ...] = (16, 32, 64, 64),
        strides: tuple[int, ...] = (2, 2, 2, 1),
        norm_groups: int = 8,
        coord_channels: bool = True,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        if len(channels) != len(strides):
            raise ValueError("channels and strides must have equal length")
        self.coord_channels = coord_channels
        self.feature_dim = channels[-1]
        cin = in_channels + (2 if coord_channels else 0)
        stages = []
        for cout, stride in zip(channels, strides):
            stages.append(
                nn.Sequential(
                    nn.Conv2d(cin, cout, kernel_size=3, stride=stride, padding=1),
                    nn.GroupNorm(_norm_group_count(norm_groups, cout), cout),
                    nn.SiLU(),
                )
            )
            cin = cout
        self.stages = nn.ModuleList(stages)
        self.to(dtype)

    def _with_coords(self, x: torch.Tensor) -> torch.Tensor:
        b, _, h, w = x.shape
        ys = torch.linspace(-1.0, 1.0, h, dtype=x.dtype, device=x.device)
        xs = torch.linspace(-1.0, 1.0, w, dtype=x.dtype, device=x.device)
        grid_y, grid_x = torch.meshgrid(ys, xs, indexing="ij")
        coords = torch.stack([grid_x, grid_y]).unsqueeze(0).expand(b, -1, -1, -1)
        return torch.cat([x, coords], dim=1)

    def forward(
        self,
        frames: torch.Tensor,
        style_stage: int | None = None,
        style_fn: Callable[[torch.Tensor], torch.Tensor] | None = None,
    ) -> torch.Tensor:
        """frames (B, N, H, W, C) -> feature maps (B, N, H', W', D).

        `style_fn`, when given, is applied to the channels-last (B, N, h, w, c)
        activations right after stage `style_stage` (1-based); this is the
        MixStyle insertion hook.
        """
        if frames.ndim != 5:
            raise ValueError(f"expected (B, N, H, W, C) frames, got {tuple(frames.shape)}")
        b, n = frames.shape[:2]
        x = frames.reshape(b * n, *frames.shape[2:]).permute(0, 3, 1, 2).contiguous()
        if self.coord_channels:
            x = self._with_coords(x)
        for idx, stage in enumerate(self.stages, start=1):
            x = stage(x)
            if style_fn is not None and style_stage == idx:
                laid_out = x.reshape(b, n, *x.shape[1:]).permute(0, 1, 3, 4, 2)
                mixed = style_fn(laid_out)
                x = mixed.permute(0, 1, 4, 2, 3).reshape(b * n, *x.shape[1:]).contiguous()
        maps = x.reshape(b, n, *x.shape[1:]).permute(0, 1, 3, 4, 2).contiguous()
        return maps
