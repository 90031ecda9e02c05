"""Aggregation of temporal relation features, the video classifier, and the
total training objective.

Each time scale's relation feature passes through its own small SE gate
(squeeze-excitation channel gating); the gated features are summed into one
video feature, which a single linear classifier maps to class logits. The
training loss combines classification cross-entropy, both entropy
regularizers (sharing one weight), and the relation discrimination loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


class ScaleGate(nn.Module):
    """SE-style channel gate: x * sigmoid(W2 silu(W1 x))."""

    def __init__(self, dim: int, reduction: int = 4, dtype: torch.dtype = torch.float32):
        super().__init__()
        hidden = max(dim // reduction, 1)
        self.squeeze = nn.Linear(dim, hidden)
        self.excite = nn.Linear(hidden, dim)
        self.act = nn.SiLU()
        self.to(dtype)

    def gate(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.excite(self.act(self.squeeze(x))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.gate(x) * x


class TemporalAggregator(nn.Module):
    """Sum of per-scale features, each SE-gated when gating is enabled."""

    def __init__(
        self,
        n_segments: int,
        dim: int,
        reduction: int = 4,
        use_se: bool = True,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.n_segments = n_segments
        self.use_se = use_se
        if use_se:
            self.gates = nn.ModuleList(
                ScaleGate(dim, reduction, dtype) for _ in range(n_segments - 1)
            )
        else:
            self.gates = None

    def forward(self, temporal_features: torch.Tensor) -> torch.Tensor:
        """(B, N-1, D_t) -> (B, D_t)."""
        if temporal_features.shape[-2] != self.n_segments - 1:
            raise ValueError(
                f"expected {self.n_segments - 1} temporal features, "
                f"got {temporal_features.shape[-2]}"
            )
        if not self.use_se:
            return temporal_features.sum(dim=-2)
        parts = [
            gate(temporal_features[..., idx, :]) for idx, gate in enumerate(self.gates)
        ]
        return torch.stack(parts, dim=-2).sum(dim=-2)


@dataclass
class LossBreakdown:
    """The training objective and its components (0-dim tensors)."""

    total: torch.Tensor
    cls: torch.Tensor
    emin: torch.Tensor
    emax: torch.Tensor
    rel: torch.Tensor
    lambda_ent: float
    lambda_rel: float

    def as_floats(self) -> dict[str, float]:
        return {
            "total": float(self.total),
            "cls": float(self.cls),
            "emin": float(self.emin),
            "emax": float(self.emax),
            "rel": float(self.rel),
            "lambda_ent": self.lambda_ent,
            "lambda_rel": self.lambda_rel,
        }

    def is_finite(self) -> bool:
        return bool(
            torch.isfinite(self.total)
            and torch.isfinite(self.cls)
            and torch.isfinite(self.emin)
            and torch.isfinite(self.emax)
            and torch.isfinite(self.rel)
        )


def total_loss(
    logits: torch.Tensor,
    labels: torch.Tensor,
    emin: torch.Tensor,
    emax: torch.Tensor,
    rel: torch.Tensor,
    lambda_ent: float,
    lambda_rel: float,
) -> LossBreakdown:
    """cls + lambda_ent*(emin + emax) + lambda_rel*rel, with cls batch-mean CE."""
    if lambda_ent < 0 or lambda_rel < 0:
        raise ValueError("loss weights must be >= 0")
    cls = nn.functional.cross_entropy(logits, labels)
    total = cls + lambda_ent * emin + lambda_ent * emax + lambda_rel * rel
    return LossBreakdown(
        total=total,
        cls=cls,
        emin=emin,
        emax=emax,
        rel=rel,
        lambda_ent=lambda_ent,
        lambda_rel=lambda_rel,
    )
