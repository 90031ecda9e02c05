"""Training configuration: hyperparameters, architecture knobs, variant presets.

The defaults follow the reference training protocol (N=5 segments, K=4
spatial groups, tau=0.5, D_s=192, D_t=256, SGD with batch 32 / lr 1e-3 /
momentum 0.9 / weight decay 5e-4, lambda_ent=0.1, lambda_rel=0.5). Every
architectural choice that is not pinned by those hyperparameters is exposed
as a knob so toy-scale overrides stay in one place.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass
class MixStyleConfig:
    """Video-adapted MixStyle switches (config keys mixstyle.*)."""

    enabled: bool = True
    prob: float = 0.5
    alpha: float = 0.1
    stage: int = 2

    def validate(self) -> None:
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"mixstyle.prob must be in [0,1], got {self.prob}")
        if self.alpha <= 0:
            raise ValueError(f"mixstyle.alpha must be positive, got {self.alpha}")
        if self.stage < 1:
            raise ValueError(f"mixstyle.stage must be >= 1, got {self.stage}")


@dataclass
class TrainConfig:
    # segment sampling and module sizes
    n_segments: int = 5
    groups: int = 4
    tau: float = 0.5
    spatial_dim: int = 192  # D_s
    temporal_dim: int = 256  # D_t
    # optimization
    batch_size: int = 32
    learning_rate: float = 1e-3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lambda_ent: float = 0.1
    lambda_rel: float = 0.5
    epochs: int = 30
    seed: int = 0
    # toy backbone layout (stage output channels and strides)
    backbone_channels: tuple[int, ...] = (16, 32, 64, 64)
    backbone_strides: tuple[int, ...] = (2, 2, 2, 1)
    coord_channels: bool = True
    norm_groups: int = 8
    # grouping / relation knobs
    anchor_hidden_min: int = 16
    subset_cap: int = 16
    rel_hidden: int = 512
    se_reduction: int = 4
    # component switches (ablation variants toggle these)
    use_grouping: bool = True
    use_spatial_relations: bool = True
    use_temporal_relations: bool = True
    use_se_aggregation: bool = True
    # feature augmentation
    mixstyle: MixStyleConfig = field(default_factory=MixStyleConfig)
    # numeric mode: "float32" for training, "float64" for verification
    dtype: str = "float32"

    def validate(self) -> None:
        positive = {
            "n_segments": self.n_segments,
            "groups": self.groups,
            "tau": self.tau,
            "spatial_dim": self.spatial_dim,
            "temporal_dim": self.temporal_dim,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "subset_cap": self.subset_cap,
            "rel_hidden": self.rel_hidden,
            "se_reduction": self.se_reduction,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.momentum < 0 or self.weight_decay < 0:
            raise ValueError("momentum and weight_decay must be >= 0")
        if self.lambda_ent < 0 or self.lambda_rel < 0:
            raise ValueError("lambda_ent and lambda_rel must be >= 0")
        if self.n_segments < 2:
            raise ValueError("n_segments must be >= 2 for temporal relations")
        if self.groups < 2:
            raise ValueError("groups must be >= 2")
        if len(self.backbone_channels) != len(self.backbone_strides):
            raise ValueError("backbone_channels and backbone_strides lengths differ")
        if self.use_spatial_relations and not self.use_grouping:
            raise ValueError("spatial relations require the grouping module")
        if self.use_spatial_relations and not self.use_temporal_relations:
            raise ValueError("spatial relations feed temporal relations; enable both")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype}")
        self.mixstyle.validate()

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["backbone_channels"] = list(self.backbone_channels)
        out["backbone_strides"] = list(self.backbone_strides)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TrainConfig":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "mixstyle" in data:
            data["mixstyle"] = MixStyleConfig(**data["mixstyle"])
        for key in ("backbone_channels", "backbone_strides"):
            if key in data:
                data[key] = tuple(int(v) for v in data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def replace(self, **changes: Any) -> "TrainConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def set_dotted(self, key: str, value: Any) -> None:
        """Apply one override given as a dotted key, e.g. mixstyle.prob=0.3.

        String values are parsed as JSON literals where possible so CLI
        overrides like epochs=10 or backbone_channels=[8,16,32,32] work.
        """
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                pass
        target: Any = self
        parts = key.split(".")
        for part in parts[:-1]:
            if not hasattr(target, part):
                raise ValueError(f"unknown config key: {key}")
            target = getattr(target, part)
        leaf = parts[-1]
        if not hasattr(target, leaf):
            raise ValueError(f"unknown config key: {key}")
        current = getattr(target, leaf)
        if isinstance(current, tuple) and isinstance(value, list):
            value = tuple(value)
        setattr(target, leaf, value)


# Ablation ladder. Rows are cumulative: each adds one component on top of
# the previous one, ending with SE-based aggregation as the final piece of
# the full model.
VARIANTS: dict[str, dict[str, bool]] = {
    "Backbone": dict(
        use_grouping=False,
        use_spatial_relations=False,
        use_temporal_relations=False,
        use_se_aggregation=False,
        mixstyle_enabled=False,
    ),
    "+SGM": dict(
        use_grouping=True,
        use_spatial_relations=False,
        use_temporal_relations=False,
        use_se_aggregation=False,
        mixstyle_enabled=False,
    ),
    "+TRM": dict(
        use_grouping=True,
        use_spatial_relations=False,
        use_temporal_relations=True,
        use_se_aggregation=False,
        mixstyle_enabled=False,
    ),
    "+STRM": dict(
        use_grouping=True,
        use_spatial_relations=True,
        use_temporal_relations=True,
        use_se_aggregation=False,
        mixstyle_enabled=False,
    ),
    "+MixStyle": dict(
        use_grouping=True,
        use_spatial_relations=True,
        use_temporal_relations=True,
        use_se_aggregation=False,
        mixstyle_enabled=True,
    ),
    "Full": dict(
        use_grouping=True,
        use_spatial_relations=True,
        use_temporal_relations=True,
        use_se_aggregation=True,
        mixstyle_enabled=True,
    ),
}


def apply_variant(config: TrainConfig, variant: str) -> TrainConfig:
    """Return a copy of `config` with the component switches of `variant`."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}")
    flags = dict(VARIANTS[variant])
    mix_enabled = flags.pop("mixstyle_enabled")
    cfg = dataclasses.replace(config, **flags)
    cfg.mixstyle = dataclasses.replace(config.mixstyle, enabled=mix_enabled)
    cfg.validate()
    return cfg
