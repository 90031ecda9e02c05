"""Spatial-temporal diversification network (STDN) for video domain generalization.

The package bundles the model (spatial grouping, multi-scale spatial-temporal
relation modeling, SE-based aggregation, video-adapted MixStyle), the
DiagnosticShift synthetic benchmark, a deterministic training/evaluation
harness, and feature-diversity diagnostics.
"""

from stdn.config import MixStyleConfig, TrainConfig, VARIANTS, apply_variant

__version__ = "0.1.0"

__all__ = [
    "MixStyleConfig",
    "TrainConfig",
    "VARIANTS",
    "apply_variant",
    "__version__",
]
