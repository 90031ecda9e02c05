"""Segment-based frame sampling and normalization.

A clip of T frames is evenly divided into N segments; one frame comes from
each segment. Training draws the frame uniformly at random inside each
segment, testing takes the segment's middle frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from stdn.clips import VideoClip

SAMPLING_MODES = ("train_random", "test_center")


@dataclass
class SampledFrames:
    frames: np.ndarray  # (N, H, W, 3) float32, normalized
    segment_indices: tuple[int, ...]


def segment_bounds(num_frames: int, n_segments: int) -> list[tuple[int, int]]:
    """Half-open per-segment frame ranges [floor(iT/N), floor((i+1)T/N))."""
    if num_frames < n_segments:
        raise ValueError(
            f"clip has {num_frames} frames, fewer than {n_segments} segments"
        )
    return [
        (i * num_frames // n_segments, (i + 1) * num_frames // n_segments)
        for i in range(n_segments)
    ]


def sample_segment_indices(
    num_frames: int,
    n_segments: int,
    mode: str,
    rng: np.random.Generator | None = None,
) -> tuple[int, ...]:
    if mode not in SAMPLING_MODES:
        raise ValueError(f"mode must be one of {SAMPLING_MODES}, got {mode!r}")
    bounds = segment_bounds(num_frames, n_segments)
    if mode == "test_center":
        return tuple((lo + hi) // 2 for lo, hi in bounds)
    if rng is None:
        raise ValueError("train_random sampling needs an RNG")
    return tuple(int(rng.integers(lo, hi)) for lo, hi in bounds)


def normalize_frames(
    frames: np.ndarray, mean: np.ndarray, std: np.ndarray
) -> np.ndarray:
    """uint8 frames -> float32, scaled to [0,1] then standardized per channel."""
    mean = np.asarray(mean, dtype=np.float32)
    std = np.asarray(std, dtype=np.float32)
    return (frames.astype(np.float32) / 255.0 - mean) / std


def sample_segments(
    clip: VideoClip,
    n_segments: int,
    mode: str,
    rng: np.random.Generator | None = None,
    normalization: dict | None = None,
) -> SampledFrames:
    """One normalized frame per segment, per the configured mode."""
    indices = sample_segment_indices(clip.num_frames, n_segments, mode, rng)
    picked = clip.frames[list(indices)]
    if normalization is not None:
        picked = normalize_frames(
            picked, normalization["mean"], normalization["std"]
        )
    else:
        picked = picked.astype(np.float32) / 255.0
    return SampledFrames(frames=picked, segment_indices=indices)
