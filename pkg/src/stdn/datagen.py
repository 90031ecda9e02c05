"""DiagnosticShift: a synthetic domain-shift video benchmark.

Each clip shows a bright sprite whose motion pattern defines the class
(linear, circular, zigzag, bounce). Source-domain clips additionally carry a
small static marker patch whose corner position and color are keyed to the
class with probability `spurious_strength`; target-domain clips carry the
marker with the same probability but keyed to a uniformly random class, so
the marker's pixel statistics match across domains while its correlation
with the label breaks. The two domains also differ in background texture
(coarse warm blobs vs. finer cool blobs).

Generation is a pure function of the DatasetSpec: every random draw is
derived from (seed, split, class, clip index), so re-running with the same
spec reproduces every byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from stdn import clips as clipio

MOTION_CLASSES = ("linear", "circular", "zigzag", "bounce")

SPLITS = ("source-train", "source-val", "target-test")
_SPLIT_CODE = {name: i for i, name in enumerate(SPLITS)}
_SPLIT_DOMAIN = {
    "source-train": "source",
    "source-val": "source",
    "target-test": "target",
}

# class-keyed marker slots (corner offsets in units of marker size) and colors
_MARKER_COLORS = np.array(
    [(220, 40, 40), (40, 200, 40), (60, 90, 230), (210, 60, 210)], dtype=np.float64
)
_MARKER_SIZE = 6
_SPRITE_RADIUS = 4.0
_SPRITE_COLOR = np.array((250.0, 240.0, 120.0))


@dataclass(frozen=True)
class DatasetSpec:
    """Parameters of one DiagnosticShift dataset."""

    num_classes: int = 4
    clips_per_class_per_split: int = 50
    image_size: tuple[int, int] = (64, 64)
    frames_per_clip: int = 25
    spurious_strength: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if not 2 <= self.num_classes <= len(MOTION_CLASSES):
            raise ValueError(
                f"num_classes must be in [2, {len(MOTION_CLASSES)}], got {self.num_classes}"
            )
        if self.clips_per_class_per_split < 1:
            raise ValueError("clips_per_class_per_split must be >= 1")
        if self.frames_per_clip < 5:
            raise ValueError(
                f"frames_per_clip must be >= 5 (default segment count), got {self.frames_per_clip}"
            )
        h, w = self.image_size
        if h < 24 or w < 24:
            raise ValueError(f"image_size must be at least 24x24, got {self.image_size}")
        if not 0.0 <= self.spurious_strength <= 1.0:
            raise ValueError(
                f"spurious_strength must be in [0,1], got {self.spurious_strength}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_classes": self.num_classes,
            "clips_per_class_per_split": self.clips_per_class_per_split,
            "image_size": list(self.image_size),
            "frames_per_clip": self.frames_per_clip,
            "spurious_strength": self.spurious_strength,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DatasetSpec":
        data = dict(data)
        if "image_size" in data:
            data["image_size"] = tuple(int(v) for v in data["image_size"])
        spec = cls(**data)
        spec.validate()
        return spec


@dataclass
class ClipRecipe:
    """Everything needed to render one clip deterministically."""

    clip_id: str
    split: str
    label: int
    trajectory: np.ndarray  # (T, 2) float pixel coordinates (x, y)
    marker_key: int | None  # class key of the static marker, None = absent
    background_grid: np.ndarray  # coarse (g, g, 3) float texture grid
    background_base: np.ndarray  # (3,) float base color

    @property
    def domain(self) -> str:
        return _SPLIT_DOMAIN[self.split]


# -- trajectories ---------------------------------------------------------


def _triangle_wave(x: np.ndarray) -> np.ndarray:
    """Periodic triangle wave in [-1, 1] with period 1 and tri(0) = -1."""
    frac = np.mod(x, 1.0)
    return 2.0 * np.abs(2.0 * frac - 1.0) - 1.0


def _fold(x: np.ndarray) -> np.ndarray:
    """Reflect positions into [0, 1] (mirror at both walls)."""
    period = np.mod(x, 2.0)
    return np.where(period > 1.0, 2.0 - period, period)


def _unit_trajectory(label: int, n_frames: int, rng: np.random.Generator) -> np.ndarray:
    """Trajectory for one motion class in the unit square, shape (T, 2)."""
    t = np.linspace(0.0, 1.0, n_frames)
    motion = MOTION_CLASSES[label]
    if motion == "linear":
        theta = rng.uniform(0.0, 2.0 * np.pi)
        u = np.array([np.cos(theta), np.sin(theta)])
        half = 0.35
        margin = half * np.abs(u)
        center = rng.uniform(margin, 1.0 - margin)
        pts = center + np.outer(2.0 * t - 1.0, half * u)
    elif motion == "circular":
        radius = rng.uniform(0.18, 0.30)
        center = rng.uniform(radius, 1.0 - radius, size=2)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        direction = rng.choice([-1.0, 1.0])
        angle = phase + direction * 2.0 * np.pi * t
        pts = center + radius * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    elif motion == "zigzag":
        # near-horizontal progress with perpendicular triangle oscillation
        theta = rng.uniform(-np.pi / 9.0, np.pi / 9.0)
        if rng.random() < 0.5:
            theta += np.pi
        u = np.array([np.cos(theta), np.sin(theta)])
        v = np.array([-u[1], u[0]])
        half, amp = 0.35, rng.uniform(0.12, 0.20)
        periods = rng.choice([3, 4])
        margin = half * np.abs(u) + amp * np.abs(v)
        center = rng.uniform(margin, 1.0 - margin)
        along = np.outer(2.0 * t - 1.0, half * u)
        across = np.outer(amp * _triangle_wave(periods * t), v)
        pts = center + along + across
    elif motion == "bounce":
        # dominantly vertical motion reflected at the walls, slow drift in x
        x0 = rng.uniform(0.1, 0.9)
        vx = rng.uniform(-0.2, 0.2)
        y0 = rng.uniform(0.0, 1.0)
        vy = rng.choice([-1.0, 1.0]) * rng.uniform(1.6, 2.4)
        pts = np.stack([_fold(x0 + vx * t), _fold(y0 + vy * t)], axis=1)
    else:  # pragma: no cover - MOTION_CLASSES is fixed
        raise ValueError(f"no trajectory rule for class {label}")
    return pts


def sprite_trajectory(
    label: int, n_frames: int, image_size: tuple[int, int], rng: np.random.Generator
) -> np.ndarray:
    """Pixel-space sprite trajectory, kept inside the sprite-safe box."""
    h, w = image_size
    pad = _SPRITE_RADIUS + 1.0
    unit = _unit_trajectory(label, n_frames, rng)
    lo = np.array([pad, pad])
    hi = np.array([w - 1.0 - pad, h - 1.0 - pad])
    return lo + unit * (hi - lo)


# -- the rule-based motion oracle ------------------------------------------


def _fit_circle(points: np.ndarray) -> tuple[float, float]:
    """Algebraic circle fit; returns (max radial residual, radius)."""
    x, y = points[:, 0], points[:, 1]
    a = np.stack([x, y, np.ones_like(x)], axis=1)
    b = x * x + y * y
    coef, *_ = np.linalg.lstsq(a, b, rcond=None)
    cx, cy = coef[0] / 2.0, coef[1] / 2.0
    r2 = coef[2] + cx * cx + cy * cy
    if r2 <= 0:
        return np.inf, 0.0
    radius = float(np.sqrt(r2))
    dist = np.hypot(x - cx, y - cy)
    return float(np.max(np.abs(dist - radius))), radius


def classify_trajectory(points: np.ndarray) -> int:
    """Recover the motion class from a sprite trajectory.

    Inverts the synthesis rules: exact collinearity with monotone progress
    means linear; an exact circle fit means circular; otherwise net
    horizontal displacement relative to the overall extent separates zigzag
    (large) from bounce (small).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 5:
        raise ValueError("trajectory must be an (T>=5, 2) array")
    scale = float(np.max(np.ptp(pts, axis=0)))
    if scale <= 0.0:
        raise ValueError("degenerate trajectory with zero extent")
    centered = pts - pts.mean(axis=0)
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    if svals[1] <= 1e-6 * svals[0]:
        steps = np.diff(centered @ vt[0])
        if np.all(steps > 0) or np.all(steps < 0):
            return MOTION_CLASSES.index("linear")
        return MOTION_CLASSES.index("bounce")  # straight up-down bounce
    residual, radius = _fit_circle(pts)
    if residual <= 1e-6 * scale and radius <= 0.75 * scale:
        return MOTION_CLASSES.index("circular")
    net_dx = abs(pts[-1, 0] - pts[0, 0])
    if net_dx >= 0.5 * scale:
        return MOTION_CLASSES.index("zigzag")
    return MOTION_CLASSES.index("bounce")


# -- rendering --------------------------------------------------------------


def _smooth_noise(grid: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinearly upsample a coarse (g, g, 3) grid to (height, width, 3)."""
    g = grid.shape[0]
    ys = np.linspace(0.0, g - 1.0, height)
    xs = np.linspace(0.0, g - 1.0, width)
    y0 = np.clip(np.floor(ys).astype(int), 0, g - 2)
    x0 = np.clip(np.floor(xs).astype(int), 0, g - 2)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = grid[y0][:, x0] * (1 - wx) + grid[y0][:, x0 + 1] * wx
    bot = grid[y0 + 1][:, x0] * (1 - wx) + grid[y0 + 1][:, x0 + 1] * wx
    return top * (1 - wy) + bot * wy


def _marker_slot(key: int, image_size: tuple[int, int]) -> tuple[int, int]:
    h, w = image_size
    m = _MARKER_SIZE
    slots = [(2, 2), (2, w - m - 2), (h - m - 2, 2), (h - m - 2, w - m - 2)]
    return slots[key % 4]


def make_clip_recipe(spec: DatasetSpec, split: str, label: int, index: int) -> ClipRecipe:
    """Derive one clip's full recipe from the spec-seeded RNG stream."""
    if split not in _SPLIT_CODE:
        raise ValueError(f"unknown split {split!r}")
    rng = np.random.default_rng([spec.seed, _SPLIT_CODE[split], label, index])
    trajectory = sprite_trajectory(label, spec.frames_per_clip, spec.image_size, rng)

    domain = _SPLIT_DOMAIN[split]
    if domain == "source":
        grid_size, base = 4, np.array([95.0, 88.0, 78.0])
    else:
        grid_size, base = 8, np.array([72.0, 84.0, 98.0])
    background_grid = rng.uniform(-35.0, 35.0, size=(grid_size, grid_size, 3))

    marker_key: int | None = None
    if rng.random() < spec.spurious_strength:
        if domain == "source":
            marker_key = label
        else:
            marker_key = int(rng.integers(0, spec.num_classes))

    clip_id = f"{split}-c{label}-i{index:04d}"
    return ClipRecipe(
        clip_id=clip_id,
        split=split,
        label=label,
        trajectory=trajectory,
        marker_key=marker_key,
        background_grid=background_grid,
        background_base=base,
    )


def render_clip(recipe: ClipRecipe, spec: DatasetSpec) -> np.ndarray:
    """Render a recipe to a (T, H, W, 3) uint8 frame stack."""
    h, w = spec.image_size
    t_frames = spec.frames_per_clip
    background = recipe.background_base + _smooth_noise(recipe.background_grid, h, w)
    frames = np.broadcast_to(background, (t_frames, h, w, 3)).copy()

    if recipe.marker_key is not None:
        row, col = _marker_slot(recipe.marker_key, spec.image_size)
        color = _MARKER_COLORS[recipe.marker_key % len(_MARKER_COLORS)]
        frames[:, row : row + _MARKER_SIZE, col : col + _MARKER_SIZE] = color

    yy, xx = np.mgrid[0:h, 0:w]
    for t in range(t_frames):
        cx, cy = recipe.trajectory[t]
        mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= _SPRITE_RADIUS**2
        frames[t][mask] = _SPRITE_COLOR

    return np.clip(frames, 0.0, 255.0).astype(np.uint8)


# -- dataset generation ------------------------------------------------------


def iter_recipes(spec: DatasetSpec, split: str):
    for label in range(spec.num_classes):
        for index in range(spec.clips_per_class_per_split):
            yield make_clip_recipe(spec, split, label, index)


def generate_dataset(spec: DatasetSpec, out_dir: str | Path) -> Path:
    """Generate all three splits plus the manifest; returns the manifest path.

    The normalization constants (per-channel mean/std of pixel values scaled
    to [0,1]) are computed from source-train only and stored in the manifest,
    so downstream processing never peeks at target statistics.
    """
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    splits: dict[str, list[dict[str, Any]]] = {}
    channel_sum = np.zeros(3)
    channel_sqsum = np.zeros(3)
    pixel_count = 0

    for split in SPLITS:
        split_dir = out_dir / split
        split_dir.mkdir(exist_ok=True)
        entries = []
        for recipe in iter_recipes(spec, split):
            frames = render_clip(recipe, spec)
            rel_path = f"{split}/{recipe.clip_id}.stdv"
            clipio.write_clip(out_dir / rel_path, frames, recipe.label)
            entries.append(
                {"path": rel_path, "label": recipe.label, "clip_id": recipe.clip_id}
            )
            if split == "source-train":
                scaled = frames.astype(np.float64) / 255.0
                channel_sum += scaled.sum(axis=(0, 1, 2))
                channel_sqsum += (scaled**2).sum(axis=(0, 1, 2))
                pixel_count += frames.shape[0] * frames.shape[1] * frames.shape[2]
        splits[split] = entries

    mean = channel_sum / pixel_count
    std = np.sqrt(np.maximum(channel_sqsum / pixel_count - mean**2, 1e-12))
    manifest = {
        "format": clipio.FORMAT_NAME,
        "spec": spec.to_dict(),
        "normalization": {"mean": mean.tolist(), "std": std.tolist()},
        "domains": dict(_SPLIT_DOMAIN),
        "splits": splits,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path
