"""On-disk clip format (STDV1) and dataset manifest access.

One file per clip: the magic "STDV1\\n", five little-endian int32 fields
(T, H, W, channels, label), then the raw uint8 frame data row-major.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"STDV1\n"
FORMAT_NAME = "STDV1"
_HEADER = struct.Struct("<5i")


@dataclass
class VideoClip:
    """A T-frame uint8 image stack with its label and domain tag."""

    frames: np.ndarray  # (T, H, W, 3) uint8
    label: int
    domain: str
    clip_id: str

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])


def write_clip(path: str | Path, frames: np.ndarray, label: int) -> None:
    frames = np.ascontiguousarray(frames, dtype=np.uint8)
    if frames.ndim != 4:
        raise ValueError(f"frames must be (T, H, W, C), got shape {frames.shape}")
    t, h, w, c = frames.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(t, h, w, c, int(label)))
        fh.write(frames.tobytes())


def read_clip(path: str | Path) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a {FORMAT_NAME} clip file")
        t, h, w, c, label = _HEADER.unpack(fh.read(_HEADER.size))
        data = fh.read(t * h * w * c)
    if len(data) != t * h * w * c:
        raise ValueError(f"{path}: truncated clip data")
    frames = np.frombuffer(data, dtype=np.uint8).reshape(t, h, w, c)
    return frames, label


@dataclass
class Manifest:
    spec: dict
    normalization: dict  # {"mean": [...], "std": [...]}
    domains: dict[str, str]
    splits: dict[str, list[dict]]
    root: Path

    @property
    def num_classes(self) -> int:
        return int(self.spec["num_classes"])


def load_manifest(data_dir: str | Path) -> Manifest:
    data_dir = Path(data_dir)
    manifest_path = data_dir / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json under {data_dir}")
    raw = json.loads(manifest_path.read_text())
    return Manifest(
        spec=raw["spec"],
        normalization=raw["normalization"],
        domains=raw["domains"],
        splits=raw["splits"],
        root=data_dir,
    )


class ClipSplit:
    """All clips of one split loaded into memory as a uint8 stack."""

    def __init__(self, manifest: Manifest, split: str):
        if split not in manifest.splits:
            raise KeyError(
                f"split {split!r} not in dataset (has {sorted(manifest.splits)})"
            )
        self.split = split
        self.domain = manifest.domains.get(split, "unknown")
        entries = manifest.splits[split]
        stacks, labels, clip_ids = [], [], []
        for entry in entries:
            frames, label = read_clip(manifest.root / entry["path"])
            if label != entry["label"]:
                raise ValueError(f"{entry['path']}: label mismatch with manifest")
            stacks.append(frames)
            labels.append(label)
            clip_ids.append(entry["clip_id"])
        self.frames = np.stack(stacks)  # (M, T, H, W, 3)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.clip_ids = clip_ids

    def __len__(self) -> int:
        return len(self.labels)

    def clip(self, index: int) -> VideoClip:
        return VideoClip(
            frames=self.frames[index],
            label=int(self.labels[index]),
            domain=self.domain,
            clip_id=self.clip_ids[index],
        )
