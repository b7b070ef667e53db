"""Dataset ingestion: 2D conversion, channel handling, padding, resizing, label I/O.

The canonical sample format is a 1024x1024 8-bit RGB image with a matching
1024x1024 instance label map. Rectangular inputs are zero-padded on the right
and bottom so the raw-to-canonical coordinate mapping stays a pure scale.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .errors import ChannelCount, EmptyDataset, IdOverflow, NotSquare

CANONICAL_SIDE = 1024


@dataclass
class RawSample:
    image: np.ndarray  # (h, w) grayscale, (h, w, 2) two-channel, or (h, w, 3) RGB
    labels: np.ndarray  # (h, w) non-negative integer ids
    source_id: str
    all_background: bool = False
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.image.shape[:2] != self.labels.shape[:2]:
            raise ValueError("image and labels must share spatial dimensions")


@dataclass
class CanonicalSample:
    image: np.ndarray  # (1024, 1024, 3) uint8
    labels: np.ndarray  # (1024, 1024) integer ids
    source_id: str
    provenance: dict = field(default_factory=dict)


def slice_volume(image: np.ndarray, labels: np.ndarray, source_id: str) -> list[RawSample]:
    """Split a (depth, h, w[, c]) volume into per-slice 2D samples.

    Slices whose labels are entirely background are kept but flagged.
    """
    if image.shape[0] < 1:
        raise ValueError("volume depth must be >= 1")
    out = []
    for z in range(image.shape[0]):
        lab = labels[z]
        out.append(
            RawSample(
                image=image[z].copy(),
                labels=lab.copy(),
                source_id=f"{source_id}_z{z:03d}",
                all_background=not bool((lab != 0).any()),
            )
        )
    return out


def _minmax_u8(channel: np.ndarray) -> np.ndarray:
    lo = float(channel.min())
    hi = float(channel.max())
    if hi <= lo:
        return np.zeros(channel.shape, dtype=np.uint8)
    scaled = (channel.astype(np.float64) - lo) / (hi - lo)
    return np.floor(scaled * 255 + 0.5).astype(np.uint8)


def compose_channels(sample: RawSample) -> RawSample:
    """Map a 2-channel sample to RGB: ch0 -> red, ch1 -> green, blue = 0.

    Each channel is min-max normalized independently to 8 bits.
    """
    img = sample.image
    if img.ndim != 3 or img.shape[2] != 2:
        raise ChannelCount(f"expected 2 channels, got shape {img.shape}")
    rgb = np.zeros((*img.shape[:2], 3), dtype=np.uint8)
    rgb[:, :, 0] = _minmax_u8(img[:, :, 0])
    rgb[:, :, 1] = _minmax_u8(img[:, :, 1])
    return RawSample(
        image=rgb,
        labels=sample.labels,
        source_id=sample.source_id,
        all_background=sample.all_background,
        provenance=dict(sample.provenance),
    )


def to_rgb(image: np.ndarray) -> np.ndarray:
    """Promote grayscale or 2-channel input to 3-channel."""
    if image.ndim == 2:
        return np.stack([image] * 3, axis=-1)
    if image.shape[2] == 2:
        rgb = np.zeros((*image.shape[:2], 3), dtype=image.dtype)
        rgb[:, :, :2] = image
        return rgb
    return image


def pad_to_square(sample: RawSample) -> RawSample:
    """Zero-pad image and labels on the right/bottom to side = max(w, h)."""
    h, w = sample.labels.shape
    side = max(h, w)
    pad_bottom = side - h
    pad_right = side - w
    if pad_bottom == 0 and pad_right == 0:
        img, lab = sample.image.copy(), sample.labels.copy()
    else:
        pad_img = [(0, pad_bottom), (0, pad_right)] + [(0, 0)] * (sample.image.ndim - 2)
        img = np.pad(sample.image, pad_img)
        lab = np.pad(sample.labels, [(0, pad_bottom), (0, pad_right)])
    prov = dict(sample.provenance)
    prov.update({"pad_right": pad_right, "pad_bottom": pad_bottom})
    return RawSample(
        image=img,
        labels=lab,
        source_id=sample.source_id,
        all_background=sample.all_background,
        provenance=prov,
    )


def resize_canonical(sample: RawSample, side: int = CANONICAL_SIDE) -> CanonicalSample:
    """Resize a square sample to the canonical side.

    Images use bilinear interpolation; labels use nearest-neighbor because
    ids are categorical. Instances smaller than one output pixel can vanish;
    the dropped ids are recorded in provenance.
    """
    h, w = sample.labels.shape
    if h != w:
        raise NotSquare(f"input must be square, got {w}x{h}")
    img = to_rgb(sample.image)
    if img.dtype != np.uint8:
        img = _minmax_u8(img.astype(np.float64))
    if h == side:
        out_img, out_lab = img.copy(), sample.labels.copy()
    else:
        out_img = cv2.resize(img, (side, side), interpolation=cv2.INTER_LINEAR)
        out_lab = cv2.resize(
            sample.labels.astype(np.int32), (side, side), interpolation=cv2.INTER_NEAREST
        )
    in_ids = set(np.unique(sample.labels).tolist()) - {0}
    out_ids = set(np.unique(out_lab).tolist()) - {0}
    prov = dict(sample.provenance)
    prov.update(
        {"scale": side / h, "dropped_ids": sorted(in_ids - out_ids)}
    )
    return CanonicalSample(
        image=out_img, labels=out_lab, source_id=sample.source_id, provenance=prov
    )


def save_label_map(labels: np.ndarray, path) -> None:
    """Write a label map as a 16-bit single-channel PNG (lossless)."""
    labels = np.asarray(labels)
    if labels.min() < 0:
        raise ValueError("label ids must be non-negative")
    if labels.max() > 0xFFFF:
        raise IdOverflow(f"max id {int(labels.max())} exceeds 16-bit format")
    ok = cv2.imwrite(str(path), labels.astype(np.uint16))
    if not ok:
        raise IOError(f"failed to write label map to {path}")


def load_label_map(path) -> np.ndarray:
    """Read a 16-bit label map written by save_label_map."""
    arr = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if arr is None:
        raise IOError(f"failed to read label map from {path}")
    if arr.ndim != 2:
        raise IOError(f"label map must be single-channel, got shape {arr.shape}")
    return arr.astype(np.int32)


@dataclass(frozen=True)
class ManifestEntry:
    path: str  # sample path relative to the manifest root (label file)
    split: str  # train | val | test
    domain: str  # LM | EM | histopathology | medical


@dataclass
class Manifest:
    root: Path
    entries: list[ManifestEntry]

    def image_path(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return self.root / p.parent.parent / "images" / p.name

    def label_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path


SPLITS = ("train", "val", "test")


def _split_for(source_id: str, seed: int, fractions: dict[str, float]) -> str:
    digest = hashlib.blake2b(
        f"{seed}:{source_id}".encode(), digest_size=8
    ).digest()
    u = int.from_bytes(digest, "little") / 2**64
    acc = 0.0
    for split in SPLITS:
        acc += fractions.get(split, 0.0)
        if u < acc:
            return split
    return SPLITS[-1]


def build_manifest(
    root,
    fractions: dict[str, float] | None = None,
    seed: int = 0,
    domain: str = "LM",
) -> Manifest:
    """Enumerate `<root>/**/labels/*.png` lexicographically and assign splits.

    Split assignment hashes each source id with the seed, so it is stable
    under additions and removals of other files.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyDataset(f"{root} is not a directory")
    fractions = fractions or {"train": 0.8, "val": 0.0, "test": 0.2}
    label_files = sorted(root.glob("**/labels/*.png"))
    if not label_files:
        raise EmptyDataset(f"no label files under {root}")
    entries = []
    seen = set()
    for f in label_files:
        rel = str(f.relative_to(root))
        if rel in seen:
            raise ValueError(f"duplicate manifest path: {rel}")
        seen.add(rel)
        entries.append(
            ManifestEntry(path=rel, split=_split_for(rel, seed, fractions), domain=domain)
        )
    return Manifest(root=root, entries=entries)


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w") as fh:
        for e in manifest.entries:
            fh.write(f"{e.path}\t{e.split}\t{e.domain}\n")


def read_manifest(path, root=None) -> Manifest:
    path = Path(path)
    root = Path(root) if root is not None else path.parent
    entries = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            rel, split, domain = line.split("\t")
            entries.append(ManifestEntry(path=rel, split=split, domain=domain))
    if not entries:
        raise EmptyDataset(f"manifest {path} is empty")
    return Manifest(root=root, entries=entries)
