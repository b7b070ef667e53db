"""Boundary-regularized prompt sampling.

Positive points prefer the deeply eroded interior of an instance; negative
points prefer a thin background band just outside the boundary. Both samplers
fall back through explicit cascades so they are total on any mask.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import NoBackground


@dataclass(frozen=True)
class SbrConfig:
    """Knobs for prompt generation; defaults give 1 positive + 3 negatives."""

    n_positive: int = 1
    n_negative: int = 3
    erosion_iterations: int = 10
    band_lo: float = 9
    band_hi: float = 11
    external_dilate_iterations: int = 11
    seed: int = 0

    def __post_init__(self):
        if self.n_positive < 1:
            raise ValueError("n_positive must be >= 1")
        if self.n_negative < 0:
            raise ValueError("n_negative must be >= 0")
        if self.band_lo > self.band_hi:
            raise ValueError("band_lo must be <= band_hi")


@dataclass
class PromptSet:
    """Ordered positive/negative pixel prompts for one instance."""

    instance_id: int
    positives: list[tuple[int, int]] = field(default_factory=list)
    negatives: list[tuple[int, int]] = field(default_factory=list)


def derive_rng(seed: int, *scope) -> np.random.Generator:
    """Independent RNG stream keyed by a stable hash of (seed, *scope).

    Platform-independent: the key is hashed with blake2b, so adding or
    removing one instance never perturbs another instance's stream.
    """
    key = json.dumps([seed, *scope], separators=(",", ":")).encode()
    digest = hashlib.blake2b(key, digest_size=8).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def _region_points(region: np.ndarray) -> np.ndarray:
    """Row-major (x, y) enumeration of a boolean region."""
    ys, xs = np.nonzero(region)
    return np.column_stack([xs, ys])


def sample_positive_points(
    mask: np.ndarray,
    n_p: int,
    rng: np.random.Generator,
    erosion_iterations: int = 10,
) -> list[tuple[int, int]]:
    """Sample n_p positive points for one instance mask.

    Cascade: (a) uniform without replacement from the eroded interior when it
    holds at least n_p pixels; (b) cycle through the interior's row-major
    enumeration when it is smaller but non-empty; (c) the mask centroid
    repeated when the interior is empty; (d) the image center repeated when
    the mask itself is empty.
    """
    if n_p < 1:
        raise ValueError("n_p must be >= 1")
    mask = grid.as_mask(mask)
    h, w = mask.shape
    interior = grid.erode(mask, erosion_iterations)
    pts = _region_points(interior)
    if len(pts) >= n_p:
        chosen = pts[rng.choice(len(pts), size=n_p, replace=False)]
        return [(int(x), int(y)) for x, y in chosen]
    if len(pts) > 0:
        return [tuple(int(v) for v in pts[i % len(pts)]) for i in range(n_p)]
    if mask.any():
        cx, cy = grid.centroid(mask)
        if not mask[cy, cx]:
            # non-convex masks can put the centroid outside; snap to the
            # nearest foreground pixel so the point stays a valid positive
            ys, xs = np.nonzero(mask)
            i = int(np.argmin((xs - cx) ** 2 + (ys - cy) ** 2))
            cx, cy = int(xs[i]), int(ys[i])
        return [(cx, cy)] * n_p
    return [(w // 2, h // 2)] * n_p


def sample_negative_points(
    mask: np.ndarray,
    n_n: int,
    rng: np.random.Generator,
    band_lo: float = 9,
    band_hi: float = 11,
    external_dilate_iterations: int = 11,
) -> list[tuple[int, int]]:
    """Sample n_n negative points around one instance mask.

    Cascade: (a) uniform without replacement from the boundary band when it
    holds at least n_n pixels; (b) likewise from the external region beyond
    the dilated mask; (c) uniform with replacement over all background.
    An empty mask has no band and no external region, so it falls straight
    through to (c). A mask covering the whole grid leaves no background at
    all and raises NoBackground.
    """
    if n_n < 0:
        raise ValueError("n_n must be >= 0")
    mask = grid.as_mask(mask)
    if n_n == 0:
        return []
    if mask.any():
        band = _region_points(grid.boundary_band(mask, band_lo, band_hi))
        if len(band) >= n_n:
            chosen = band[rng.choice(len(band), size=n_n, replace=False)]
            return [(int(x), int(y)) for x, y in chosen]
        external = _region_points(grid.external_region(mask, external_dilate_iterations))
        if len(external) >= n_n:
            chosen = external[rng.choice(len(external), size=n_n, replace=False)]
            return [(int(x), int(y)) for x, y in chosen]
    background = _region_points(~mask)
    if len(background) == 0:
        raise NoBackground("mask covers the entire grid; no negative point exists")
    chosen = background[rng.choice(len(background), size=n_n, replace=True)]
    return [(int(x), int(y)) for x, y in chosen]


def generate_prompts(
    labels: np.ndarray,
    cfg: SbrConfig,
    image_id: str = "",
) -> list[PromptSet]:
    """One PromptSet per instance id, ascending, with per-instance RNG streams."""
    out = []
    for iid in grid.instance_ids(labels):
        mask = grid.extract_instance(labels, iid)
        rng = derive_rng(cfg.seed, image_id, iid)
        out.append(
            PromptSet(
                instance_id=iid,
                positives=sample_positive_points(
                    mask, cfg.n_positive, rng, cfg.erosion_iterations
                ),
                negatives=sample_negative_points(
                    mask,
                    cfg.n_negative,
                    rng,
                    cfg.band_lo,
                    cfg.band_hi,
                    cfg.external_dilate_iterations,
                ),
            )
        )
    return out


def select_training_instances(
    labels: np.ndarray, max_instances: int, rng: np.random.Generator
) -> list[int]:
    """Uniform subsample (without replacement) of instance ids, capped."""
    if max_instances < 1:
        raise ValueError("max_instances must be >= 1")
    ids = grid.instance_ids(labels)
    if len(ids) <= max_instances:
        return ids
    chosen = rng.choice(len(ids), size=max_instances, replace=False)
    return [ids[i] for i in chosen]


def prompt_record(image_id: str, ps: PromptSet) -> str:
    """Single-line JSON record with point labels 1 (positive) and 0 (negative)."""
    points = [{"x": x, "y": y, "label": 1} for x, y in ps.positives]
    points += [{"x": x, "y": y, "label": 0} for x, y in ps.negatives]
    return json.dumps(
        {"image_id": image_id, "instance_id": ps.instance_id, "points": points},
        separators=(",", ":"),
    )


def parse_prompt_record(line: str) -> tuple[str, PromptSet]:
    """Inverse of prompt_record."""
    obj = json.loads(line)
    ps = PromptSet(instance_id=obj["instance_id"])
    for p in obj["points"]:
        target = ps.positives if p["label"] == 1 else ps.negatives
        target.append((p["x"], p["y"]))
    return obj["image_id"], ps
