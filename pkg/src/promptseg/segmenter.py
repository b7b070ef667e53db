"""Point-prompt segmenter backends and the synthetic dataset generator.

A segmenter backend takes an image plus one instance's prompt points and
returns a binary mask of the same dimensions. The classical baseline runs a
two-label competitive flood (minimum accumulated cost from seeds) so the
whole pipeline works without any model weights; the remote backend forwards
prompts to an HTTP server speaking the RLE wire protocol.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import cv2
import numpy as np
import requests
from skimage.graph import MCP_Geometric

from . import grid
from .errors import (
    DegeneratePrompts,
    PackingFailure,
    ProtocolError,
    Timeout,
    Unreachable,
)
from .sampler import PromptSet

# ---------------------------------------------------------------------------
# run-length mask encoding (wire format)
# ---------------------------------------------------------------------------


def rle_encode(mask: np.ndarray) -> list[int]:
    """Alternating run lengths, row-major, starting with a background run."""
    mask = grid.as_mask(mask)
    flat = mask.ravel().astype(np.int8)
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0] == 1:
        runs = [0] + runs
    return [int(r) for r in runs]


def rle_decode(runs: list[int], width: int, height: int) -> np.ndarray:
    """Inverse of rle_encode; the runs must sum exactly to width*height."""
    total = width * height
    if any(r < 0 for r in runs):
        raise ProtocolError("negative run length")
    if sum(runs) != total:
        raise ProtocolError(f"run lengths sum to {sum(runs)}, expected {total}")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    value = False
    for r in runs:
        if value:
            flat[pos : pos + r] = True
        pos += r
        value = not value
    return flat.reshape(height, width)


# ---------------------------------------------------------------------------
# classical baseline: two-label competitive flood
# ---------------------------------------------------------------------------


def _to_gray(image: np.ndarray) -> np.ndarray:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 3:
        img = img.mean(axis=2)
    if img.max() > img.min():
        img = (img - img.min()) / (img.max() - img.min())
    return img


def _validate_prompts(shape, prompts: PromptSet):
    h, w = shape
    if not prompts.positives:
        raise ValueError("at least one positive point is required")
    for x, y in prompts.positives + prompts.negatives:
        if not (0 <= x < w and 0 <= y < h):
            raise ValueError(f"point ({x},{y}) outside {w}x{h} grid")
    if set(prompts.positives) & set(prompts.negatives):
        raise DegeneratePrompts("a positive and a negative point coincide")


def _flood_costs(cost: np.ndarray, seeds: list[tuple[int, int]]) -> np.ndarray:
    mcp = MCP_Geometric(cost, fully_connected=True)
    costs, _ = mcp.find_costs([(y, x) for x, y in seeds])
    return costs


def region_compete_segment(
    image: np.ndarray,
    prompts: PromptSet,
    edge_weight: float = 1.0,
    base_cost: float = 0.02,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-label competitive flood from positive vs negative seeds.

    Each pixel accumulates a minimum path cost from the object seeds and from
    the background seeds (negatives plus the image border); the cheaper side
    claims it. The per-pixel step cost is a small constant plus the local
    gradient magnitude, so on a uniform image the result is a geodesic
    Voronoi region and on real images region growth stops at edges.

    Returns (mask, object_cost_field); the cost field doubles as a
    per-pixel confidence for resolving overlaps between instances.
    """
    img = _to_gray(image)
    _validate_prompts(img.shape, prompts)
    h, w = img.shape
    gy, gx = np.gradient(img)
    cost = base_cost + edge_weight * np.hypot(gx, gy)

    border = (
        [(x, 0) for x in range(w)]
        + [(x, h - 1) for x in range(w)]
        + [(0, y) for y in range(1, h - 1)]
        + [(w - 1, y) for y in range(1, h - 1)]
    )
    bg_seeds = list(dict.fromkeys(prompts.negatives + border))
    # a positive on the border still seeds the object side only
    bg_seeds = [p for p in bg_seeds if p not in set(prompts.positives)]

    cost_obj = _flood_costs(cost, prompts.positives)
    cost_bg = _flood_costs(cost, bg_seeds) if bg_seeds else np.full_like(cost, np.inf)

    mask = cost_obj < cost_bg
    for x, y in prompts.positives:
        mask[y, x] = True
    for x, y in prompts.negatives:
        mask[y, x] = False
    return mask, cost_obj


class BaselineBackend:
    """Weight-free competitive-flood segmenter."""

    id = "baseline"
    kind = "baseline"

    def segment_with_cost(self, image, prompts: PromptSet):
        return region_compete_segment(image, prompts)

    def __call__(self, image, prompts: PromptSet) -> np.ndarray:
        return self.segment_with_cost(image, prompts)[0]


# ---------------------------------------------------------------------------
# remote backend
# ---------------------------------------------------------------------------


def encode_image_b64_png(image: np.ndarray) -> str:
    img = np.asarray(image)
    if img.dtype != np.uint8:
        lo, hi = float(img.min()), float(img.max())
        scale = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img, dtype=float)
        img = np.floor(scale * 255 + 0.5).astype(np.uint8)
    ok, buf = cv2.imencode(".png", img)
    if not ok:
        raise ProtocolError("failed to encode image as PNG")
    return base64.b64encode(buf.tobytes()).decode("ascii")


def prompts_to_wire(prompts: PromptSet) -> list[dict]:
    return [{"x": x, "y": y, "label": 1} for x, y in prompts.positives] + [
        {"x": x, "y": y, "label": 0} for x, y in prompts.negatives
    ]


def remote_segment(
    endpoint: str, image: np.ndarray, prompts: PromptSet, timeout: float = 30.0
) -> np.ndarray:
    """POST prompts to an RLE-speaking segmentation server and decode the mask."""
    h, w = np.asarray(image).shape[:2]
    payload = {
        "image_b64_png": encode_image_b64_png(image),
        "points": prompts_to_wire(prompts),
    }
    try:
        resp = requests.post(endpoint, json=payload, timeout=timeout)
    except requests.Timeout as e:
        raise Timeout(f"remote backend timed out after {timeout}s") from e
    except requests.ConnectionError as e:
        raise Unreachable(f"cannot reach {endpoint}") from e
    if resp.status_code != 200:
        raise ProtocolError(f"remote backend returned status {resp.status_code}")
    try:
        body = resp.json()
        rw, rh, runs = int(body["width"]), int(body["height"]), body["rle"]
    except (ValueError, KeyError, TypeError) as e:
        raise ProtocolError("malformed response body") from e
    if (rw, rh) != (w, h):
        raise ProtocolError(f"response dimensions {rw}x{rh} do not match input {w}x{h}")
    return rle_decode(runs, rw, rh)


class RemoteBackend:
    kind = "remote"

    def __init__(self, endpoint: str, timeout: float = 30.0, strict: bool = False):
        self.endpoint = endpoint
        self.timeout = timeout
        self.strict = strict
        self.id = f"remote:{endpoint}"

    def __call__(self, image, prompts: PromptSet) -> np.ndarray:
        mask = remote_segment(self.endpoint, image, prompts, self.timeout)
        if self.strict:
            assert_prompt_containment(mask, prompts)
        return mask


def assert_prompt_containment(mask: np.ndarray, prompts: PromptSet):
    """Contract check: positives inside the mask, negatives outside."""
    for x, y in prompts.positives:
        if not mask[y, x]:
            raise ProtocolError(f"positive point ({x},{y}) outside returned mask")
    for x, y in prompts.negatives:
        if mask[y, x]:
            raise ProtocolError(f"negative point ({x},{y}) inside returned mask")


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    side: int = 128
    n_instances: int = 5
    radius_min: int = 13
    radius_max: int = 16
    contrast: float = 0.45
    noise_sigma: float = 0.12
    background: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if not (0 < self.radius_min <= self.radius_max):
            raise ValueError("need 0 < radius_min <= radius_max")


def _render_blob(side, cx, cy, r, rng) -> np.ndarray:
    """Disk with a low-frequency sinusoidal boundary perturbation."""
    k1, k2 = rng.integers(2, 5, size=2)
    a1, a2 = rng.uniform(0.02, 0.07, size=2)
    ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
    ys, xs = np.mgrid[0:side, 0:side]
    dx = xs - cx
    dy = ys - cy
    theta = np.arctan2(dy, dx)
    radius = r * (1 + a1 * np.sin(k1 * theta + ph1) + a2 * np.sin(k2 * theta + ph2))
    return np.hypot(dx, dy) <= radius


def synth_generate(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping bright blobs on a dark noisy background with exact GT.

    Deterministic per seed. Raises PackingFailure when the requested count
    cannot be placed without overlap after bounded retries.
    """
    rng = np.random.default_rng(spec.seed)
    side = spec.side
    placed = []  # (cx, cy, r)
    max_tries = 300 * spec.n_instances
    tries = 0
    # 1.15 covers the worst-case boundary perturbation; +2 keeps blobs disjoint
    while len(placed) < spec.n_instances:
        if tries >= max_tries:
            raise PackingFailure(
                f"placed {len(placed)}/{spec.n_instances} blobs in {max_tries} tries"
            )
        tries += 1
        r = int(rng.integers(spec.radius_min, spec.radius_max + 1))
        margin = int(np.ceil(r * 1.15)) + 2
        if 2 * margin >= side:
            continue
        cx = int(rng.integers(margin, side - margin))
        cy = int(rng.integers(margin, side - margin))
        if all(
            np.hypot(cx - px, cy - py) > 1.15 * (r + pr) + 2 for px, py, pr in placed
        ):
            placed.append((cx, cy, r))

    labels = np.zeros((side, side), dtype=np.int32)
    for i, (cx, cy, r) in enumerate(placed, start=1):
        labels[_render_blob(side, cx, cy, r, rng)] = i

    image = np.full((side, side), spec.background, dtype=np.float64)
    image[labels > 0] += spec.contrast
    if spec.noise_sigma > 0:
        image += rng.normal(0, spec.noise_sigma, size=image.shape)
    return np.clip(image, 0, 1), labels
