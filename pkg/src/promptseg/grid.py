"""Pixel-grid geometry primitives: morphology, distance fields, centroids, components.

Conventions used throughout the package:

- a binary mask is a 2D boolean array of shape (height, width), row-major,
  origin at the top-left; x indexes columns, y indexes rows
- an instance label map is a 2D integer array of the same layout, id 0 is
  background, positive ids are instances (not necessarily contiguous)
- points are (x, y) integer tuples
- pixels outside the grid are background for all morphological operations
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import EmptySource

# 3x3 square structuring element for erosion and dilation
_SQUARE3 = np.ones((3, 3), dtype=bool)


def as_mask(a) -> np.ndarray:
    """Coerce to a 2D boolean array, validating shape."""
    m = np.asarray(a, dtype=bool)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"mask must be 2D and non-degenerate, got shape {m.shape}")
    return m


def erode(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Erode with a 3x3 square element; out-of-grid pixels count as background."""
    mask = as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return mask.copy()
    return ndimage.binary_erosion(
        mask, structure=_SQUARE3, iterations=iterations, border_value=0
    )


def dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Dilate with a 3x3 square element, clipped to the grid."""
    mask = as_mask(mask)
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return mask.copy()
    return ndimage.binary_dilation(
        mask, structure=_SQUARE3, iterations=iterations, border_value=0
    )


def distance_to_mask(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance from every pixel to the nearest foreground pixel.

    Zero on the foreground itself. Raises EmptySource for an all-background mask.
    """
    mask = as_mask(mask)
    if not mask.any():
        raise EmptySource("distance_to_mask requires a non-empty mask")
    # distance_transform_edt measures to the nearest zero, so invert
    return ndimage.distance_transform_edt(~mask)


def centroid(mask: np.ndarray) -> tuple[int, int]:
    """Foreground centroid as an (x, y) pixel, rounded half-away-from-zero."""
    mask = as_mask(mask)
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        raise EmptySource("centroid requires a non-empty mask")
    # coordinates are non-negative, so floor(v + 0.5) is half-away-from-zero
    cx = int(np.floor(xs.mean() + 0.5))
    cy = int(np.floor(ys.mean() + 0.5))
    h, w = mask.shape
    return (min(max(cx, 0), w - 1), min(max(cy, 0), h - 1))


def boundary_band(mask: np.ndarray, lo: float = 9, hi: float = 11) -> np.ndarray:
    """Background pixels whose Euclidean distance to the mask lies in [lo, hi]."""
    if not (0 < lo <= hi):
        raise ValueError("need 0 < lo <= hi")
    d = distance_to_mask(mask)
    return (d >= lo) & (d <= hi) & ~as_mask(mask)


def external_region(mask: np.ndarray, dilate_iterations: int) -> np.ndarray:
    """Pixels outside both the mask and its dilation."""
    mask = as_mask(mask)
    return ~dilate(mask, dilate_iterations) & ~mask


def connected_components(mask: np.ndarray) -> np.ndarray:
    """Label 8-connected components 1..k in first-encounter row-major order."""
    mask = as_mask(mask)
    raw, n = ndimage.label(mask, structure=_SQUARE3)
    if n == 0:
        return np.zeros(mask.shape, dtype=np.int32)
    # renumber by first occurrence in the flattened raster scan
    flat = raw.ravel()
    first = np.full(n + 1, flat.size, dtype=np.int64)
    nz = np.nonzero(flat)[0]
    # reversed so earlier indices overwrite later ones
    first[flat[nz[::-1]]] = nz[::-1]
    order = np.argsort(first[1:], kind="stable") + 1
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order] = np.arange(1, n + 1, dtype=np.int32)
    return remap[raw]


def instance_ids(labels: np.ndarray) -> list[int]:
    """Sorted distinct non-zero ids present in a label map."""
    labels = np.asarray(labels)
    ids = np.unique(labels)
    return [int(i) for i in ids if i != 0]


def extract_instance(labels: np.ndarray, instance_id: int) -> np.ndarray:
    """Binary mask of one instance, same dimensions as the label map."""
    return np.asarray(labels) == instance_id
