"""Shared brute-force oracles and random-input helpers.

Everything here is deliberately independent of the library implementations:
morphology is checked per-pixel, distances by exhaustive all-pairs minima,
components by union-find, and instance matching by exhaustive search.
"""

import numpy as np
import pytest


def brute_erode_once(mask):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            ok = True
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if not (0 <= yy < h and 0 <= xx < w) or not mask[yy, xx]:
                        ok = False
            out[y, x] = ok
    return out


def brute_dilate_once(mask):
    h, w = mask.shape
    out = np.zeros_like(mask)
    for y in range(h):
        for x in range(w):
            hit = False
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
                        hit = True
            out[y, x] = hit
    return out


def brute_erode(mask, iterations):
    out = mask.copy()
    for _ in range(iterations):
        out = brute_erode_once(out)
    return out


def brute_dilate(mask, iterations):
    out = mask.copy()
    for _ in range(iterations):
        out = brute_dilate_once(out)
    return out


def brute_distance(mask):
    """Exhaustive all-pairs minimum Euclidean distance to the foreground."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    assert ys.size > 0
    yy, xx = np.mgrid[0:h, 0:w]
    d2 = (yy[:, :, None] - ys) ** 2 + (xx[:, :, None] - xs) ** 2
    return np.sqrt(d2.min(axis=2).astype(np.float64))


def brute_band(mask, lo, hi):
    d = brute_distance(mask)
    return (d >= lo) & (d <= hi) & ~mask


def brute_external(mask, dilate_iterations):
    return ~brute_dilate(mask, dilate_iterations) & ~mask


def union_find_components(mask):
    """8-connected component count via union-find."""
    h, w = mask.shape
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for y in range(h):
        for x in range(w):
            if mask[y, x]:
                parent.setdefault((y, x), (y, x))
                for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and mask[yy, xx]:
                        union((y, x), (yy, xx))
    return len({find(p) for p in parent})


def brute_max_matching_tp(pred, gt, threshold=0.5):
    """Exhaustive maximum one-to-one matching over IoU > threshold pairs."""
    gt_ids = sorted(set(np.unique(gt)) - {0})
    pred_ids = sorted(set(np.unique(pred)) - {0})
    cands = {}
    for g in gt_ids:
        gm = gt == g
        for p in pred_ids:
            pm = pred == p
            union = (gm | pm).sum()
            if union and (gm & pm).sum() / union > threshold:
                cands.setdefault(g, []).append(p)

    def best(idx, used):
        if idx == len(gt_ids):
            return 0
        g = gt_ids[idx]
        score = best(idx + 1, used)
        for p in cands.get(g, []):
            if p not in used:
                score = max(score, 1 + best(idx + 1, used | {p}))
        return score

    return best(0, frozenset())


def shift_erode(mask, iterations=1):
    """Erosion oracle: AND over all 3x3 shifts, border treated as background."""
    out = mask.copy()
    for _ in range(iterations):
        padded = np.pad(out, 1, constant_values=False)
        h, w = out.shape
        acc = np.ones_like(out)
        for dy in range(3):
            for dx in range(3):
                acc &= padded[dy : dy + h, dx : dx + w]
        out = acc
    return out


def shift_dilate(mask, iterations=1):
    """Dilation oracle: OR over all 3x3 shifts, clipped at the border."""
    out = mask.copy()
    for _ in range(iterations):
        padded = np.pad(out, 1, constant_values=False)
        h, w = out.shape
        acc = np.zeros_like(out)
        for dy in range(3):
            for dx in range(3):
                acc |= padded[dy : dy + h, dx : dx + w]
        out = acc
    return out


def chunked_distance(mask, chunk_rows=16):
    """All-pairs minimum Euclidean distance, row-chunked to bound memory."""
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    assert ys.size > 0
    out = np.empty((h, w), dtype=np.float64)
    cols = np.arange(w)
    for y0 in range(0, h, chunk_rows):
        rows = np.arange(y0, min(y0 + chunk_rows, h))
        d2 = (rows[:, None, None] - ys) ** 2 + (cols[None, :, None] - xs) ** 2
        out[y0 : y0 + len(rows)] = np.sqrt(d2.min(axis=2))
    return out


def random_mask(rng, h, w, density=None):
    """Random blobby mask: thresholded smoothed noise, possibly empty."""
    from scipy import ndimage

    noise = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma=rng.uniform(1, 4))
    if density is None:
        density = rng.uniform(0.05, 0.6)
    thresh = np.quantile(noise, 1 - density)
    return noise > thresh


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
