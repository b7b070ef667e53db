"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
"""

import time
from fractions import Fraction
from pathlib import Path

import cv2
import numpy as np
import pytest
from fastapi.testclient import TestClient

from promptseg import bench, grid, ingest, metrics, sampler, vlsa
from promptseg.bench import RunConfig, ablation_sweep, run_eval, sweep_to_csv
from promptseg.sampler import SbrConfig
from promptseg.segmenter import SynthSpec, rle_encode, synth_generate
from promptseg.service import create_app

from conftest import (
    brute_max_matching_tp,
    chunked_distance,
    random_mask,
    shift_dilate,
    shift_erode,
)

from test_vlsa import GOLDEN, golden_params


def ok(name):
    print(f"PASS: {name}")


@pytest.fixture(scope="module")
def synth_dataset_50(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept_ds")
    img_dir = root / "synth" / "test" / "images"
    lab_dir = root / "synth" / "test" / "labels"
    img_dir.mkdir(parents=True)
    lab_dir.mkdir(parents=True)
    for i in range(50):
        image, labels = synth_generate(SynthSpec(side=128, n_instances=5, seed=7000 + i))
        u8 = np.floor(image * 255 + 0.5).astype(np.uint8)
        cv2.imwrite(str(img_dir / f"img_{i:03d}.png"), u8)
        ingest.save_label_map(labels, lab_dir / f"img_{i:03d}.png")
    manifest = ingest.build_manifest(root, {"test": 1.0}, seed=0)
    ingest.write_manifest(manifest, root / "manifest.tsv")
    return root / "manifest.tsv"


def test_sbr_oracle_suite():
    """Branch selection, positive containment, and band distances on 1000 masks."""
    rng = np.random.default_rng(2026)
    start = time.monotonic()
    n_p, n_n = 2, 3
    for case in range(1000):
        h = int(rng.integers(16, 129))
        w = int(rng.integers(16, 129))
        kind = case % 4
        if kind == 0:
            mask = np.zeros((h, w), dtype=bool)
        elif kind == 1:
            mask = np.zeros((h, w), dtype=bool)
            y, x = rng.integers(0, h), rng.integers(0, w)
            mask[y : y + int(rng.integers(1, 6)), x : x + int(rng.integers(1, 6))] = True
        else:
            mask = random_mask(rng, h, w, density=float(rng.uniform(0.03, 0.3)))

        interior = shift_erode(mask, 10)
        n_interior = int(interior.sum())
        pos = sampler.sample_positive_points(mask, n_p, rng)
        assert len(pos) == n_p
        if n_interior >= n_p:
            assert len(set(pos)) == n_p
            for x, y in pos:
                assert interior[y, x]
        elif n_interior > 0:
            ys, xs = np.nonzero(interior)
            enum = list(zip(xs.tolist(), ys.tolist()))
            assert pos == [enum[i % n_interior] for i in range(n_p)]
        elif mask.any():
            assert len(set(pos)) == 1
            for x, y in pos:
                assert mask[y, x]
        else:
            assert pos == [(w // 2, h // 2)] * n_p

        if mask.any() and not mask.all():
            dist = chunked_distance(mask)
            band = (dist >= 9) & (dist <= 11) & ~mask
            ext = shift_dilate(mask, 11)
            ext = ~ext & ~mask
            neg = sampler.sample_negative_points(mask, n_n, rng)
            assert len(neg) == n_n
            if band.sum() >= n_n:
                for x, y in neg:
                    assert 9 <= dist[y, x] <= 11 and not mask[y, x]
            elif ext.sum() >= n_n:
                for x, y in neg:
                    assert ext[y, x]
            else:
                for x, y in neg:
                    assert not mask[y, x]
        elif not mask.any():
            neg = sampler.sample_negative_points(mask, n_n, rng)
            assert len(neg) == n_n
    elapsed = time.monotonic() - start
    assert elapsed < 60, f"SBR oracle suite took {elapsed:.1f}s"
    ok(f"SBR oracle suite (1000 masks, {elapsed:.1f}s)")


def test_morphology_distance_exactness():
    """erode/dilate/distance/band/external bitwise equal to oracles on 200 grids."""
    rng = np.random.default_rng(99)
    for _ in range(200):
        h = int(rng.integers(4, 65))
        w = int(rng.integers(4, 65))
        mask = random_mask(rng, h, w)
        k = int(rng.integers(0, 5))
        assert np.array_equal(grid.erode(mask, k), shift_erode(mask, k))
        assert np.array_equal(grid.dilate(mask, k), shift_dilate(mask, k))
        assert np.array_equal(grid.external_region(mask, k),
                              ~shift_dilate(mask, k) & ~mask)
        if mask.any():
            d_oracle = chunked_distance(mask)
            assert np.array_equal(grid.distance_to_mask(mask), d_oracle)
            band_oracle = (d_oracle >= 9) & (d_oracle <= 11) & ~mask
            assert np.array_equal(grid.boundary_band(mask, 9, 11), band_oracle)
    ok("morphology/distance exactness (200 grids <= 64x64)")


def test_metrics_correctness():
    """Scalar Dice/IoU, greedy-vs-exhaustive matching, relabeling invariance."""
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.random((10, 10)) > 0.5
        b = rng.random((10, 10)) > 0.5
        inter = int((a & b).sum())
        total = int(a.sum()) + int(b.sum())
        union = int((a | b).sum())
        exp_dice = 1.0 if total == 0 else 2 * inter / total
        exp_iou = 1.0 if union == 0 else inter / union
        assert abs(metrics.dice(a, b) - exp_dice) <= 1e-12
        assert abs(metrics.iou(a, b) - exp_iou) <= 1e-12

    for _ in range(500):
        h, w = 14, 14
        gt = np.zeros((h, w), dtype=np.int32)
        pred = np.zeros((h, w), dtype=np.int32)
        for target in (gt, pred):
            for i in range(1, int(rng.integers(1, 7))):
                y0, x0 = rng.integers(0, h - 2), rng.integers(0, w - 2)
                dy, dx = rng.integers(2, 8), rng.integers(2, 8)
                target[y0 : y0 + dy, x0 : x0 + dx] = i
        tp = len(metrics.match_instances(pred, gt, 0.5))
        assert tp == brute_max_matching_tp(pred, gt, 0.5)

        sa1 = metrics.segmentation_accuracy(pred, gt)
        ids = sorted(set(np.unique(pred)) - {0})
        if ids:
            perm = dict(zip(ids, rng.permutation(ids).tolist()))
            perm[0] = 0
            shuffled = np.vectorize(perm.get)(pred).astype(np.int32)
            assert metrics.segmentation_accuracy(shuffled, gt) == sa1
    ok("metrics correctness (500 matching cases + scalar recomputation)")


def test_vlsa_data_flow():
    """Shape law, conservation, round trips, golden fixture, homogeneity."""
    rng = np.random.default_rng(11)
    ratios = [Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2), Fraction(4)]
    for _ in range(100):
        t = rng.standard_normal((1, 4, 4, 32))
        for ratio in ratios:
            out = vlsa.pixel_shuffle(t, ratio)
            assert out.shape == (1, int(4 * ratio), int(4 * ratio), int(32 / ratio / ratio))
            assert np.array_equal(np.sort(out.ravel()), np.sort(t.ravel()))
            back = vlsa.pixel_shuffle(out, 1 / ratio)
            assert np.array_equal(back, t)

    tokens, params = golden_params()
    hidden = vlsa.TokenSequence(tokens, n_visual=4, n_text=0, visual_grid=(2, 2))
    out = vlsa.vlsa_forward(hidden, params)
    header, values = GOLDEN.read_text().split("\n", 1)
    h, w, dim = (int(v) for v in header.split())
    expected = np.array([float(v) for v in values.split()]).reshape(h * w, dim)
    assert out.grid == (h, w)
    assert np.abs(out.vectors - expected).max() < 1e-9

    params.alpha, params.beta = 1.0, 0.0
    one = vlsa.vlsa_forward(hidden, params)
    params.alpha = 2.0
    two = vlsa.vlsa_forward(hidden, params)
    assert np.array_equal(two.vectors, 2 * one.vectors)
    ok("VLSA data-flow invariants (100 tensors + golden fixture)")


def test_directional_and_sweep_runtime(synth_dataset_50):
    """Negative prompts must help by >= 0.02 Dice; six-pair sweep under 5 min."""
    cfg = RunConfig(manifest_path=str(synth_dataset_50), sbr=SbrConfig(seed=0))
    start = time.monotonic()
    table = ablation_sweep(cfg)
    elapsed = time.monotonic() - start
    by_pair = {(p, n): d for p, n, d, _ in table.rows}
    gap = by_pair[(1, 3)] - by_pair[(1, 0)]
    assert gap >= 0.02, f"Dice gap {gap:.3f} below 0.02"
    assert elapsed < 300, f"sweep took {elapsed:.1f}s"
    ok(f"directional check (Dice gap {gap:.3f}) and sweep runtime ({elapsed:.0f}s)")


def test_sweep_determinism(synth_dataset_50):
    """Identical config twice -> byte-identical CSV."""
    cfg = RunConfig(
        manifest_path=str(synth_dataset_50), sbr=SbrConfig(seed=5), sweep=[(1, 0), (1, 3)]
    )
    a = sweep_to_csv(ablation_sweep(cfg))
    b = sweep_to_csv(ablation_sweep(cfg))
    assert a.encode() == b.encode()
    ok("sweep determinism (byte-identical CSV)")


def test_service_round_trip(tmp_path):
    """upload -> predict -> save x2 -> export yields ids {1,2} and round-trips."""
    client = TestClient(create_app())
    image, _ = synth_generate(SynthSpec(side=160, n_instances=2, seed=31))
    u8 = np.floor(image * 255 + 0.5).astype(np.uint8)
    okflag, buf = cv2.imencode(".png", u8)
    assert okflag
    r = client.post("/images", files={"file": ("a.png", buf.tobytes(), "image/png")})
    image_id = r.json()["image_id"]

    pred = client.post(
        "/predict",
        json={"image_id": image_id, "points": [{"x": 512, "y": 512, "label": 1}]},
    ).json()
    assert sum(pred["rle"]) == 1024 * 1024

    m1 = np.zeros((1024, 1024), dtype=bool)
    m1[100:200, 100:200] = True
    m2 = np.zeros_like(m1)
    m2[400:500, 400:500] = True
    id1 = client.post(
        "/instances", json={"image_id": image_id, "rle": rle_encode(m1)}
    ).json()["instance_id"]
    id2 = client.post(
        "/instances", json={"image_id": image_id, "rle": rle_encode(m2)}
    ).json()["instance_id"]
    assert (id1, id2) == (1, 2)

    exported = client.get(f"/export/{image_id}").content
    path = tmp_path / "export.png"
    path.write_bytes(exported)
    labels = ingest.load_label_map(path)
    assert set(np.unique(labels)) == {0, 1, 2}

    round_trip = tmp_path / "rt.png"
    ingest.save_label_map(labels, round_trip)
    assert np.array_equal(ingest.load_label_map(round_trip), labels)
    ok("service round trip (ids exactly {1,2}, bitwise label round trip)")


def test_ingest_invariants():
    """Pad/resize preserve ids (modulo flagged drops); label I/O round trips."""
    rng = np.random.default_rng(55)
    import tempfile

    for _ in range(100):
        h = int(rng.integers(8, 120))
        w = int(rng.integers(8, 120))
        labels = np.zeros((h, w), dtype=np.int32)
        for i in range(1, int(rng.integers(1, 6))):
            y0, x0 = rng.integers(0, h - 1), rng.integers(0, w - 1)
            dy, dx = rng.integers(1, h), rng.integers(1, w)
            labels[y0 : y0 + dy, x0 : x0 + dx] = i
        raw = ingest.RawSample(
            image=rng.random((h, w)), labels=labels, source_id="acc"
        )
        padded = ingest.pad_to_square(raw)
        assert set(np.unique(padded.labels).tolist()) == set(np.unique(labels).tolist())
        canonical = ingest.resize_canonical(padded, side=256)
        in_ids = set(np.unique(labels).tolist()) - {0}
        out_ids = set(np.unique(canonical.labels).tolist()) - {0}
        dropped = set(canonical.provenance["dropped_ids"])
        assert out_ids | dropped == in_ids
        assert not (out_ids - in_ids)

        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "lab.png"
            ingest.save_label_map(canonical.labels, p)
            assert np.array_equal(ingest.load_label_map(p), canonical.labels)
    ok("ingest invariants (100 random label maps, bitwise label I/O)")
