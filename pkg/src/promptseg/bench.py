"""Benchmark harness: prompt generation, segmentation, evaluation, sweeps.

A sweep reproduces the (P positive, N negative) ablation grid: each pair is
evaluated with its own deterministically derived seed so changing N never
reshuffles the positive draws of another row.
"""

from __future__ import annotations

import datetime
import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from . import grid, ingest, metrics, sampler
from .metrics import EvalReport, ImageResult
from .sampler import PromptSet, SbrConfig
from .segmenter import BaselineBackend, RemoteBackend

DEFAULT_SWEEP = [(1, 0), (1, 3), (3, 0), (3, 3), (5, 0), (5, 3)]


@dataclass
class RunConfig:
    manifest_path: str
    backend: str = "baseline"  # "baseline" | "remote:<url>"
    sbr: SbrConfig = field(default_factory=SbrConfig)
    sweep: list[tuple[int, int]] = field(default_factory=lambda: list(DEFAULT_SWEEP))
    out_dir: str = "."
    workers: int = 1

    def __post_init__(self):
        if not self.sweep:
            raise ValueError("sweep must be non-empty")
        if any(p < 1 for p, _ in self.sweep):
            raise ValueError("every sweep pair needs n_positive >= 1")


@dataclass
class SweepTable:
    rows: list[tuple[int, int, float, float]]  # (P, N, dice, sa)
    seed: int
    backend_id: str
    timestamp: str


def make_backend(spec: str):
    if spec == "baseline":
        return BaselineBackend()
    if spec == "oracle":
        return OracleBackend()
    if spec.startswith("remote:"):
        return RemoteBackend(spec[len("remote:"):])
    raise ValueError(f"unknown backend spec: {spec}")


class OracleBackend:
    """Returns the true instance mask; closes the loop for pipeline checks."""

    id = "oracle"
    kind = "oracle"

    def __init__(self):
        self._labels = None

    def bind(self, image_id: str, labels: np.ndarray):
        self._labels = labels

    def __call__(self, image, prompts: PromptSet) -> np.ndarray:
        return grid.extract_instance(self._labels, prompts.instance_id)


class EmptyBackend:
    """Always predicts background; useful as a floor in tests."""

    id = "empty"
    kind = "empty"

    def __call__(self, image, prompts: PromptSet) -> np.ndarray:
        h, w = np.asarray(image).shape[:2]
        return np.zeros((h, w), dtype=bool)


def pair_seed(base_seed: int, pair: tuple[int, int]) -> int:
    """Stable per-(P,N) seed so each ablation row is independently reproducible."""
    key = f"{base_seed}:pair:{pair[0]}:{pair[1]}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")


def load_sample(manifest: ingest.Manifest, entry: ingest.ManifestEntry):
    labels = ingest.load_label_map(manifest.label_path(entry))
    img = cv2.imread(str(manifest.image_path(entry)), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise IOError(f"cannot read image for {entry.path}")
    if img.ndim == 3:
        img = cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
    return img, labels


def assemble_prediction(
    shape, results: list[tuple[int, np.ndarray, np.ndarray | None]]
) -> np.ndarray:
    """Merge per-instance masks into one label map.

    Overlapping pixels go to the instance with the lower competition cost;
    without cost maps, ties fall to the lowest instance id.
    """
    pred = np.zeros(shape, dtype=np.int32)
    best = np.full(shape, np.inf)
    for iid, mask, cost in sorted(results, key=lambda r: r[0]):
        c = cost if cost is not None else np.zeros(shape)
        take = mask & (c < best)
        pred[take] = iid
        best[take] = c[take]
    return pred


def evaluate_one_image(
    backend, image, labels, image_id: str, cfg: SbrConfig
) -> ImageResult:
    """Prompt, segment, and score every instance of one image."""
    if hasattr(backend, "bind"):
        backend.bind(image_id, labels)
    prompts = sampler.generate_prompts(labels, cfg, image_id)
    results = []
    for ps in prompts:
        if hasattr(backend, "segment_with_cost"):
            mask, cost = backend.segment_with_cost(image, ps)
        else:
            mask, cost = backend(image, ps), None
        results.append((ps.instance_id, mask, cost))
    pred = assemble_prediction(labels.shape, results)
    return metrics.evaluate_image(pred, labels, image_id)


def run_eval(cfg: RunConfig, pair: tuple[int, int]) -> EvalReport:
    """Evaluate one (P, N) pair over every image in the manifest.

    Images that error are recorded in the report (never silently dropped);
    the aggregates cover the successfully evaluated images.
    """
    manifest = ingest.read_manifest(cfg.manifest_path)
    seed = pair_seed(cfg.sbr.seed, pair)
    sbr = SbrConfig(
        n_positive=pair[0],
        n_negative=pair[1],
        erosion_iterations=cfg.sbr.erosion_iterations,
        band_lo=cfg.sbr.band_lo,
        band_hi=cfg.sbr.band_hi,
        external_dilate_iterations=cfg.sbr.external_dilate_iterations,
        seed=seed,
    )

    def one(entry):
        backend = make_backend(cfg.backend)
        image_id = Path(entry.path).stem
        try:
            image, labels = load_sample(manifest, entry)
            return image_id, evaluate_one_image(backend, image, labels, image_id, sbr), None
        except Exception as e:  # recorded per image, loop continues
            return image_id, None, f"{type(e).__name__}: {e}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(one, manifest.entries))
    else:
        outcomes = [one(e) for e in manifest.entries]

    outcomes.sort(key=lambda o: o[0])
    rows = [r for _, r, err in outcomes if err is None]
    errors = [(iid, err) for iid, _, err in outcomes if err is not None]
    return metrics.aggregate(rows, errors=errors)


def ablation_sweep(cfg: RunConfig) -> SweepTable:
    rows = []
    for pair in cfg.sweep:
        report = run_eval(cfg, pair)
        rows.append((pair[0], pair[1], report.dataset_dice, report.dataset_sa))
    return SweepTable(
        rows=rows,
        seed=cfg.sbr.seed,
        backend_id=cfg.backend,
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )


def sweep_to_csv(table: SweepTable) -> str:
    """Byte-deterministic CSV; the volatile timestamp is deliberately omitted."""
    lines = [f"# seed={table.seed} backend={table.backend_id}", "P,N,dice,sa"]
    for p, n, d, sa in table.rows:
        lines.append(f"{p},{n},{d:.3f},{sa:.3f}")
    return "\n".join(lines) + "\n"


def sweep_to_table(table: SweepTable) -> str:
    lines = [
        f"seed={table.seed} backend={table.backend_id} time={table.timestamp}",
        f"{'P':>3} {'N':>3} {'dice':>6} {'sa':>6}",
    ]
    for p, n, d, sa in table.rows:
        lines.append(f"{p:>3} {n:>3} {d:>6.3f} {sa:>6.3f}")
    return "\n".join(lines) + "\n"


def parse_sweep(text: str) -> list[tuple[int, int]]:
    """Parse a sweep grid like "1,0;1,3;3,0"."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        p, n = chunk.split(",")
        pairs.append((int(p), int(n)))
    return pairs


def emit_report(obj, fmt: str, path) -> None:
    """Write an EvalReport or SweepTable as csv or an aligned text table."""
    if isinstance(obj, EvalReport):
        text = metrics.report_to_csv(obj) if fmt == "csv" else metrics.report_to_table(obj)
    elif isinstance(obj, SweepTable):
        text = sweep_to_csv(obj) if fmt == "csv" else sweep_to_table(obj)
    else:
        raise TypeError(f"cannot emit {type(obj).__name__}")
    Path(path).write_text(text)
