"""Command-line entry points: gen, eval, sweep, synth, serve.

Exit codes: 0 success, 1 partial (some images errored), 2 fatal.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import cv2
import numpy as np

from . import bench, ingest, sampler
from .sampler import SbrConfig
from .segmenter import SynthSpec, synth_generate


def _parse_points(text: str) -> tuple[int, int]:
    p, n = text.split(",")
    return int(p), int(n)


@click.group()
def main():
    """Point-prompt segmentation workbench."""


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--points", default="1,3", show_default=True, help="P,N")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
def gen(manifest, points, seed, out):
    """Generate prompt records (JSON lines) for every instance in a dataset."""
    p, n = _parse_points(points)
    mf = ingest.read_manifest(manifest)
    cfg = SbrConfig(n_positive=p, n_negative=n, seed=seed)
    errored = False
    with open(out, "w") as fh:
        for entry in mf.entries:
            image_id = Path(entry.path).stem
            try:
                labels = ingest.load_label_map(mf.label_path(entry))
                for ps in sampler.generate_prompts(labels, cfg, image_id):
                    fh.write(sampler.prompt_record(image_id, ps) + "\n")
            except Exception as e:
                click.echo(f"error on {image_id}: {e}", err=True)
                errored = True
    sys.exit(1 if errored else 0)


def _run_common(manifest, backend, seed, workers):
    return bench.RunConfig(
        manifest_path=manifest,
        backend=backend,
        sbr=SbrConfig(seed=seed),
        workers=workers,
    )


@main.command("eval")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--backend", default="baseline", show_default=True)
@click.option("--points", default="1,3", show_default=True, help="P,N")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "table"]))
def eval_cmd(manifest, backend, points, seed, out, workers, fmt):
    """Evaluate one (P,N) prompt configuration over a dataset."""
    cfg = _run_common(manifest, backend, seed, workers)
    try:
        report = bench.run_eval(cfg, _parse_points(points))
    except Exception as e:
        click.echo(f"fatal: {e}", err=True)
        sys.exit(2)
    bench.emit_report(report, fmt, out)
    for image_id, err in report.errors:
        click.echo(f"error on {image_id}: {err}", err=True)
    sys.exit(1 if report.errors else 0)


@main.command()
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--backend", default="baseline", show_default=True)
@click.option("--sweep", "sweep_text", default="1,0;1,3;3,0;3,3;5,0;5,3", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--workers", default=1, show_default=True, type=int)
@click.option("--format", "fmt", default="csv", type=click.Choice(["csv", "table"]))
def sweep(manifest, backend, sweep_text, seed, out, workers, fmt):
    """Run the (P,N) ablation grid and emit one row per pair."""
    cfg = _run_common(manifest, backend, seed, workers)
    cfg.sweep = bench.parse_sweep(sweep_text)
    try:
        table = bench.ablation_sweep(cfg)
    except Exception as e:
        click.echo(f"fatal: {e}", err=True)
        sys.exit(2)
    bench.emit_report(table, fmt, out)
    sys.exit(0)


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--n-images", default=20, show_default=True, type=int)
@click.option("--side", default=128, show_default=True, type=int)
@click.option("--instances", default=5, show_default=True, type=int)
@click.option("--noise", default=0.12, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
def synth(out, n_images, side, instances, noise, seed):
    """Emit a synthetic blob dataset plus its manifest."""
    root = Path(out)
    img_dir = root / "synth" / "test" / "images"
    lab_dir = root / "synth" / "test" / "labels"
    img_dir.mkdir(parents=True, exist_ok=True)
    lab_dir.mkdir(parents=True, exist_ok=True)
    for i in range(n_images):
        spec = SynthSpec(
            side=side, n_instances=instances, noise_sigma=noise, seed=seed * 100003 + i
        )
        image, labels = synth_generate(spec)
        u8 = np.floor(np.clip(image, 0, 1) * 255 + 0.5).astype(np.uint8)
        cv2.imwrite(str(img_dir / f"img_{i:03d}.png"), u8)
        ingest.save_label_map(labels, lab_dir / f"img_{i:03d}.png")
    manifest = ingest.build_manifest(root, fractions={"test": 1.0}, seed=seed)
    ingest.write_manifest(manifest, root / "manifest.tsv")
    click.echo(f"wrote {n_images} images under {root}")


@main.command()
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--remote-backend", default=None)
@click.option("--persist-dir", default=None, type=click.Path())
def serve(port, remote_backend, persist_dir):
    """Start the annotation service."""
    from .service import serve as run_serve

    run_serve(port=port, remote_backend=remote_backend, persist_dir=persist_dir)


if __name__ == "__main__":
    main()
