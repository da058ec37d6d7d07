"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import os
import sys

import click

from .imageprep import (
    EdgeSmoothParams,
    edge_smooth,
    find_duplicates,
    perceptual_hash,
    read_image,
    write_png,
)
from .trainer.data import IMAGE_EXTENSIONS


@click.group(no_args_is_help=False)
def cli():
    """toonlab: cartoon-dataset prep, GAN training, stylization, surveys."""


@cli.group()
def prep():
    """Cartoon-dataset preprocessing."""


def _list_images(directory):
    names = sorted(f for f in os.listdir(directory)
                   if f.lower().endswith(IMAGE_EXTENSIONS))
    if not names:
        raise click.ClickException(f"{directory}: no images found")
    return names


@prep.command("smooth")
@click.option("--in", "in_dir", required=True,
              type=click.Path(exists=True, file_okay=False), help="Input image directory.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory for smoothed PNGs.")
@click.option("--low", default=150.0, show_default=True, help="Canny low threshold.")
@click.option("--high", default=500.0, show_default=True, help="Canny high threshold.")
@click.option("--kernel", default=3, show_default=True, help="Gaussian kernel side (odd).")
def prep_smooth(in_dir, out_dir, low, high, kernel):
    """Blur each image inside its dilated edge mask."""
    params = EdgeSmoothParams(canny_low=low, canny_high=high, blur_kernel=kernel)
    os.makedirs(out_dir, exist_ok=True)
    count = 0
    for name in _list_images(in_dir):
        img = read_image(os.path.join(in_dir, name))
        out = edge_smooth(img, params)
        stem = os.path.splitext(name)[0]
        write_png(out, os.path.join(out_dir, stem + ".png"))
        count += 1
    click.echo(f"smoothed {count} image(s) into {out_dir}")


@prep.command("dedup")
@click.option("--in", "in_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--threshold", default=8, show_default=True,
              help="Max Hamming distance for a duplicate pair.")
@click.option("--report", "report_path", default="dupes.txt", show_default=True)
def prep_dedup(in_dir, threshold, report_path):
    """Find near-duplicate images by 64-bit difference hash."""
    hashes = []
    for name in _list_images(in_dir):
        hashes.append((name, perceptual_hash(read_image(os.path.join(in_dir, name)))))
    pairs = find_duplicates(hashes, threshold)
    with open(report_path, "w", encoding="utf-8") as fh:
        for a, b, dist in pairs:
            fh.write(f"{a}\t{b}\t{dist}\n")
    click.echo(f"{len(pairs)} duplicate pair(s) among {len(hashes)} images "
               f"(threshold {threshold}); report: {report_path}")


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="Key-value training config file.")
@click.option("--out", "out_dir", default="runs/train", show_default=True,
              help="Directory for checkpoints and stats.csv.")
@click.option("--resume", "resume_path", default=None, type=click.Path(exists=True),
              help="Checkpoint to resume from.")
def train(config_path, out_dir, resume_path):
    """Run the warm-up and adversarial training phases."""
    from .models import build_discriminator, build_generator
    from .trainer import parse_config
    from .trainer import train as run_training

    cfg = parse_config(config_path)
    g = build_generator(cfg.seed)
    d = build_discriminator(cfg.seed + 1)
    final_path, stats = run_training(g, d, cfg, out_dir, resume_from=resume_path)
    click.echo(f"trained {len(stats)} epoch(s); final checkpoint: {final_path}")


@cli.command()
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True)
def stylize(ckpt_path, in_path, out_path):
    """Cartoonize one image with a trained generator checkpoint."""
    from .trainer import stylize as run_stylize

    img = read_image(in_path)
    out = run_stylize(ckpt_path, img)
    write_png(out, out_path)
    click.echo(f"wrote {out_path}")


@cli.command()
@click.option("--float64", "use_float64", is_flag=True,
              help="Run in float64 at tolerance 1e-5 instead of float32 at 1e-3.")
@click.pass_context
def gradcheck(ctx, use_float64):
    """Check every layer's analytic gradient against finite differences."""
    import numpy as np

    from .gradsuite import TOLERANCES, run_layer_suite

    dtype = np.float64 if use_float64 else np.float32
    tol = TOLERANCES[dtype]
    errors = run_layer_suite(dtype=dtype)
    failed = False
    for name, err in errors.items():
        status = "ok" if err <= tol else "FAIL"
        click.echo(f"{name:<24} max rel err {err:.3e}  [{status}]")
        failed = failed or err > tol
    if failed:
        ctx.exit(2)


@cli.group()
def survey():
    """Ranking-survey service and reporting."""


@survey.command("serve")
@click.option("--def", "def_path", required=True, type=click.Path(exists=True),
              help="Survey definition JSON.")
@click.option("--store", "store_path", required=True, help="Append-only response log.")
@click.option("--bind", default="127.0.0.1:8765", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(file_okay=False),
              help="Optional static directory with the browser UI.")
def survey_serve(def_path, store_path, bind, ui_dir):
    """Serve the survey over HTTP until interrupted."""
    from .surveycore import load_definition, serve

    definition = load_definition(def_path)
    click.echo(f"serving survey {def_path} on {bind} (log: {store_path})")
    serve(definition, store_path, bind_address=bind, ui_dir=ui_dir)


@survey.command("report")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
def survey_report(store_path):
    """Print the mean-rank report for a response log."""
    from .surveycore import ResponseLog, mean_rank_report

    log = ResponseLog(store_path)
    click.echo(mean_rank_report(log.effective_records()).render_text())


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show(file=sys.stderr)
        return 1
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
